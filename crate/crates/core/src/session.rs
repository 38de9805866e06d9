//! Trading-session timetable. Segments are concatenated into one session
//! clock, so the default 09:30-11:30 / 13:00-15:00 day becomes minutes
//! 1..=240 with the lunch break collapsed to an instant at minute 120.

use std::fmt;
use std::str::FromStr;

use crate::types::MINUTE_MS;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    /// `(start, end)` in minutes after midnight.
    segments: Vec<(u32, u32)>,
}

impl Session {
    pub fn new(segments: Vec<(u32, u32)>) -> Result<Self, String> {
        if segments.is_empty() {
            return Err("session needs at least one segment".into());
        }
        for (i, &(start, end)) in segments.iter().enumerate() {
            if start >= end {
                return Err(format!("segment {} ends before it starts", i + 1));
            }
            if end > 24 * 60 {
                return Err(format!("segment {} runs past midnight", i + 1));
            }
            if i > 0 && start < segments[i - 1].1 {
                return Err(format!("segment {} overlaps the previous one", i + 1));
            }
        }
        Ok(Self { segments })
    }

    /// Number of 1-minute intervals on the session clock (T).
    pub fn total_minutes(&self) -> usize {
        self.segments.iter().map(|&(s, e)| (e - s) as usize).sum()
    }

    pub fn session_ms(&self) -> u64 {
        self.total_minutes() as u64 * MINUTE_MS
    }

    pub fn contains(&self, ts: u64) -> bool {
        ts < self.session_ms()
    }

    /// Session-clock instants (ms) where one segment ends and the next begins.
    pub fn breaks(&self) -> Vec<u64> {
        let mut acc = 0u64;
        let mut out = Vec::new();
        for &(s, e) in &self.segments[..self.segments.len() - 1] {
            acc += u64::from(e - s) * MINUTE_MS;
            out.push(acc);
        }
        out
    }

    /// True if `[start, end)` spans a segment break.
    pub fn straddles_break(&self, start: u64, end: u64) -> bool {
        self.breaks().iter().any(|&b| start < b && b < end)
    }
}

impl Default for Session {
    fn default() -> Self {
        Self { segments: vec![(9 * 60 + 30, 11 * 60 + 30), (13 * 60, 15 * 60)] }
    }
}

fn parse_hhmm(s: &str) -> Result<u32, String> {
    let (h, m) = s.trim().split_once(':').ok_or_else(|| format!("expected HH:MM, got `{s}`"))?;
    let h: u32 = h.parse().map_err(|_| format!("bad hour in `{s}`"))?;
    let m: u32 = m.parse().map_err(|_| format!("bad minute in `{s}`"))?;
    if h > 24 || m > 59 {
        return Err(format!("time out of range: `{s}`"));
    }
    Ok(h * 60 + m)
}

impl FromStr for Session {
    type Err = String;

    /// Parses `09:30-11:30,13:00-15:00`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let segments = s
            .split(',')
            .map(|seg| {
                let (a, b) = seg.split_once('-').ok_or_else(|| format!("expected START-END, got `{seg}`"))?;
                Ok((parse_hhmm(a)?, parse_hhmm(b)?))
            })
            .collect::<Result<Vec<_>, String>>()?;
        Session::new(segments)
    }
}

impl fmt::Display for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, e)) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{:02}:{:02}-{:02}:{:02}", s / 60, s % 60, e / 60, e % 60)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_240_minutes_with_lunch_break() {
        let s = Session::default();
        assert_eq!(s.total_minutes(), 240);
        assert_eq!(s.breaks(), vec![120 * MINUTE_MS]);
        assert!(s.straddles_break(119 * MINUTE_MS + 1, 120 * MINUTE_MS + 1));
        assert!(!s.straddles_break(119 * MINUTE_MS, 120 * MINUTE_MS));
        assert_eq!(s.to_string(), "09:30-11:30,13:00-15:00");
    }

    #[test]
    fn parse_round_trip_and_validation() {
        let s: Session = "09:30-11:30,13:00-15:00".parse().unwrap();
        assert_eq!(s, Session::default());
        assert!("10:00-09:00".parse::<Session>().is_err());
        assert!("09:00-11:00,10:00-12:00".parse::<Session>().is_err());
        assert!("0930-1130".parse::<Session>().is_err());
    }
}

use crate::classifier::ClassifiedOrder;
use crate::error::Error;
use crate::replay::DayReplay;
use crate::session::Session;
use crate::types::{minute_of, DayId, OrderType, MINUTE_MS};

/// A raw book observation and the 1-minute interval it falls in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub tau: usize,
}

/// Arrivals in one minute-clock interval and the seasonal intervals it
/// overlaps (equal when the interval is aligned to the minute grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntensityObs {
    pub count: u32,
    pub tau_lo: usize,
    pub tau_hi: usize,
}

#[derive(Debug, Clone)]
pub struct WindowConfig {
    pub update_half_width: usize,
    pub minute_half_width: usize,
    pub session: Session,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { update_half_width: 20, minute_half_width: 30, session: Session::default() }
    }
}

/// Observations around one effective market order. Masked positions are
/// `None` and never enter an average.
#[derive(Debug, Clone, PartialEq)]
pub struct EventWindow {
    pub anchor: ClassifiedOrder,
    /// Index of the anchor's own update on the day's update clock.
    pub anchor_update: usize,
    /// s̃(t) in ticks for t = -h..=h, at index `t + h`.
    pub spread: Vec<Option<Sample>>,
    pub depth_bid: Vec<Option<Sample>>,
    pub depth_ask: Vec<Option<Sample>>,
    /// One series per type of [`OrderType::RECOVERY`]; index `t + m` for
    /// t < 0 and `t + m - 1` for t > 0.
    pub intensity: Vec<Vec<Option<IntensityObs>>>,
    /// Other anchors of the same day whose update lies within ±h updates.
    pub overlap: usize,
}

impl EventWindow {
    /// A fully masked window.
    pub fn empty(
        anchor: ClassifiedOrder,
        anchor_update: usize,
        update_half_width: usize,
        minute_half_width: usize,
    ) -> Self {
        let n = 2 * update_half_width + 1;
        Self {
            anchor,
            anchor_update,
            spread: vec![None; n],
            depth_bid: vec![None; n],
            depth_ask: vec![None; n],
            intensity: vec![vec![None; 2 * minute_half_width]; OrderType::RECOVERY.len()],
            overlap: 0,
        }
    }

    pub fn day(&self) -> DayId {
        self.anchor.event.day
    }

    pub fn update_half_width(&self) -> usize {
        (self.spread.len() - 1) / 2
    }

    pub fn minute_half_width(&self) -> usize {
        self.intensity.first().map_or(0, |s| s.len() / 2)
    }

    fn update_slot(&self, t: i32) -> Option<usize> {
        let idx = t + self.update_half_width() as i32;
        (0..self.spread.len() as i32).contains(&idx).then_some(idx as usize)
    }

    pub fn spread_at(&self, t: i32) -> Option<Sample> {
        self.spread[self.update_slot(t)?]
    }

    pub fn depth_bid_at(&self, t: i32) -> Option<Sample> {
        self.depth_bid[self.update_slot(t)?]
    }

    pub fn depth_ask_at(&self, t: i32) -> Option<Sample> {
        self.depth_ask[self.update_slot(t)?]
    }

    pub fn intensity_series(&self, k: OrderType) -> Option<&[Option<IntensityObs>]> {
        let i = OrderType::RECOVERY.iter().position(|&r| r == k)?;
        Some(&self.intensity[i])
    }

    pub fn intensity_at(&self, k: OrderType, t: i32) -> Option<IntensityObs> {
        let m = self.minute_half_width() as i32;
        let slot = match t {
            0 => return None,
            t if t < 0 => t + m,
            t => t + m - 1,
        };
        if !(0..2 * m).contains(&slot) {
            return None;
        }
        self.intensity_series(k)?[slot as usize]
    }
}

/// `(timestamp, event_index)` of one order type's submits, in stream order.
type Arrivals = Vec<(u64, usize)>;

fn count_in(arrivals: &[(u64, usize)], lo: u64, hi: u64) -> u32 {
    let a = arrivals.partition_point(|e| e.0 < lo);
    let b = arrivals.partition_point(|e| e.0 < hi);
    (b - a) as u32
}

/// Builds the window of every effective market order of one replayed day.
pub fn collect_windows(replay: &DayReplay, cfg: &WindowConfig) -> Result<Vec<EventWindow>, Error> {
    let h = cfg.update_half_width as isize;
    let m = cfg.minute_half_width as i64;
    let t_len = cfg.session.total_minutes();
    let session_ms = cfg.session.session_ms() as i64;
    let breaks = cfg.session.breaks();

    let arrivals: Vec<Arrivals> = OrderType::RECOVERY
        .iter()
        .map(|&k| {
            replay
                .orders
                .iter()
                .filter(|o| o.order.order_type == k)
                .map(|o| (o.order.event.timestamp_ms, o.event_index))
                .collect()
        })
        .collect();

    let anchors: Vec<_> = replay.orders.iter().filter(|o| o.order.order_type.is_effective_market()).collect();
    let anchor_updates = anchors
        .iter()
        .map(|o| {
            o.update.ok_or_else(|| {
                Error::Invariant(format!(
                    "day {}: effective market order {} caused no best-limit update",
                    replay.day, o.order.event.order_id
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut windows = Vec::with_capacity(anchors.len());
    for (a, &j) in anchors.iter().zip(&anchor_updates) {
        let order = &a.order;
        let mut w = EventWindow::empty(*order, j, cfg.update_half_width, cfg.minute_half_width);
        let lo = anchor_updates.partition_point(|&u| (u as isize) < j as isize - h);
        let hi = anchor_updates.partition_point(|&u| u as isize <= j as isize + h);
        w.overlap = hi - lo - 1;

        let t0_ms = order.event.timestamp_ms;
        for t in -h..=h {
            let idx = j as isize + t - 1;
            let Some(state) = replay.state_after(idx) else { continue };
            let tau = if t == 0 {
                minute_of(t0_ms)
            } else if idx < 0 {
                1
            } else {
                minute_of(replay.updates[idx as usize].timestamp_ms)
            };
            if tau > t_len {
                continue;
            }
            if t == 0 && state != order.pre_top {
                return Err(Error::Invariant(format!(
                    "day {}: book before order {} disagrees with the update clock",
                    replay.day, order.event.order_id
                )));
            }
            let slot = (t + h) as usize;
            w.spread[slot] = state.spread().map(|s| Sample { value: s as f64, tau });
            w.depth_bid[slot] = state.bid.map(|q| Sample { value: q.size as f64, tau });
            w.depth_ask[slot] = state.ask.map(|q| Sample { value: q.size as f64, tau });
        }

        let t0 = t0_ms as i64;
        for (series, arr) in w.intensity.iter_mut().zip(&arrivals) {
            let split = arr.partition_point(|e| e.1 < a.event_index);
            let (before, after) = arr.split_at(split);
            for (slot, t) in (-m..=-1).chain(1..=m).enumerate() {
                let start = if t < 0 { t0 + t * MINUTE_MS as i64 } else { t0 + (t - 1) * MINUTE_MS as i64 };
                let end = start + MINUTE_MS as i64;
                if start < 0 || end > session_ms {
                    continue;
                }
                let (start, end) = (start as u64, end as u64);
                if breaks.iter().any(|&b| start < b && b < end) {
                    continue;
                }
                // Arrivals sharing the anchor's timestamp but preceding it in
                // the stream belong to [-1].
                let count = if t < 0 {
                    count_in(before, start, if t == -1 { end + 1 } else { end })
                } else {
                    count_in(after, start, end)
                };
                let tau_lo = minute_of(start);
                let tau_hi = if start % MINUTE_MS == 0 { tau_lo } else { tau_lo + 1 };
                series[slot] = Some(IntensityObs { count, tau_lo, tau_hi });
            }
        }
        windows.push(w);
    }
    Ok(windows)
}

//! Event studies of spread, depth and limit-order intensity around
//! effective market orders.
//!
//! Spread and depth run on the best-limit-update clock: t = 0 is the book
//! just before the anchor order and t = 1 is the state after the update the
//! anchor itself caused. Intensity runs on a minute clock anchored at the
//! anchor's transaction time, with no interval at t = 0.
//!
//! Each sample is divided by its seasonal factor before averaging. Spread
//! and depth curves are then normalized so the t = 0 average is exactly 100.

mod grouping;
mod study;
mod window;

pub use grouping::{BySideBucket, ByType, ByTypeBucket, Grouping, GroupingRegistry, DEFAULT_GROUPING};
pub use study::{run_study, EventStudyResult, StudyFactors, StudyReport};
pub use window::{collect_windows, EventWindow, IntensityObs, Sample, WindowConfig};

use crate::seasonality::SeasonalFactors;
use crate::types::{OrderType, Side};

/// Offsets on the update clock: -h..=h.
pub fn update_offsets(half_width: usize) -> Vec<i32> {
    let h = half_width as i32;
    (-h..=h).collect()
}

/// Offsets on the minute clock: -m..=-1, 1..=m.
pub fn minute_offsets(half_width: usize) -> Vec<i32> {
    let m = half_width as i32;
    (-m..=-1).chain(1..=m).collect()
}

/// An averaged curve with the number of observations behind each point.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub offsets: Vec<i32>,
    /// `None` where no valid observation exists.
    pub values: Vec<Option<f64>>,
    pub counts: Vec<usize>,
    /// Observations dropped because their seasonal factor hit the floor.
    pub flagged: usize,
}

impl Curve {
    pub fn at(&self, t: i32) -> Option<f64> {
        self.offsets.iter().position(|&o| o == t).and_then(|i| self.values[i])
    }

    pub fn count_at(&self, t: i32) -> usize {
        self.offsets.iter().position(|&o| o == t).map_or(0, |i| self.counts[i])
    }
}

/// Streaming per-offset sums. Merging two accumulators is associative and
/// commutative up to floating-point rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanAccumulator {
    offsets: Vec<i32>,
    sums: Vec<f64>,
    counts: Vec<usize>,
    flagged: usize,
}

impl MeanAccumulator {
    pub fn new(offsets: Vec<i32>) -> Self {
        let n = offsets.len();
        Self { offsets, sums: vec![0.0; n], counts: vec![0; n], flagged: 0 }
    }

    pub fn push(&mut self, slot: usize, value: f64) {
        self.sums[slot] += value;
        self.counts[slot] += 1;
    }

    pub fn flag(&mut self) {
        self.flagged += 1;
    }

    pub fn merge(&mut self, other: &MeanAccumulator) {
        debug_assert_eq!(self.offsets, other.offsets);
        for (s, o) in self.sums.iter_mut().zip(&other.sums) {
            *s += o;
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.flagged += other.flagged;
    }

    fn means(&self) -> Vec<Option<f64>> {
        self.sums.iter().zip(&self.counts).map(|(s, &c)| (c > 0).then(|| s / c as f64)).collect()
    }

    /// Plain per-offset means.
    pub fn finish_mean(&self) -> Curve {
        Curve {
            offsets: self.offsets.clone(),
            values: self.means(),
            counts: self.counts.clone(),
            flagged: self.flagged,
        }
    }

    /// Means rescaled so the value at offset 0 is exactly 100.
    pub fn finish_normalized(&self) -> Curve {
        let means = self.means();
        let base = self.offsets.iter().position(|&o| o == 0).and_then(|i| means[i]).filter(|b| *b != 0.0);
        let values = means.iter().map(|m| Some(100.0 * (m.as_ref()? / base?))).collect();
        Curve { offsets: self.offsets.clone(), values, counts: self.counts.clone(), flagged: self.flagged }
    }
}

/// Which book series of a window feeds a level curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelSeries {
    Spread,
    Depth(Side),
}

impl LevelSeries {
    pub(crate) fn samples(self, w: &EventWindow) -> &[Option<Sample>] {
        match self {
            LevelSeries::Spread => &w.spread,
            LevelSeries::Depth(Side::Buy) => &w.depth_bid,
            LevelSeries::Depth(Side::Sell) => &w.depth_ask,
        }
    }
}

/// Adds one window's deseasonalized samples of `series`.
pub fn accumulate_level(acc: &mut MeanAccumulator, w: &EventWindow, series: LevelSeries, factors: &SeasonalFactors) {
    for (slot, sample) in series.samples(w).iter().enumerate() {
        let Some(s) = sample else { continue };
        let (f, floored) = factors.get(s.tau);
        if floored {
            acc.flag();
        } else {
            acc.push(slot, s.value / f);
        }
    }
}

/// Adds one window's deseasonalized arrival counts of limit-order type `k`.
pub fn accumulate_intensity(acc: &mut MeanAccumulator, w: &EventWindow, k: OrderType, factors: &SeasonalFactors) {
    let Some(series) = w.intensity_series(k) else { return };
    for (slot, obs) in series.iter().enumerate() {
        let Some(o) = obs else { continue };
        let (lo, lo_floored) = factors.get(o.tau_lo);
        let (hi, hi_floored) = factors.get(o.tau_hi);
        if lo_floored && hi_floored {
            acc.flag();
        } else {
            acc.push(slot, 2.0 * f64::from(o.count) / (lo + hi));
        }
    }
}

fn level_curve<'a>(
    windows: impl IntoIterator<Item = &'a EventWindow>,
    series: LevelSeries,
    factors: &SeasonalFactors,
    half_width: usize,
) -> Curve {
    let mut acc = MeanAccumulator::new(update_offsets(half_width));
    for w in windows {
        accumulate_level(&mut acc, w, series, factors);
    }
    acc.finish_normalized()
}

/// S(t) = 100 ⟨s̃(t)/s(τ_t)⟩ / ⟨s̃(0)/s(τ_0)⟩ over t = -h..=h.
pub fn adjusted_spread_curve(windows: &[EventWindow], factors: &SeasonalFactors) -> Curve {
    let h = windows.first().map_or(0, EventWindow::update_half_width);
    level_curve(windows, LevelSeries::Spread, factors, h)
}

/// D(t) for the best-quote depth of one side, normalized like the spread.
pub fn adjusted_depth_curve(windows: &[EventWindow], factors: &SeasonalFactors, side: Side) -> Curve {
    let h = windows.first().map_or(0, EventWindow::update_half_width);
    level_curve(windows, LevelSeries::Depth(side), factors, h)
}

/// Λ_k([t]) = ⟨2 λ̃([t]) / (λ(τ⁻) + λ(τ⁺))⟩ over the minute offsets.
pub fn adjusted_intensity_curve(windows: &[EventWindow], factors: &SeasonalFactors, k: OrderType) -> Curve {
    let m = windows.first().map_or(0, EventWindow::minute_half_width);
    let mut acc = MeanAccumulator::new(minute_offsets(m));
    for w in windows {
        accumulate_intensity(&mut acc, w, k, factors);
    }
    acc.finish_mean()
}

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use super::{
    accumulate_intensity, accumulate_level, collect_windows, minute_offsets, update_offsets, Curve, EventWindow,
    Grouping, LevelSeries, MeanAccumulator, WindowConfig,
};
use crate::classifier::SpreadBuckets;
use crate::error::Error;
use crate::replay::DayReplay;
use crate::seasonality::{Metric, SeasonalFactors, SeasonalitySet};
use crate::types::{OrderType, Side};

/// Seasonal divisors for every series of a study.
#[derive(Debug, Clone)]
pub struct StudyFactors {
    pub spread: SeasonalFactors,
    pub depth_bid: SeasonalFactors,
    pub depth_ask: SeasonalFactors,
    /// In the order of [`OrderType::RECOVERY`].
    pub intensity: Vec<SeasonalFactors>,
}

impl StudyFactors {
    pub fn from_models(set: &SeasonalitySet) -> Result<Self, Error> {
        let get = |m: Metric| {
            set.get(m)
                .map(SeasonalFactors::from_model)
                .ok_or_else(|| Error::Input(format!("no seasonality model for `{m}`")))
        };
        Ok(Self {
            spread: get(Metric::Spread)?,
            depth_bid: get(Metric::DepthBid)?,
            depth_ask: get(Metric::DepthAsk)?,
            intensity: OrderType::RECOVERY.iter().map(|&k| get(Metric::Intensity(k))).collect::<Result<_, _>>()?,
        })
    }

    /// No deseasonalization.
    pub fn flat(t_len: usize) -> Self {
        Self {
            spread: SeasonalFactors::flat(t_len),
            depth_bid: SeasonalFactors::flat(t_len),
            depth_ask: SeasonalFactors::flat(t_len),
            intensity: vec![SeasonalFactors::flat(t_len); OrderType::RECOVERY.len()],
        }
    }
}

/// Averaged curves of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStudyResult {
    pub group: String,
    pub anchors: usize,
    /// Mean number of other anchors inside each window.
    pub mean_overlap: f64,
    pub spread: Curve,
    pub depth_bid: Curve,
    pub depth_ask: Curve,
    /// Λ_k for each type of [`OrderType::RECOVERY`].
    pub intensity: Vec<(OrderType, Curve)>,
}

impl EventStudyResult {
    pub fn intensity_curve(&self, k: OrderType) -> Option<&Curve> {
        self.intensity.iter().find(|(t, _)| *t == k).map(|(_, c)| c)
    }
}

#[derive(Debug, Clone)]
struct GroupAccumulator {
    anchors: usize,
    overlap: usize,
    spread: MeanAccumulator,
    depth_bid: MeanAccumulator,
    depth_ask: MeanAccumulator,
    intensity: Vec<MeanAccumulator>,
}

impl GroupAccumulator {
    fn new(cfg: &WindowConfig) -> Self {
        let u = update_offsets(cfg.update_half_width);
        let m = minute_offsets(cfg.minute_half_width);
        Self {
            anchors: 0,
            overlap: 0,
            spread: MeanAccumulator::new(u.clone()),
            depth_bid: MeanAccumulator::new(u.clone()),
            depth_ask: MeanAccumulator::new(u),
            intensity: vec![MeanAccumulator::new(m); OrderType::RECOVERY.len()],
        }
    }

    fn add(&mut self, w: &EventWindow, f: &StudyFactors) {
        self.anchors += 1;
        self.overlap += w.overlap;
        accumulate_level(&mut self.spread, w, LevelSeries::Spread, &f.spread);
        accumulate_level(&mut self.depth_bid, w, LevelSeries::Depth(Side::Buy), &f.depth_bid);
        accumulate_level(&mut self.depth_ask, w, LevelSeries::Depth(Side::Sell), &f.depth_ask);
        for ((acc, &k), factors) in self.intensity.iter_mut().zip(&OrderType::RECOVERY).zip(&f.intensity) {
            accumulate_intensity(acc, w, k, factors);
        }
    }

    fn merge(&mut self, other: &GroupAccumulator) {
        self.anchors += other.anchors;
        self.overlap += other.overlap;
        self.spread.merge(&other.spread);
        self.depth_bid.merge(&other.depth_bid);
        self.depth_ask.merge(&other.depth_ask);
        for (a, b) in self.intensity.iter_mut().zip(&other.intensity) {
            a.merge(b);
        }
    }

    fn finish(&self, group: String) -> EventStudyResult {
        EventStudyResult {
            group,
            anchors: self.anchors,
            mean_overlap: if self.anchors > 0 { self.overlap as f64 / self.anchors as f64 } else { 0.0 },
            spread: self.spread.finish_normalized(),
            depth_bid: self.depth_bid.finish_normalized(),
            depth_ask: self.depth_ask.finish_normalized(),
            intensity: OrderType::RECOVERY.iter().zip(&self.intensity).map(|(&k, a)| (k, a.finish_mean())).collect(),
        }
    }
}

/// Results of one study, keyed by group.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub grouping: String,
    pub results: BTreeMap<String, EventStudyResult>,
    /// Expected groups that received no anchors.
    pub warnings: Vec<String>,
    pub windows: usize,
}

impl StudyReport {
    /// Long-format export: `group,metric,series,t,value,n`, rows ordered by
    /// group, then spread, depth (bid, ask) and intensity (by type), then t.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "metric", "series", "t", "value", "n"])?;
        for (group, r) in &self.results {
            let mut curves: Vec<(&str, String, &Curve)> = vec![
                ("spread", "all".into(), &r.spread),
                ("depth", "bid".into(), &r.depth_bid),
                ("depth", "ask".into(), &r.depth_ask),
            ];
            curves.extend(r.intensity.iter().map(|(k, c)| ("intensity", k.to_string(), c)));
            for (metric, series, curve) in curves {
                for ((t, v), n) in curve.offsets.iter().zip(&curve.values).zip(&curve.counts) {
                    let value = v.map(|v| v.to_string()).unwrap_or_default();
                    w.write_record([group.as_str(), metric, &series, &t.to_string(), &value, &n.to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Collects windows for every replayed day and averages them per group.
/// Days are processed in parallel and merged in day order.
pub fn run_study(
    replays: &[DayReplay],
    factors: &StudyFactors,
    grouping: &dyn Grouping,
    buckets: &SpreadBuckets,
    cfg: &WindowConfig,
) -> Result<StudyReport, Error> {
    let per_day: Vec<(BTreeMap<String, GroupAccumulator>, usize)> = replays
        .par_iter()
        .map(|r| {
            let windows = collect_windows(r, cfg)?;
            let mut groups: BTreeMap<String, GroupAccumulator> = BTreeMap::new();
            for w in &windows {
                if let Some(key) = grouping.key(&w.anchor, buckets) {
                    groups.entry(key).or_insert_with(|| GroupAccumulator::new(cfg)).add(w, factors);
                }
            }
            Ok((groups, windows.len()))
        })
        .collect::<Result<_, Error>>()?;

    let mut merged: BTreeMap<String, GroupAccumulator> = BTreeMap::new();
    let mut windows = 0;
    for (groups, n) in per_day {
        windows += n;
        for (key, acc) in groups {
            match merged.get_mut(&key) {
                Some(m) => m.merge(&acc),
                None => {
                    merged.insert(key, acc);
                }
            }
        }
    }
    let warnings = grouping
        .expected_keys(buckets)
        .into_iter()
        .filter(|k| !merged.contains_key(k))
        .map(|k| format!("group `{k}` has no anchors; omitted"))
        .collect();
    Ok(StudyReport {
        grouping: grouping.name().to_string(),
        results: merged.into_iter().map(|(k, acc)| (k.clone(), acc.finish(k))).collect(),
        warnings,
        windows,
    })
}

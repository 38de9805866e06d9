//! Intraday seasonality via the Fourier Flexible Form.
//!
//! For a metric observed on 1-minute intervals τ = 1..T the periodic
//! component is modelled as
//!
//! ```text
//! x(τ) = Σ_{q=0..Q} α_q (τ/T)^q + Σ_{p=1..P} [β_c,p cos(2πpτ/T) + β_s,p sin(2πpτ/T)]
//! ```
//!
//! and fitted by ordinary least squares over all (day, τ) observations
//! pooled together.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::replay::DayReplay;
use crate::session::Session;
use crate::types::{DayId, OrderType, TopOfBook, MINUTE_MS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeasonalityError {
    #[error("{metric}: need at least {needed} observations to fit, have {have}")]
    TooFewObservations { metric: String, needed: usize, have: usize },
    #[error(
        "{metric}: design matrix is rank deficient at regressor `{column}` ({distinct} distinct intervals observed)"
    )]
    RankDeficient { metric: String, column: String, distinct: usize },
    #[error("interval {tau} outside 1..={t_len}")]
    OutOfRange { tau: usize, t_len: usize },
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("malformed seasonality file: {0}")]
    Malformed(String),
}

/// Series the seasonality stage knows how to build and fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Spread,
    DepthBid,
    DepthAsk,
    /// Arrivals per minute of one limit-order type (4, 5, 10 or 11).
    Intensity(OrderType),
}

impl Metric {
    pub fn all() -> Vec<Metric> {
        let mut v = vec![Metric::Spread, Metric::DepthBid, Metric::DepthAsk];
        v.extend(OrderType::RECOVERY.iter().map(|&t| Metric::Intensity(t)));
        v
    }

    /// The same metric seen from the other side of the book.
    pub fn mirror(self) -> Metric {
        match self {
            Metric::Spread => Metric::Spread,
            Metric::DepthBid => Metric::DepthAsk,
            Metric::DepthAsk => Metric::DepthBid,
            Metric::Intensity(t) => Metric::Intensity(t.mirror()),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Spread => f.write_str("spread"),
            Metric::DepthBid => f.write_str("depth_bid"),
            Metric::DepthAsk => f.write_str("depth_ask"),
            Metric::Intensity(t) => write!(f, "intensity_{t}"),
        }
    }
}

impl FromStr for Metric {
    type Err = SeasonalityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::all()
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| SeasonalityError::UnknownMetric(s.to_string()))
    }
}

/// Per-day values on the 1-minute grid; `None` marks a missing observation.
#[derive(Debug, Clone, PartialEq)]
pub struct MinuteSeries {
    pub metric: Metric,
    pub t_len: usize,
    pub days: Vec<DayId>,
    /// `values[day][τ - 1]`.
    pub values: Vec<Vec<Option<f64>>>,
}

impl MinuteSeries {
    /// Pooled `(τ, value)` observations, missing ones skipped.
    pub fn observations(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().flat_map(|day| day.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i + 1, v))))
    }
}

/// Time-weighted mean of `f(top)` within each minute; minutes in which `f`
/// is never defined are missing.
fn time_weighted(replay: &DayReplay, t_len: usize, f: impl Fn(&TopOfBook) -> Option<f64>) -> Vec<Option<f64>> {
    let session_ms = t_len as u64 * MINUTE_MS;
    let mut weighted = vec![0.0; t_len];
    let mut covered = vec![0u64; t_len];
    let mut add = |start: u64, end: u64, value: Option<f64>| {
        let Some(v) = value else { return };
        let mut a = start;
        while a < end {
            let m = (a / MINUTE_MS) as usize;
            let b = end.min((m as u64 + 1) * MINUTE_MS);
            weighted[m] += v * (b - a) as f64;
            covered[m] += b - a;
            a = b;
        }
    };
    let mut since = 0u64;
    let mut state = replay.initial_top;
    for u in &replay.updates {
        let until = u.timestamp_ms.min(session_ms);
        if until > since {
            add(since, until, f(&state));
            since = until;
        }
        state = u.post;
    }
    add(since, session_ms, f(&state));
    weighted.into_iter().zip(covered).map(|(w, c)| (c > 0).then(|| w / c as f64)).collect()
}

/// Samples `metric` on the session's minute grid for every replayed day.
///
/// Spread and depth are time-weighted means of the book state within each
/// minute; intensity is the number of orders of the given type submitted in
/// the minute.
pub fn build_minute_series(replays: &[DayReplay], metric: Metric, session: &Session) -> MinuteSeries {
    let t_len = session.total_minutes();
    let values = replays
        .iter()
        .map(|r| match metric {
            Metric::Spread => time_weighted(r, t_len, |top| top.spread().map(|s| s as f64)),
            Metric::DepthBid => time_weighted(r, t_len, |top| top.bid.map(|q| q.size as f64)),
            Metric::DepthAsk => time_weighted(r, t_len, |top| top.ask.map(|q| q.size as f64)),
            Metric::Intensity(k) => {
                let mut counts = vec![0.0; t_len];
                for o in r.orders.iter().filter(|o| o.order.order_type == k) {
                    if let Some(c) = counts.get_mut(o.order.event.minute() - 1) {
                        *c += 1.0;
                    }
                }
                counts.into_iter().map(Some).collect()
            }
        })
        .collect();
    MinuteSeries { metric, t_len, days: replays.iter().map(|r| r.day).collect(), values }
}

/// Polynomial and Fourier orders of the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FffOrders {
    pub q: usize,
    pub p: usize,
}

impl FffOrders {
    pub fn n_coefficients(self) -> usize {
        self.q + 1 + 2 * self.p
    }

    /// `alpha_0..alpha_Q, beta_c_1, beta_s_1, ..., beta_c_P, beta_s_P`.
    pub fn coefficient_names(self) -> Vec<String> {
        let mut names: Vec<String> = (0..=self.q).map(|q| format!("alpha_{q}")).collect();
        for p in 1..=self.p {
            names.push(format!("beta_c_{p}"));
            names.push(format!("beta_s_{p}"));
        }
        names
    }

    /// Regressor row for interval `tau` of a `t_len`-minute session, in
    /// the order of [`coefficient_names`](Self::coefficient_names).
    pub fn regressors(self, tau: usize, t_len: usize) -> Vec<f64> {
        let x = tau as f64 / t_len as f64;
        let mut row = Vec::with_capacity(self.n_coefficients());
        let mut pow = 1.0;
        for _ in 0..=self.q {
            row.push(pow);
            pow *= x;
        }
        for p in 1..=self.p {
            let angle = 2.0 * PI * p as f64 * x;
            row.push(angle.cos());
            row.push(angle.sin());
        }
        row
    }
}

impl Default for FffOrders {
    fn default() -> Self {
        Self { q: 2, p: 6 }
    }
}

/// A fitted seasonal curve for one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalityModel {
    pub metric: Metric,
    pub orders: FffOrders,
    pub t_len: usize,
    pub coefficients: Vec<f64>,
    /// OLS standard errors, NaN when the fit has no residual degrees of freedom.
    pub std_errors: Vec<f64>,
    pub residual_variance: f64,
    pub residual_sum_squares: f64,
    pub r_squared: f64,
    pub n_obs: usize,
    /// Mean of the fitted observations; sets the divisor floor.
    pub mean: f64,
}

impl SeasonalityModel {
    pub fn eval(&self, tau: usize) -> Result<f64, SeasonalityError> {
        if tau == 0 || tau > self.t_len {
            return Err(SeasonalityError::OutOfRange { tau, t_len: self.t_len });
        }
        Ok(self.orders.regressors(tau, self.t_len).iter().zip(&self.coefficients).map(|(x, b)| x * b).sum())
    }

    /// Coefficient by name, e.g. `beta_c_1`.
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        let idx = self.orders.coefficient_names().iter().position(|n| n == name)?;
        Some(self.coefficients[idx])
    }
}

/// Evaluates `model` at `tau`.
pub fn eval_fff(model: &SeasonalityModel, tau: usize) -> Result<f64, SeasonalityError> {
    model.eval(tau)
}

/// Pooled OLS fit of the FFF regression to `series`.
pub fn fit_fff(series: &MinuteSeries, orders: FffOrders) -> Result<SeasonalityModel, SeasonalityError> {
    let obs: Vec<(usize, f64)> = series.observations().collect();
    let k = orders.n_coefficients();
    let n = obs.len();
    let metric = series.metric.to_string();
    if n < k {
        return Err(SeasonalityError::TooFewObservations { metric, needed: k, have: n });
    }
    let mut x = DMatrix::<f64>::zeros(n, k);
    let mut y = DVector::<f64>::zeros(n);
    for (i, &(tau, v)) in obs.iter().enumerate() {
        for (j, r) in orders.regressors(tau, series.t_len).into_iter().enumerate() {
            x[(i, j)] = r;
        }
        y[i] = v;
    }

    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..k).map(|j| x.column(j).norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if let Some(j) = (0..k).find(|&j| r[(j, j)].abs() <= 1e-10 * scale) {
        let mut taus: Vec<usize> = obs.iter().map(|o| o.0).collect();
        taus.sort_unstable();
        taus.dedup();
        return Err(SeasonalityError::RankDeficient {
            metric,
            column: orders.coefficient_names()[j].clone(),
            distinct: taus.len(),
        });
    }
    let qty = qr.q().transpose() * &y;
    let beta = r.solve_upper_triangular(&qty).ok_or_else(|| SeasonalityError::RankDeficient {
        metric: metric.clone(),
        column: "?".into(),
        distinct: 0,
    })?;

    let residuals = &y - &x * &beta;
    let rss = residuals.norm_squared();
    let mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let dof = n - k;
    let residual_variance = if dof > 0 { rss / dof as f64 } else { f64::NAN };
    // (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ
    let r_inv = r.solve_upper_triangular(&DMatrix::identity(k, k)).expect("R checked non-singular above");
    let cov_unscaled = &r_inv * r_inv.transpose();
    let std_errors = (0..k).map(|j| (residual_variance * cov_unscaled[(j, j)]).sqrt()).collect();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    Ok(SeasonalityModel {
        metric: series.metric,
        orders,
        t_len: series.t_len,
        coefficients: beta.iter().copied().collect(),
        std_errors,
        residual_variance,
        residual_sum_squares: rss,
        r_squared,
        n_obs: n,
        mean,
    })
}

/// Fraction of a metric's mean below which a seasonal factor is floored.
pub const FLOOR_FRACTION: f64 = 1e-6;

/// Seasonal divisors of one metric tabulated on τ = 1..T, floored at a
/// small positive fraction of the metric's mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalFactors {
    values: Vec<f64>,
    floored: Vec<bool>,
}

impl SeasonalFactors {
    pub fn from_model(model: &SeasonalityModel) -> Self {
        let floor = (FLOOR_FRACTION * model.mean.abs()).max(f64::MIN_POSITIVE);
        let (values, floored) = (1..=model.t_len)
            .map(|tau| {
                let v = model.eval(tau).expect("tau in range");
                if v.is_finite() && v > floor {
                    (v, false)
                } else {
                    (floor, true)
                }
            })
            .unzip();
        Self { values, floored }
    }

    /// Constant factor 1 on every interval.
    pub fn flat(t_len: usize) -> Self {
        Self { values: vec![1.0; t_len], floored: vec![false; t_len] }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        let floored = vec![false; values.len()];
        Self { values, floored }
    }

    pub fn t_len(&self) -> usize {
        self.values.len()
    }

    /// `(factor, hit_floor)` at 1-based interval `tau`.
    pub fn get(&self, tau: usize) -> (f64, bool) {
        (self.values[tau - 1], self.floored[tau - 1])
    }
}

/// Fitted models keyed by metric, with a flat CSV form
/// `metric,coefficient,value`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeasonalitySet {
    pub models: BTreeMap<Metric, SeasonalityModel>,
}

impl SeasonalitySet {
    pub fn get(&self, metric: Metric) -> Option<&SeasonalityModel> {
        self.models.get(&metric)
    }

    pub fn insert(&mut self, model: SeasonalityModel) {
        self.models.insert(model.metric, model);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "coefficient", "value"])?;
        for (metric, m) in &self.models {
            let metric = metric.to_string();
            let mut row = |name: &str, value: String| w.write_record([metric.as_str(), name, value.as_str()]);
            row("T", m.t_len.to_string())?;
            for (name, (c, se)) in m.orders.coefficient_names().iter().zip(m.coefficients.iter().zip(&m.std_errors)) {
                row(name, c.to_string())?;
                row(&format!("se_{name}"), se.to_string())?;
            }
            row("residual_variance", m.residual_variance.to_string())?;
            row("residual_sum_squares", m.residual_sum_squares.to_string())?;
            row("r_squared", m.r_squared.to_string())?;
            row("n_obs", m.n_obs.to_string())?;
            row("mean", m.mean.to_string())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, SeasonalityError> {
        let malformed = |msg: String| SeasonalityError::Malformed(msg);
        let mut rdr = csv::Reader::from_reader(input);
        let mut raw: BTreeMap<Metric, BTreeMap<String, String>> = BTreeMap::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| malformed(e.to_string()))?;
            if rec.len() != 3 {
                return Err(malformed(format!("row {} has {} fields", i + 2, rec.len())));
            }
            let metric: Metric = rec[0].parse()?;
            raw.entry(metric).or_default().insert(rec[1].to_string(), rec[2].to_string());
        }
        let mut set = SeasonalitySet::default();
        for (metric, fields) in raw {
            let num = |name: &str| -> Result<f64, SeasonalityError> {
                fields
                    .get(name)
                    .ok_or_else(|| malformed(format!("{metric}: missing `{name}`")))?
                    .parse::<f64>()
                    .map_err(|_| malformed(format!("{metric}: `{name}` is not a number")))
            };
            let q = (0..).take_while(|q| fields.contains_key(&format!("alpha_{q}"))).count();
            let p = (1..).take_while(|p| fields.contains_key(&format!("beta_c_{p}"))).count();
            if q == 0 {
                return Err(malformed(format!("{metric}: no alpha_0 coefficient")));
            }
            let orders = FffOrders { q: q - 1, p };
            let names = orders.coefficient_names();
            let coefficients = names.iter().map(|n| num(n)).collect::<Result<Vec<_>, _>>()?;
            let std_errors = names
                .iter()
                .map(|n| fields.get(&format!("se_{n}")).map_or(Ok(f64::NAN), |v| v.parse()))
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|_| malformed(format!("{metric}: bad standard error")))?;
            let t_len = num("T")?;
            if t_len < 1.0 || t_len.fract() != 0.0 {
                return Err(malformed(format!("{metric}: bad T")));
            }
            let optional = |name: &str| num(name).unwrap_or(f64::NAN);
            set.insert(SeasonalityModel {
                metric,
                orders,
                t_len: t_len as usize,
                coefficients,
                std_errors,
                residual_variance: optional("residual_variance"),
                residual_sum_squares: optional("residual_sum_squares"),
                r_squared: optional("r_squared"),
                n_obs: optional("n_obs") as usize,
                mean: num("mean")?,
            });
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BestLimitUpdate, Quote};

    fn series_from(values: Vec<Vec<Option<f64>>>) -> MinuteSeries {
        let t_len = values[0].len();
        MinuteSeries { metric: Metric::Spread, t_len, days: (0..values.len() as u32).collect(), values }
    }

    fn top(bid: i64, ask: i64) -> TopOfBook {
        TopOfBook { bid: Some(Quote { price: bid, size: 100 }), ask: Some(Quote { price: ask, size: 100 }) }
    }

    #[test]
    fn constant_series_fits_intercept_only() {
        let s = series_from(vec![vec![Some(5.0); 240]; 3]);
        let m = fit_fff(&s, FffOrders::default()).unwrap();
        assert!((m.coefficients[0] - 5.0).abs() < 1e-9);
        for c in &m.coefficients[1..] {
            assert!(c.abs() < 1e-9, "{c}");
        }
        assert!((m.eval(17).unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn cosine_series_evaluates_at_end_of_session() {
        let s = series_from(vec![(1..=240).map(|t| Some(2.0 + (2.0 * PI * t as f64 / 240.0).cos())).collect()]);
        let m = fit_fff(&s, FffOrders::default()).unwrap();
        assert!((m.coefficient("alpha_0").unwrap() - 2.0).abs() < 1e-9);
        assert!((m.coefficient("beta_c_1").unwrap() - 1.0).abs() < 1e-9);
        assert!((m.eval(240).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn eval_range_errors() {
        let s = series_from(vec![vec![Some(5.0); 240]]);
        let m = fit_fff(&s, FffOrders::default()).unwrap();
        assert_eq!(eval_fff(&m, 0), Err(SeasonalityError::OutOfRange { tau: 0, t_len: 240 }));
        assert_eq!(eval_fff(&m, 241), Err(SeasonalityError::OutOfRange { tau: 241, t_len: 240 }));
    }

    #[test]
    fn rank_deficiency_is_named() {
        let mut day = vec![None; 240];
        for v in day.iter_mut().take(20).skip(19) {
            *v = Some(1.0);
        }
        let s = series_from(vec![day; 20]);
        match fit_fff(&s, FffOrders::default()) {
            Err(SeasonalityError::RankDeficient { distinct, column, .. }) => {
                assert_eq!(distinct, 1);
                assert_eq!(column, "alpha_1");
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        let short = series_from(vec![vec![Some(1.0); 10]]);
        assert!(matches!(fit_fff(&short, FffOrders::default()), Err(SeasonalityError::TooFewObservations { .. })));
    }

    #[test]
    fn missing_values_are_skipped() {
        let mut day: Vec<Option<f64>> = vec![Some(4.0); 240];
        day[7] = None;
        day[100] = None;
        let m = fit_fff(&series_from(vec![day]), FffOrders::default()).unwrap();
        assert_eq!(m.n_obs, 238);
    }

    #[test]
    fn time_weighted_spread_within_minute() {
        let replay = DayReplay {
            initial_top: top(1000, 1001),
            updates: vec![BestLimitUpdate {
                seq: 0,
                day: 0,
                timestamp_ms: 30_000,
                pre: top(1000, 1001),
                post: top(1000, 1003),
            }],
            ..Default::default()
        };
        let s = build_minute_series(std::slice::from_ref(&replay), Metric::Spread, &Session::default());
        assert_eq!(s.values[0][0], Some(2.0));
        assert_eq!(s.values[0][1], Some(3.0));
        assert_eq!(s.values[0][239], Some(3.0));
    }

    #[test]
    fn one_sided_minutes_are_missing() {
        let one_sided = TopOfBook { bid: None, ask: Some(Quote { price: 1001, size: 5 }) };
        let replay = DayReplay {
            initial_top: one_sided,
            updates: vec![BestLimitUpdate {
                seq: 0,
                day: 0,
                timestamp_ms: 90_000,
                pre: one_sided,
                post: top(1000, 1001),
            }],
            ..Default::default()
        };
        let s = build_minute_series(std::slice::from_ref(&replay), Metric::Spread, &Session::default());
        assert_eq!(s.values[0][0], None);
        assert_eq!(s.values[0][1], Some(1.0));
        let d = build_minute_series(std::slice::from_ref(&replay), Metric::DepthAsk, &Session::default());
        assert_eq!(d.values[0][0], Some(5.0));
        assert_eq!(d.values[0][1], Some(52.5));
    }

    #[test]
    fn factors_floor_near_zero() {
        let mut day = vec![Some(1.0); 240];
        for v in day.iter_mut().take(120) {
            *v = Some(0.0);
        }
        let m = fit_fff(&series_from(vec![day]), FffOrders { q: 0, p: 0 }).unwrap();
        assert!((m.mean - 0.5).abs() < 1e-12);
        let f = SeasonalFactors::from_model(&m);
        assert_eq!(f.get(1), (m.eval(1).unwrap(), false));
        let mut zero = m.clone();
        zero.coefficients[0] = 0.0;
        let f = SeasonalFactors::from_model(&zero);
        assert_eq!(f.get(5), (5e-7, true));
    }

    #[test]
    fn csv_round_trip() {
        let s = series_from(vec![(1..=240).map(|t| Some(1.0 + (t as f64 / 37.0).sin())).collect(); 2]);
        let mut set = SeasonalitySet::default();
        set.insert(fit_fff(&s, FffOrders::default()).unwrap());
        let mut ms = s.clone();
        ms.metric = Metric::Intensity(OrderType::new(10).unwrap());
        set.insert(fit_fff(&ms, FffOrders { q: 1, p: 3 }).unwrap());
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let back = SeasonalitySet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, set);
        assert!(String::from_utf8(buf).unwrap().contains("intensity_type10,beta_s_3,"));
    }

    #[test]
    fn metric_ids_round_trip() {
        for m in Metric::all() {
            assert_eq!(m.to_string().parse::<Metric>().unwrap(), m);
            assert_eq!(m.mirror().mirror(), m);
        }
        assert!("depth".parse::<Metric>().is_err());
    }
}

//! Run configuration: a flat `key = value` file plus per-key overrides.

use std::path::PathBuf;

use crate::book::DEFAULT_ENGINE;
use crate::classifier::SpreadBuckets;
use crate::error::Error;
use crate::resiliency::WindowConfig;
use crate::seasonality::FffOrders;
use crate::session::Session;
use crate::synth::FlowParams;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub orders: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    /// Pre-fitted models for `study`; fitted in-line when absent.
    pub seasonality: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub tick_size: f64,
    pub session: Session,
    pub spread_buckets: SpreadBuckets,
    pub update_half_width: usize,
    pub minute_half_width: usize,
    pub fff: FffOrders,
    pub groupings: Vec<String>,
    pub engine: String,
    pub flow: FlowParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            orders: None,
            snapshot: None,
            seasonality: None,
            out_dir: PathBuf::from("out"),
            tick_size: 0.01,
            session: Session::default(),
            spread_buckets: SpreadBuckets::default(),
            update_half_width: 20,
            minute_half_width: 30,
            fff: FffOrders::default(),
            groupings: vec!["by-type".into(), "by-side-bucket".into()],
            engine: DEFAULT_ENGINE.into(),
            flow: FlowParams::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Error> {
    value.parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

impl RunConfig {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn from_file(path: &std::path::Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), Error> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Sets one key. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        match key {
            "orders" => self.orders = Some(value.into()),
            "snapshot" => self.snapshot = Some(value.into()),
            "seasonality" => self.seasonality = Some(value.into()),
            "out_dir" => self.out_dir = value.into(),
            "tick_size" => self.tick_size = parse(key, value)?,
            "session" => {
                self.session = value.parse().map_err(|e| Error::Config(format!("`session`: {e}")))?;
                self.flow.session_minutes = self.session.total_minutes();
            }
            "spread_buckets" => {
                let edges = value.split(',').map(|v| parse(key, v.trim())).collect::<Result<Vec<i64>, _>>()?;
                self.spread_buckets = SpreadBuckets::new(edges)
                    .ok_or_else(|| Error::Config("`spread_buckets` must be strictly increasing and >= 1".into()))?;
            }
            "update_half_width" => self.update_half_width = parse(key, value)?,
            "minute_half_width" => self.minute_half_width = parse(key, value)?,
            "fff_q" => self.fff.q = parse(key, value)?,
            "fff_p" => self.fff.p = parse(key, value)?,
            "grouping" => self.groupings = value.split(',').map(|g| g.trim().to_string()).collect(),
            "engine" => self.engine = value.to_string(),
            "limit_rate" => self.flow.limit_rate = parse(key, value)?,
            "market_rate" => self.flow.market_rate = parse(key, value)?,
            "cancel_rate" => self.flow.cancel_rate = parse(key, value)?,
            "in_spread_prob" => self.flow.in_spread_prob = parse(key, value)?,
            "placement_geom_p" => self.flow.placement_geom_p = parse(key, value)?,
            "market_deep_prob" => self.flow.market_deep_prob = parse(key, value)?,
            "size_mu" => self.flow.size_mu = parse(key, value)?,
            "size_sigma" => self.flow.size_sigma = parse(key, value)?,
            "lot" => self.flow.lot = parse(key, value)?,
            "initial_mid" => self.flow.initial_mid = parse(key, value)?,
            "bootstrap_levels" => self.flow.bootstrap_levels = parse(key, value)?,
            "bootstrap_depth" => self.flow.bootstrap_depth = parse(key, value)?,
            "days" => self.flow.days = parse(key, value)?,
            "seed" => self.flow.seed = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.update_half_width == 0 || self.minute_half_width == 0 {
            return Err(Error::Config("window half-widths must be positive".into()));
        }
        if self.groupings.is_empty() || self.groupings.iter().any(String::is_empty) {
            return Err(Error::Config("at least one grouping is required".into()));
        }
        self.tick_cents()?;
        self.flow.validate()?;
        if self.flow.session_minutes != self.session.total_minutes() {
            return Err(Error::Config("synthetic session length disagrees with the timetable".into()));
        }
        Ok(())
    }

    /// Tick size in hundredths of a currency unit.
    pub fn tick_cents(&self) -> Result<i64, Error> {
        let cents = (self.tick_size * 100.0).round();
        if cents < 1.0 || (self.tick_size * 100.0 - cents).abs() > 1e-9 {
            return Err(Error::Config(format!("tick_size {} is not a positive multiple of 0.01", self.tick_size)));
        }
        Ok(cents as i64)
    }

    pub fn window(&self) -> WindowConfig {
        WindowConfig {
            update_half_width: self.update_half_width,
            minute_half_width: self.minute_half_width,
            session: self.session.clone(),
        }
    }
}

//! Command drivers: each stage renders its files in memory, then writes them
//! all to the output directory. If any write fails, files already written
//! by that stage are removed.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::book::EngineRegistry;
use crate::classifier::{tabulate, TypeCountTable};
use crate::config::RunConfig;
use crate::error::Error;
use crate::io::{ingest, write_orders, write_snapshot, IngestReport, PriceFormat};
use crate::replay::{replay_flow, DayReplay};
use crate::resiliency::{run_study, GroupingRegistry, StudyFactors, StudyReport};
use crate::seasonality::{build_minute_series, fit_fff, Metric, SeasonalitySet};
use crate::synth::generate;
use crate::types::OrderFlow;

pub const TYPE_COUNTS_FILE: &str = "type_counts.csv";
pub const CLASSIFIED_FILE: &str = "classified.csv";
pub const SEASONALITY_FILE: &str = "seasonality.csv";
pub const ORDERS_FILE: &str = "orders.csv";
pub const SNAPSHOT_FILE: &str = "snapshot.csv";

pub fn study_file(grouping: &str) -> String {
    format!("study_{grouping}.csv")
}

/// A rendered output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

fn render(name: impl Into<String>, f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<Artifact, Error> {
    let mut bytes = Vec::new();
    f(&mut bytes)?;
    Ok(Artifact { name: name.into(), bytes })
}

/// Writes `artifacts` into `dir`, removing any already written on failure.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        let res = std::fs::File::create(&path).and_then(|mut f| {
            f.write_all(&a.bytes)?;
            f.sync_all()
        });
        if let Err(e) = res {
            let _ = std::fs::remove_file(&path);
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(Error::io(&path, e));
        }
        written.push(path);
    }
    Ok(written)
}

/// Reads the configured order and snapshot files.
pub fn load_flow(cfg: &RunConfig) -> Result<(OrderFlow, IngestReport), Error> {
    let orders = cfg.orders.as_deref().ok_or_else(|| Error::Config("no order file given (`orders`)".into()))?;
    let prices = PriceFormat::new(cfg.tick_cents()?);
    let (flow, report) = ingest(orders, cfg.snapshot.as_deref(), &cfg.session, &prices)?;
    if !report.bad_rows.is_empty() {
        log::warn!("{} of {} order rows skipped", report.bad_rows.len(), report.rows);
    }
    Ok((flow, report))
}

/// Replays `flow` with the configured engine.
pub fn replay(cfg: &RunConfig, flow: &OrderFlow) -> Result<Vec<DayReplay>, Error> {
    let replays = replay_flow(&EngineRegistry::with_builtins(), &cfg.engine, flow, &cfg.spread_buckets)?;
    let rejected: usize = replays.iter().map(|r| r.rejections.len()).sum();
    if rejected > 0 {
        log::warn!("{rejected} events rejected by the book");
    }
    Ok(replays)
}

pub fn type_counts(cfg: &RunConfig, replays: &[DayReplay]) -> TypeCountTable {
    let mut table = TypeCountTable::new(cfg.spread_buckets.clone());
    for r in replays {
        table.merge(&tabulate(r.orders.iter().map(|o| &o.order), &cfg.spread_buckets));
    }
    table
}

/// Type table plus one row per classified submit.
pub fn classify_artifacts(cfg: &RunConfig, replays: &[DayReplay]) -> Result<Vec<Artifact>, Error> {
    let prices = PriceFormat::new(cfg.tick_cents()?);
    let table = type_counts(cfg, replays);
    let counts = render(TYPE_COUNTS_FILE, |b| table.write_csv(b))?;
    let classified = render(CLASSIFIED_FILE, |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record([
            "day",
            "timestamp_ms",
            "order_id",
            "side",
            "price",
            "size",
            "type",
            "penetrability",
            "executed",
            "spread",
            "bucket",
        ])?;
        for o in replays.iter().flat_map(|r| &r.orders) {
            let c = &o.order;
            let e = &c.event;
            w.write_record([
                e.day.to_string(),
                e.timestamp_ms.to_string(),
                e.order_id.to_string(),
                e.side.code().to_string(),
                prices.format(e.price),
                e.size.to_string(),
                c.order_type.code().to_string(),
                c.penetrability.to_string(),
                c.exec.executed.to_string(),
                c.pre_spread.map(|s| s.to_string()).unwrap_or_default(),
                c.spread_bucket.map(|b| cfg.spread_buckets.label(b)).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(vec![counts, classified])
}

/// Fits every metric's seasonality model; metrics are fitted in parallel.
pub fn fit_models(cfg: &RunConfig, replays: &[DayReplay]) -> Result<SeasonalitySet, Error> {
    let models = Metric::all()
        .into_par_iter()
        .map(|m| fit_fff(&build_minute_series(replays, m, &cfg.session), cfg.fff))
        .collect::<Result<Vec<_>, _>>()?;
    let mut set = SeasonalitySet::default();
    for m in models {
        set.insert(m);
    }
    Ok(set)
}

pub fn seasonality_artifact(set: &SeasonalitySet) -> Result<Artifact, Error> {
    render(SEASONALITY_FILE, |b| set.write_csv(b))
}

/// Loads the configured seasonality file, or fits the models in-line.
pub fn study_models(cfg: &RunConfig, replays: &[DayReplay]) -> Result<SeasonalitySet, Error> {
    match &cfg.seasonality {
        Some(path) => {
            let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let set = SeasonalitySet::read_csv(std::io::BufReader::new(f))?;
            let t_len = cfg.session.total_minutes();
            if let Some(m) = Metric::all().into_iter().filter_map(|m| set.get(m)).find(|m| m.t_len != t_len) {
                return Err(Error::Input(format!(
                    "seasonality model `{}` has T={}, session has {t_len} minutes",
                    m.metric, m.t_len
                )));
            }
            Ok(set)
        }
        None => fit_models(cfg, replays),
    }
}

/// Runs every configured grouping.
pub fn studies(cfg: &RunConfig, replays: &[DayReplay], set: &SeasonalitySet) -> Result<Vec<StudyReport>, Error> {
    let registry = GroupingRegistry::with_builtins();
    let factors = StudyFactors::from_models(set)?;
    let window = cfg.window();
    cfg.groupings
        .iter()
        .map(|name| {
            let report = run_study(replays, &factors, registry.get(name)?, &cfg.spread_buckets, &window)?;
            for w in &report.warnings {
                log::warn!("{}: {w}", report.grouping);
            }
            Ok(report)
        })
        .collect()
}

pub fn study_artifacts(reports: &[StudyReport]) -> Result<Vec<Artifact>, Error> {
    reports.iter().map(|r| render(study_file(&r.grouping), |b| r.write_csv(b))).collect()
}

pub fn synth_artifacts(cfg: &RunConfig) -> Result<Vec<Artifact>, Error> {
    let prices = PriceFormat::new(cfg.tick_cents()?);
    let flow = generate(&cfg.flow)?;
    Ok(vec![
        render(ORDERS_FILE, |b| write_orders(&flow, b, &prices))?,
        render(SNAPSHOT_FILE, |b| write_snapshot(&flow, b, &prices))?,
    ])
}

fn replayed(cfg: &RunConfig) -> Result<Vec<DayReplay>, Error> {
    cfg.validate()?;
    let (flow, _) = load_flow(cfg)?;
    replay(cfg, &flow)
}

pub fn cmd_classify(cfg: &RunConfig) -> Result<Vec<PathBuf>, Error> {
    let replays = replayed(cfg)?;
    write_artifacts(&cfg.out_dir, &classify_artifacts(cfg, &replays)?)
}

pub fn cmd_fit_seasonality(cfg: &RunConfig) -> Result<Vec<PathBuf>, Error> {
    let replays = replayed(cfg)?;
    write_artifacts(&cfg.out_dir, &[seasonality_artifact(&fit_models(cfg, &replays)?)?])
}

pub fn cmd_study(cfg: &RunConfig) -> Result<Vec<PathBuf>, Error> {
    let replays = replayed(cfg)?;
    let set = study_models(cfg, &replays)?;
    write_artifacts(&cfg.out_dir, &study_artifacts(&studies(cfg, &replays, &set)?)?)
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<Vec<PathBuf>, Error> {
    cfg.validate()?;
    write_artifacts(&cfg.out_dir, &synth_artifacts(cfg)?)
}

/// Classification, seasonality fit and every configured study in one pass.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<Vec<PathBuf>, Error> {
    let replays = replayed(cfg)?;
    let mut artifacts = classify_artifacts(cfg, &replays)?;
    let set = study_models(cfg, &replays)?;
    artifacts.push(seasonality_artifact(&set)?);
    artifacts.extend(study_artifacts(&studies(cfg, &replays, &set)?)?);
    write_artifacts(&cfg.out_dir, &artifacts)
}

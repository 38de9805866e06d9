use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lobres::config::RunConfig;
use lobres::pipeline;
use lobres::Error;

#[derive(Parser)]
#[command(
    name = "lobres",
    version,
    about = "Order book replay, order classification, seasonality and resiliency studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every submitted order and tabulate types by spread.
    Classify(Common),
    /// Fit the intraday seasonality models.
    FitSeasonality(Common),
    /// Run the resiliency event studies.
    Study(Common),
    /// Generate a synthetic order flow and bootstrap snapshot.
    Synth(Common),
    /// Classify, fit seasonality and run every study.
    Pipeline(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    orders: Option<String>,
    #[arg(long)]
    snapshot: Option<String>,
    /// Pre-fitted seasonality CSV for `study` and `pipeline`.
    #[arg(long)]
    seasonality: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    /// Comma-separated grouping names.
    #[arg(long)]
    grouping: Option<String>,
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    days: Option<String>,
}

impl Common {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        for kv in &self.overrides {
            let (k, v) =
                kv.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        let flags = [
            ("orders", &self.orders),
            ("snapshot", &self.snapshot),
            ("seasonality", &self.seasonality),
            ("out_dir", &self.out_dir),
            ("grouping", &self.grouping),
            ("engine", &self.engine),
            ("seed", &self.seed),
            ("days", &self.days),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, Error> {
    match cli.command {
        Command::Classify(c) => pipeline::cmd_classify(&c.config()?),
        Command::FitSeasonality(c) => pipeline::cmd_fit_seasonality(&c.config()?),
        Command::Study(c) => pipeline::cmd_study(&c.config()?),
        Command::Synth(c) => pipeline::cmd_synth(&c.config()?),
        Command::Pipeline(c) => pipeline::cmd_pipeline(&c.config()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

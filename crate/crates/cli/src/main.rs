//! `covmis`: batch experiments on covariance mismatch in CFAR detection.
//!
//! Exit codes: 0 success, 1 config error, 2 validation failure, 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use covmis::mcengine::{Pool, SimPath};
use covmis::report::Provenance;

use crate::commands::Ctx;
use crate::config::RunConfig;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Validation(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Config(_) => 1,
            Self::Validation(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Validation(m) => write!(f, "validation failed: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "covmis", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`; default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Overrides the configured simulation path.
    #[arg(long, global = true)]
    path: Option<PathArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Fast,
    Direct,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Closed-form, distributional, oracle and GER checks.
    Validate,
    /// No-mismatch thresholds for the configured detectors.
    Calibrate,
    /// Empirical CDFs of beta and t for several training covariances.
    Cdf,
    /// P_fa (and optionally P_d) over random training covariances.
    Sweep,
    /// (P_fa, P_d) per draw around the operating point.
    Roc,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config_path = cli
        .config
        .ok_or_else(|| Failure::Config("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(&config_path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(p) = cli.path {
        cfg.path = match p {
            PathArg::Fast => SimPath::Fast,
            PathArg::Direct => SimPath::Direct,
        };
    }
    if let Some(out) = cli.out {
        cfg.out_dir = Some(out);
    }
    cfg.validate()?;

    let out = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)
        .map_err(|e| Failure::Config(format!("cannot create {}: {e}", out.display())))?;
    let pool = Pool::new(cli.workers).map_err(|e| Failure::Config(e.to_string()))?;
    let ctx = Ctx {
        cfg: &cfg,
        pool: &pool,
        prov: Provenance::new(cfg.hash(), cfg.seed),
        out: &out,
    };
    // The effective config sits next to the results so they can be regenerated.
    let mut text = serde_json::to_string_pretty(&RunConfig {
        out_dir: None,
        ..cfg.clone()
    })
    .expect("config serialises");
    text.push('\n');
    std::fs::write(out.join("config.json"), text)
        .map_err(|e| Failure::Config(format!("cannot write config.json: {e}")))?;

    let written = match cli.command {
        Command::Validate => commands::validate(&ctx),
        Command::Calibrate => commands::calibrate(&ctx),
        Command::Cdf => commands::cdf(&ctx),
        Command::Sweep => commands::sweep_cmd(&ctx),
        Command::Roc => commands::roc(&ctx),
    }?;
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("covmis: {e}");
            ExitCode::from(e.code())
        }
    }
}

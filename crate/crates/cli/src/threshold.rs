use std::path::PathBuf;

use clap::ValueEnum;
use lossqng::threshold_solver::{log_grid, pair_threshold_curve, single_threshold_curve, ModeCount, OptimizationConfig};
use lossqng::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config;
use crate::Status;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    Pair,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub mode: Mode,
    pub eta: f64,
    pub t_bs: f64,
    pub n_modes: ModeCount,
    pub optimization: OptimizationConfig,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Pair,
            eta: 0.1467,
            t_bs: 0.5,
            n_modes: ModeCount::Asymptotic,
            optimization: OptimizationConfig::default(),
        }
    }
}

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    eta: Option<f64>,
    /// Beamsplitter transmission (single-photon curves).
    #[arg(long = "tbs")]
    t_bs: Option<f64>,
    /// Mode pairs: a positive integer or "asymptotic".
    #[arg(long = "n")]
    n_modes: Option<ModeCount>,
    #[arg(long)]
    alpha_min: Option<f64>,
    #[arg(long)]
    alpha_max: Option<f64>,
    #[arg(long)]
    alpha_count: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    /// Output prefix; writes `<out>.csv` and `<out>.json`.
    #[arg(long, default_value = "threshold")]
    out: PathBuf,
}

impl Args {
    fn resolve(&self) -> Result<ThresholdConfig> {
        let mut cfg: ThresholdConfig = config::load(self.config.as_deref())?;
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(v) = self.eta {
            cfg.eta = v;
        }
        if let Some(v) = self.t_bs {
            cfg.t_bs = v;
        }
        if let Some(v) = self.n_modes {
            cfg.n_modes = v;
        }
        if let Some(v) = self.seeds {
            cfg.optimization.multistart_seeds = v;
        }
        if self.alpha_min.is_some() || self.alpha_max.is_some() || self.alpha_count.is_some() {
            let g = &cfg.optimization.alpha_grid;
            let lo = self.alpha_min.or(g.first().copied()).unwrap_or(1.0);
            let hi = self.alpha_max.or(g.last().copied()).unwrap_or(1e12);
            let count = self.alpha_count.unwrap_or(g.len().max(2));
            cfg.optimization.alpha_grid = log_grid(lo, hi, count);
        }
        if cfg.mode == Mode::Pair && cfg.t_bs != 0.5 {
            return Err(Error::Invalid("pair curves assume balanced splitters; t_bs must be 0.5".into()));
        }
        Ok(cfg)
    }
}

pub fn run(args: Args) -> Result<Status> {
    let cfg = args.resolve()?;
    let curve = match cfg.mode {
        Mode::Single => single_threshold_curve(cfg.eta, cfg.t_bs, &cfg.optimization)?,
        Mode::Pair => pair_threshold_curve(cfg.eta, cfg.n_modes, &cfg.optimization)?,
    };
    let csv = config::suffixed(&args.out, ".csv");
    let json = config::suffixed(&args.out, ".json");
    curve.write_csv(config::create(&csv)?)?;
    config::write_json(&json, &curve)?;
    eprintln!(
        "{} points, {} gaps -> {}, {}",
        curve.points.len(),
        curve.gaps.len(),
        csv.display(),
        json.display()
    );
    if curve.gaps.is_empty() {
        Ok(Status::Ok)
    } else {
        for g in &curve.gaps {
            eprintln!("gap at alpha {:e}: {}", g.alpha, g.reason);
        }
        Ok(Status::Failed)
    }
}

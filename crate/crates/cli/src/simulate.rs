use std::path::PathBuf;

use clap::ValueEnum;
use lossqng::counts_analyzer::write_peak_areas_csv;
use lossqng::photon_statistics::{DetectionConfig, ModeEnsemble};
use lossqng::source_simulator::{
    peak_areas_from_tags, simulate_multimode_tmsv, simulate_qd_pairs, simulate_single_photon_stream, write_tags,
    QdSourceConfig, SimOutput, SimRun, SinglePhotonSource, D_A1, D_A2,
};
use lossqng::Result;
use serde::{Deserialize, Serialize};

use crate::config;
use crate::Status;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceConfig {
    Qd(QdSourceConfig),
    Tmsv { occupancies: Vec<f64> },
    Single(SinglePhotonSource),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceKind {
    Qd,
    Tmsv,
    Single,
}

impl SourceConfig {
    fn kind(&self) -> SourceKind {
        match self {
            SourceConfig::Qd(_) => SourceKind::Qd,
            SourceConfig::Tmsv { .. } => SourceKind::Tmsv,
            SourceConfig::Single(_) => SourceKind::Single,
        }
    }

    fn default_for(kind: SourceKind) -> Self {
        match kind {
            SourceKind::Qd => SourceConfig::Qd(QdSourceConfig::default()),
            SourceKind::Tmsv => SourceConfig::Tmsv { occupancies: vec![0.01] },
            SourceKind::Single => SourceConfig::Single(SinglePhotonSource::new(1.0, 0.0).expect("valid defaults")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub source: SourceConfig,
    pub detection: DetectionConfig,
    pub run: SimRun,
    /// Largest pulse offset in the exported autocorrelation peak areas.
    pub peak_max_delay: i64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            source: SourceConfig::Qd(QdSourceConfig::default()),
            detection: DetectionConfig::new(0.1467, 0.5).expect("valid defaults"),
            run: SimRun::new(10_000_000, 1),
            peak_max_delay: 60,
        }
    }
}

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    source: Option<SourceKind>,
    /// Comma-separated TMSV occupancies; implies `--source tmsv`.
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long)]
    pulses: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long = "tbs")]
    t_bs: Option<f64>,
    /// Counts JSON output.
    #[arg(long)]
    out: PathBuf,
    /// Tag stream output.
    #[arg(long)]
    tags: Option<PathBuf>,
    /// Autocorrelation peak areas (D_A1 start, D_A2 stop) CSV output.
    #[arg(long)]
    peaks: Option<PathBuf>,
}

impl Args {
    fn resolve(&self) -> Result<SimulateConfig> {
        let mut cfg: SimulateConfig = config::load(self.config.as_deref())?;
        let kind = if self.mu.is_some() { Some(SourceKind::Tmsv) } else { self.source };
        if let Some(k) = kind {
            if cfg.source.kind() != k {
                cfg.source = SourceConfig::default_for(k);
            }
        }
        if let (Some(mu), SourceConfig::Tmsv { occupancies }) = (&self.mu, &mut cfg.source) {
            *occupancies = mu.clone();
        }
        if let Some(v) = self.pulses {
            cfg.run.n_pulses = v;
        }
        if let Some(v) = self.seed {
            cfg.run.seed = v;
        }
        if let Some(v) = self.eta {
            cfg.detection.eta = v;
        }
        if let Some(v) = self.t_bs {
            cfg.detection.t_bs = v;
        }
        cfg.run.record_tags = self.tags.is_some() || self.peaks.is_some();
        Ok(cfg)
    }
}

pub fn simulate(cfg: &SimulateConfig) -> Result<SimOutput> {
    match &cfg.source {
        SourceConfig::Qd(src) => simulate_qd_pairs(src, &cfg.detection, &cfg.run),
        SourceConfig::Tmsv { occupancies } => {
            simulate_multimode_tmsv(&ModeEnsemble::new(occupancies.clone())?, &cfg.detection, &cfg.run)
        }
        SourceConfig::Single(src) => simulate_single_photon_stream(src, &cfg.detection, &cfg.run),
    }
}

pub fn run(args: Args) -> Result<Status> {
    let cfg = args.resolve()?;
    let out = simulate(&cfg)?;
    config::write_json(&args.out, &out.counts)?;
    let tags = out.tags.unwrap_or_default();
    if let Some(path) = &args.tags {
        write_tags(&tags, config::create(path)?)?;
    }
    if let Some(path) = &args.peaks {
        let peaks = peak_areas_from_tags(&tags, D_A1, D_A2, cfg.peak_max_delay);
        write_peak_areas_csv(&peaks, config::create(path)?)?;
    }
    let c = &out.counts;
    eprintln!(
        "{} pulses: c_s {} c_e_a {} c_e_b {} -> {}",
        cfg.run.n_pulses,
        c.c_s,
        c.c_e_a,
        c.c_e_b,
        args.out.display()
    );
    Ok(Status::Ok)
}

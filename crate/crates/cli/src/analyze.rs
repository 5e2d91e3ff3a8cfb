use std::path::PathBuf;

use clap::ValueEnum;
use lossqng::counts_analyzer::{
    attenuation_scan, blinking_fit, depth_fit, estimate_probabilities, pre_attenuated_depths, read_peak_areas_csv,
    sigma_distance, BlinkingFit, CountSummary, DepthOutcome, Experiment, RowDepth, SigmaDistance,
};
use lossqng::measured::Measured;
use lossqng::threshold_solver::{
    Criterion, CurveCriterion, CurveKind, ModeCount, PairCriterion, SimpleBsCriterion, SingleApproxCriterion,
    ThresholdCurve,
};
use lossqng::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config;
use crate::Status;

pub const REPORT_SCHEMA: &str = "lossqng.analysis/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    /// Photon pairs with known loss.
    Pair,
    /// Loss-independent single-photon beamsplitter criterion.
    SimpleBs,
    /// Small-error single-photon criterion with known loss.
    SingleApprox,
    /// A numeric curve produced by `threshold`.
    Curve,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriterionConfig {
    pub kind: CriterionKind,
    pub eta: f64,
    pub eta_sigma: f64,
    pub n_modes: ModeCount,
    pub t_bs: f64,
    pub t_bs_sigma: f64,
    pub curve: Option<PathBuf>,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        Self {
            kind: CriterionKind::Pair,
            eta: 0.1467,
            eta_sigma: 0.0034,
            n_modes: ModeCount::Asymptotic,
            t_bs: 0.5166,
            t_bs_sigma: 3e-4,
            curve: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub a_max: f64,
    pub step: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { a_max: 0.8, step: 0.02 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub criterion: CriterionConfig,
    pub scan: ScanConfig,
    /// Pre-attenuations for the depth table.
    pub rows: Vec<f64>,
}

#[derive(clap::Args)]
pub struct Args {
    /// Counts JSON file.
    counts: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    criterion: Option<CriterionKind>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    eta_sigma: Option<f64>,
    #[arg(long = "n")]
    n_modes: Option<ModeCount>,
    #[arg(long = "tbs")]
    t_bs: Option<f64>,
    #[arg(long = "tbs-sigma")]
    t_bs_sigma: Option<f64>,
    /// Threshold curve JSON for `--criterion curve`.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    a_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Comma-separated pre-attenuations for the depth table.
    #[arg(long, value_delimiter = ',')]
    rows: Option<Vec<f64>>,
    /// Autocorrelation peak areas CSV for a blinking fit.
    #[arg(long)]
    peaks: Option<PathBuf>,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    scan_csv: Option<PathBuf>,
}

impl Args {
    fn resolve(&self) -> Result<AnalyzeConfig> {
        let mut cfg: AnalyzeConfig = config::load(self.config.as_deref())?;
        let c = &mut cfg.criterion;
        if let Some(v) = self.criterion {
            c.kind = v;
        }
        if let Some(v) = self.eta {
            c.eta = v;
        }
        if let Some(v) = self.eta_sigma {
            c.eta_sigma = v;
        }
        if let Some(v) = self.n_modes {
            c.n_modes = v;
        }
        if let Some(v) = self.t_bs {
            c.t_bs = v;
        }
        if let Some(v) = self.t_bs_sigma {
            c.t_bs_sigma = v;
        }
        if let Some(v) = &self.curve {
            c.curve = Some(v.clone());
        }
        if let Some(v) = self.a_max {
            cfg.scan.a_max = v;
        }
        if let Some(v) = self.step {
            cfg.scan.step = v;
        }
        if let Some(v) = &self.rows {
            cfg.rows = v.clone();
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    Certified,
    NotCertified,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub schema: &'static str,
    pub counts_file: String,
    pub experiment: Experiment,
    pub criterion: String,
    pub p_success: Measured,
    pub p_error: Measured,
    pub threshold: f64,
    pub status: Certification,
    pub sigma_distance: Option<SigmaDistance>,
    pub depth: Option<DepthOutcome>,
    pub rows: Vec<RowDepth>,
    pub blinking: Option<BlinkingFit>,
    /// Steps that could not be evaluated, with the reason.
    pub notes: Vec<String>,
}

/// Builds the criterion at `keep` times the configured transmission.
fn build_criterion(cfg: &CriterionConfig, experiment: Experiment, keep: f64) -> Result<Box<dyn Criterion>> {
    let expect = |want: Experiment| {
        if experiment == want {
            Ok(())
        } else {
            Err(Error::Invalid(format!("criterion {:?} does not apply to {experiment:?} counts", cfg.kind)))
        }
    };
    let eta = Measured::new(cfg.eta * keep, cfg.eta_sigma * keep);
    Ok(match cfg.kind {
        CriterionKind::Pair => {
            expect(Experiment::PhotonPairs)?;
            Box::new(PairCriterion { eta, n_modes: cfg.n_modes })
        }
        CriterionKind::SimpleBs => {
            expect(Experiment::SinglePhoton)?;
            Box::new(SimpleBsCriterion {
                t_bs: Measured::new(cfg.t_bs, cfg.t_bs_sigma),
            })
        }
        CriterionKind::SingleApprox => {
            expect(Experiment::SinglePhoton)?;
            Box::new(SingleApproxCriterion { eta })
        }
        CriterionKind::Curve => {
            let path = cfg
                .curve
                .as_ref()
                .ok_or_else(|| Error::Invalid("criterion curve needs a curve file".into()))?;
            let curve = ThresholdCurve::load_json(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
            expect(match curve.kind {
                CurveKind::PhotonPairs => Experiment::PhotonPairs,
                CurveKind::SinglePhoton => Experiment::SinglePhoton,
            })?;
            if keep != 1.0 {
                return Err(Error::Invalid("a sampled curve cannot be rescaled for pre-attenuated rows".into()));
            }
            Box::new(CurveCriterion { curve })
        }
    })
}

pub fn analyze(counts: &CountSummary, counts_file: &str, cfg: &AnalyzeConfig) -> Result<AnalyzeReport> {
    let (p_s, p_e) = estimate_probabilities(counts)?;
    let criterion = build_criterion(&cfg.criterion, counts.experiment, 1.0)?;
    let threshold = criterion.threshold(p_e.value)?;
    let mut notes = Vec::new();

    let sigma = match sigma_distance(p_s, p_e, criterion.as_ref()) {
        Ok(s) => Some(s),
        Err(e) => {
            notes.push(format!("sigma distance: {e}"));
            None
        }
    };
    let status = if p_s.value > threshold {
        Certification::Certified
    } else {
        Certification::NotCertified
    };

    let scan = attenuation_scan(counts, cfg.scan.a_max, cfg.scan.step)?;
    let depth = match depth_fit(&scan, criterion.as_ref()) {
        Ok(d) => Some(d),
        Err(e) => {
            notes.push(format!("depth: {e}"));
            None
        }
    };
    let rows = if cfg.rows.is_empty() {
        Vec::new()
    } else {
        pre_attenuated_depths(counts, &cfg.rows, cfg.scan.a_max, cfg.scan.step, |keep| {
            build_criterion(&cfg.criterion, counts.experiment, keep)
        })
        .unwrap_or_else(|e| {
            notes.push(format!("rows: {e}"));
            Vec::new()
        })
    };

    Ok(AnalyzeReport {
        schema: REPORT_SCHEMA,
        counts_file: counts_file.into(),
        experiment: counts.experiment,
        criterion: criterion.label(),
        p_success: p_s,
        p_error: p_e,
        threshold,
        status,
        sigma_distance: sigma,
        depth,
        rows,
        blinking: None,
        notes,
    })
}

pub fn run(args: Args) -> Result<Status> {
    let cfg = args.resolve()?;
    let counts = CountSummary::load(&args.counts).map_err(|e| Error::Invalid(format!("{}: {e}", args.counts.display())))?;
    let mut report = analyze(&counts, &args.counts.display().to_string(), &cfg)?;

    if let Some(path) = &args.peaks {
        let peaks = read_peak_areas_csv(config::create_reader(path)?)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        match blinking_fit(&peaks) {
            Ok(f) => report.blinking = Some(f),
            Err(e) => report.notes.push(format!("blinking: {e}")),
        }
    }
    if let Some(path) = &args.scan_csv {
        attenuation_scan(&counts, cfg.scan.a_max, cfg.scan.step)?.write_csv(config::create(path)?)?;
    }
    match &args.report {
        Some(path) => config::write_json(path, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }

    let verdict = match &report.sigma_distance {
        Some(s) => format!("{:?} ({:.2} sigma)", report.status, s.distance),
        None => format!("{:?}", report.status),
    };
    eprintln!(
        "P_success {}  P_error {}  threshold {:.4e}  {verdict}",
        report.p_success, report.p_error, report.threshold
    );
    if let Some(d) = report.depth.as_ref().and_then(DepthOutcome::depth_db) {
        eprintln!("depth {d:.3} dB");
    }
    Ok(match report.status {
        Certification::Certified => Status::Ok,
        Certification::NotCertified => Status::Negative,
    })
}

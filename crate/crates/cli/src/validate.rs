use std::path::PathBuf;

use lossqng::counts_analyzer::blinking_fit;
use lossqng::photon_statistics::{
    fock_oracle_click_probs, multimode_pair_click_probs, single_photon_click_probs, single_photon_click_probs_reduced,
    DetectionConfig, GaussianStateParams, ModeEnsemble,
};
use lossqng::source_simulator::{
    classify, peak_areas_from_tags, simulate_multimode_tmsv, simulate_qd_pairs, simulate_single_photon_stream,
    z_score, Consistency, QdSourceConfig, SimRun, SinglePhotonSource, D_A1, D_A2,
};
use lossqng::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config;
use crate::Status;

pub const REPORT_SCHEMA: &str = "lossqng.validation/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSuite {
    pub points: usize,
    pub cutoff: usize,
    /// Largest allowed absolute probability difference.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for OracleSuite {
    fn default() -> Self {
        Self {
            points: 100,
            cutoff: 120,
            tolerance: 1e-8,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSuite {
    pub pulses: u64,
    pub seed: u64,
}

impl Default for MonteCarloSuite {
    fn default() -> Self {
        Self { pulses: 2_000_000, seed: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlinkingSuite {
    pub pulses: u64,
    pub seed: u64,
    /// Allowed relative error of the recovered on-fraction.
    pub tolerance: f64,
    pub max_delay: i64,
}

impl Default for BlinkingSuite {
    fn default() -> Self {
        Self {
            pulses: 4_000_000,
            seed: 1,
            tolerance: 0.02,
            max_delay: 60,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub oracle: OracleSuite,
    pub monte_carlo: MonteCarloSuite,
    pub blinking: BlinkingSuite,
}

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Oracle tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Fock-space cutoff of the oracle.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Pulses per Monte Carlo case.
    #[arg(long)]
    pulses: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl Args {
    fn resolve(&self) -> Result<ValidateConfig> {
        let mut cfg: ValidateConfig = config::load(self.config.as_deref())?;
        if let Some(v) = self.tolerance {
            cfg.oracle.tolerance = v;
        }
        if let Some(v) = self.cutoff {
            cfg.oracle.cutoff = v;
        }
        if let Some(v) = self.pulses {
            cfg.monte_carlo.pulses = v;
        }
        if let Some(v) = self.seed {
            cfg.oracle.seed = v;
            cfg.monte_carlo.seed = v;
            cfg.blinking.seed = v;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub status: Consistency,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ValidateReport {
    pub schema: &'static str,
    pub config: ValidateConfig,
    pub checks: Vec<Check>,
    pub worst: Consistency,
}

fn limit(value: f64, tolerance: f64) -> Consistency {
    if value <= tolerance {
        Consistency::Pass
    } else {
        Consistency::Fail
    }
}

fn oracle_checks(s: &OracleSuite) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut worst_cov = 0.0f64;
    let mut worst_closed = 0.0f64;
    for _ in 0..s.points {
        let state = GaussianStateParams::new(
            rng.random_range(0.0..=2.0),
            rng.random_range(0.0..=1.0),
            rng.random_range(0.0..std::f64::consts::PI),
        );
        let det = DetectionConfig::new(rng.random_range(0.1..=1.0), 0.5);
        let (state, det) = match (state, det) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return vec![failed("oracle", "sampling", s.tolerance, e)],
        };
        let fock = match fock_oracle_click_probs(&state, &det, s.cutoff) {
            Ok(f) => f.probs,
            Err(e) => return vec![failed("oracle", "fock oracle", s.tolerance, e)],
        };
        let cov = match single_photon_click_probs(&state, &det) {
            Ok(c) => c,
            Err(e) => return vec![failed("oracle", "covariance", s.tolerance, e)],
        };
        let closed = single_photon_click_probs_reduced(&state, &det);
        worst_cov = worst_cov
            .max((cov.p_success - fock.p_success).abs())
            .max((cov.p_error - fock.p_error).abs());
        worst_closed = worst_closed
            .max((closed.p_success - fock.p_success).abs())
            .max((closed.p_error - fock.p_error).abs());
    }
    [("covariance vs Fock", worst_cov), ("closed form vs Fock", worst_closed)]
        .into_iter()
        .map(|(name, v)| Check {
            suite: "oracle",
            name: format!("{name}, max abs difference over {} points", s.points),
            value: v,
            tolerance: s.tolerance,
            status: limit(v, s.tolerance),
            message: None,
        })
        .collect()
}

fn failed(suite: &'static str, name: &str, tolerance: f64, e: lossqng::Error) -> Check {
    Check {
        suite,
        name: name.into(),
        value: f64::NAN,
        tolerance,
        status: Consistency::Fail,
        message: Some(e.to_string()),
    }
}

fn z_check(name: String, count: f64, trials: f64, p: f64) -> Check {
    let z = z_score(count, trials, p);
    Check {
        suite: "monte_carlo",
        name,
        value: z,
        tolerance: 3.0,
        status: classify(z),
        message: None,
    }
}

fn monte_carlo_checks(s: &MonteCarloSuite) -> Vec<Check> {
    let n = s.pulses as f64;
    let mut checks = Vec::new();
    let cases: [(f64, Vec<f64>); 3] = [(0.5, vec![0.3]), (0.5, vec![0.02; 8]), (0.4, vec![0.1, 0.2, 0.05])];
    for (i, (eta, mus)) in cases.into_iter().enumerate() {
        let label = format!("tmsv N={} eta={eta}", mus.len());
        let res = (|| {
            let det = DetectionConfig::new(eta, 0.5)?;
            let ens = ModeEnsemble::new(mus)?;
            let expected = multimode_pair_click_probs(&ens, &det)?;
            let out = simulate_multimode_tmsv(&ens, &det, &SimRun::new(s.pulses, s.seed.wrapping_add(i as u64)))?;
            Ok::<_, lossqng::Error>((expected, out.counts))
        })();
        match res {
            Ok((p, c)) => {
                checks.push(z_check(format!("{label} success z"), c.c_s, n, p.p_success));
                checks.push(z_check(format!("{label} error arm a z"), c.c_e_a, n, p.p_error));
                checks.push(z_check(format!("{label} error arm b z"), c.c_e_b, n, p.p_error));
            }
            Err(e) => checks.push(failed("monte_carlo", &label, 3.0, e)),
        }
    }

    // Independent routing of one or two photons onto two detectors.
    let (eta, t, emit, extra): (f64, f64, f64, f64) = (0.6, 0.5, 0.9, 0.05);
    let (k1, k2) = (eta * t, eta * (1.0 - t));
    let p1 = emit * ((1.0 - extra) * k1 + extra * (1.0 - (1.0 - k1).powi(2)));
    let p2 = emit * extra * 2.0 * k1 * k2;
    let res = (|| {
        let src = SinglePhotonSource::new(emit, extra)?;
        let det = DetectionConfig::new(eta, t)?;
        simulate_single_photon_stream(&src, &det, &SimRun::new(s.pulses, s.seed.wrapping_add(3)))
    })();
    match res {
        Ok(out) => {
            let c = out.counts;
            let d1 = c.singles.as_ref().and_then(|v| v.first().copied()).unwrap_or(0.0);
            checks.push(z_check("single photons D1 clicks z".into(), d1, n, p1));
            checks.push(z_check("single photons coincidence z".into(), c.c_e_a, n, p2));
        }
        Err(e) => checks.push(failed("monte_carlo", "single photons", 3.0, e)),
    }
    checks
}

fn blinking_checks(s: &BlinkingSuite) -> Vec<Check> {
    let src = QdSourceConfig::default();
    let name = format!("recovered on-fraction vs {}", src.blinking_on_fraction);
    let res = (|| {
        let det = DetectionConfig::new(1.0, 0.5)?;
        let out = simulate_qd_pairs(&src, &det, &SimRun::new(s.pulses, s.seed).with_tags())?;
        let peaks = peak_areas_from_tags(out.tags.as_deref().unwrap_or_default(), D_A1, D_A2, s.max_delay);
        blinking_fit(&peaks)
    })();
    match res {
        Ok(fit) => {
            let rel = (fit.blinking_factor / src.blinking_on_fraction - 1.0).abs();
            vec![Check {
                suite: "blinking",
                name,
                value: rel,
                tolerance: s.tolerance,
                status: limit(rel, s.tolerance),
                message: Some(format!("fitted {:.4}", fit.blinking_factor)),
            }]
        }
        Err(e) => vec![failed("blinking", &name, s.tolerance, e)],
    }
}

fn rank(c: Consistency) -> u8 {
    match c {
        Consistency::Pass => 0,
        Consistency::Flag => 1,
        Consistency::Fail => 2,
    }
}

pub fn validate(cfg: &ValidateConfig) -> ValidateReport {
    let mut checks = oracle_checks(&cfg.oracle);
    checks.extend(monte_carlo_checks(&cfg.monte_carlo));
    checks.extend(blinking_checks(&cfg.blinking));
    let worst = checks.iter().map(|c| c.status).max_by_key(|&s| rank(s)).unwrap_or(Consistency::Pass);
    ValidateReport {
        schema: REPORT_SCHEMA,
        config: cfg.clone(),
        checks,
        worst,
    }
}

pub fn run(args: Args) -> Result<Status> {
    let cfg = args.resolve()?;
    let report = validate(&cfg);
    for c in &report.checks {
        eprintln!(
            "{:<5} {:<12} {:<56} {:>11.3e} (tol {:.1e}){}",
            format!("{:?}", c.status).to_uppercase(),
            c.suite,
            c.name,
            c.value,
            c.tolerance,
            c.message.as_deref().map(|m| format!("  {m}")).unwrap_or_default()
        );
    }
    match &args.report {
        Some(path) => config::write_json(path, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(match report.worst {
        Consistency::Pass => Status::Ok,
        Consistency::Flag => Status::Negative,
        Consistency::Fail => Status::Failed,
    })
}

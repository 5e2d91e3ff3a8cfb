//! From raw counts to certified (or not) click probabilities.

mod blinking;
mod depth;
mod scan;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::measured::Measured;
use crate::threshold_solver::{Criterion, Sensitivity};

pub use blinking::{blinking_fit, read_peak_areas_csv, write_peak_areas_csv, BlinkingFit, PeakArea};
pub use depth::{depth_fit, pre_attenuated_depths, DepthFitMeta, DepthOutcome, DepthResult, RowDepth};
pub use scan::{attenuation_scan, undersample, AttenuationScan, ScanPoint, Undersampling};

pub type ProbabilityEstimate = Measured;

pub const COUNTS_SCHEMA: &str = "lossqng.counts/1";

fn counts_schema() -> String {
    COUNTS_SCHEMA.into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Cross-arm success, same-arm error coincidences.
    #[default]
    PhotonPairs,
    /// Success = clicks on D1 (`singles[0]`), error = D1·D2 coincidences (`c_e_a`).
    SinglePhoton,
}

/// Aggregate counts of one measurement.
///
/// Counts are real-valued so that deterministic undersampling can carry
/// expected (fractional) counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountSummary {
    #[serde(default = "counts_schema")]
    pub schema: String,
    #[serde(default)]
    pub experiment: Experiment,
    #[serde(default)]
    pub c_s: f64,
    pub c_e_a: f64,
    #[serde(default)]
    pub c_e_b: f64,
    pub duration_s: f64,
    pub c0_rate_hz: f64,
    /// Relative one-sigma uncertainty of the generation rate.
    #[serde(default)]
    pub c0_rel_sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singles: Option<Vec<f64>>,
}

impl CountSummary {
    pub fn pairs(c_s: f64, c_e_a: f64, c_e_b: f64, duration_s: f64, c0_rate_hz: f64) -> Self {
        Self {
            schema: counts_schema(),
            experiment: Experiment::PhotonPairs,
            c_s,
            c_e_a,
            c_e_b,
            duration_s,
            c0_rate_hz,
            c0_rel_sigma: 0.0,
            singles: None,
        }
    }

    pub fn single_photon(clicks_d1: f64, coincidences: f64, duration_s: f64, c0_rate_hz: f64) -> Self {
        Self {
            schema: counts_schema(),
            experiment: Experiment::SinglePhoton,
            c_s: 0.0,
            c_e_a: coincidences,
            c_e_b: 0.0,
            duration_s,
            c0_rate_hz,
            c0_rel_sigma: 0.0,
            singles: Some(vec![clicks_d1]),
        }
    }

    pub fn with_c0_rel_sigma(mut self, rel: f64) -> Self {
        self.c0_rel_sigma = rel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != COUNTS_SCHEMA {
            return Err(Error::Invalid(format!("unsupported counts schema {:?}", self.schema)));
        }
        for (name, v) in [("c_s", self.c_s), ("c_e_a", self.c_e_a), ("c_e_b", self.c_e_b)] {
            check_range(name, v, 0.0, f64::INFINITY, true, false, ">= 0")?;
        }
        check_range("duration_s", self.duration_s, 0.0, f64::INFINITY, false, false, "> 0")?;
        check_range("c0_rate_hz", self.c0_rate_hz, 0.0, f64::INFINITY, false, false, "> 0")?;
        check_range("c0_rel_sigma", self.c0_rel_sigma, 0.0, 1.0, true, false, "in [0, 1)")?;
        if let Some(s) = &self.singles {
            for &v in s {
                check_range("singles", v, 0.0, f64::INFINITY, true, false, ">= 0")?;
            }
        }
        if self.experiment == Experiment::SinglePhoton && self.singles.as_ref().is_none_or(|s| s.is_empty()) {
            return Err(Error::Invalid("single-photon counts need singles[0] (clicks on D1)".into()));
        }
        Ok(())
    }

    /// Number of generated states in the measurement, `C₀·t`.
    pub fn generated(&self) -> f64 {
        self.c0_rate_hz * self.duration_s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// `rep_rate · blinking · polarization`. The last factor carries every
/// per-pulse survival besides blinking (emission probability included).
pub fn generation_rate(rep_rate_hz: f64, blinking_factor: f64, polarization_factor: f64) -> Result<f64> {
    check_range("rep_rate_hz", rep_rate_hz, 0.0, f64::INFINITY, false, false, "> 0")?;
    check_range("blinking_factor", blinking_factor, 0.0, 1.0, false, true, "in (0, 1]")?;
    check_range("polarization_factor", polarization_factor, 0.0, 1.0, false, true, "in (0, 1]")?;
    Ok(rep_rate_hz * blinking_factor * polarization_factor)
}

fn poisson_rate(count: f64, divisor: f64, c0_rel: f64) -> Measured {
    let value = count / divisor;
    let counting = count.sqrt() / divisor;
    Measured::new(value, counting.hypot(value * c0_rel))
}

/// `P_s = C_s/(C₀t)`, `P_e = (C_ea + C_eb)/(2C₀t)` with Poisson errors and the
/// relative `C₀` error in quadrature.
pub fn estimate_pair_probabilities(counts: &CountSummary) -> Result<(ProbabilityEstimate, ProbabilityEstimate)> {
    counts.validate()?;
    let n = counts.generated();
    let rel = counts.c0_rel_sigma;
    let p_s = poisson_rate(counts.c_s, n, rel);
    let p_e = poisson_rate(counts.c_e_a + counts.c_e_b, 2.0 * n, rel);
    Ok((p_s, p_e))
}

/// `P₁ = clicks(D1)/(C₀t)`, `P₂ = coincidences/(C₀t)`.
pub fn estimate_single_photon_probabilities(
    counts: &CountSummary,
) -> Result<(ProbabilityEstimate, ProbabilityEstimate)> {
    counts.validate()?;
    let clicks = counts
        .singles
        .as_ref()
        .and_then(|s| s.first().copied())
        .ok_or_else(|| Error::Invalid("single-photon counts need singles[0] (clicks on D1)".into()))?;
    let n = counts.generated();
    let rel = counts.c0_rel_sigma;
    Ok((poisson_rate(clicks, n, rel), poisson_rate(counts.c_e_a, n, rel)))
}

/// `(p_success, p_error)` according to the experiment type.
pub fn estimate_probabilities(counts: &CountSummary) -> Result<(ProbabilityEstimate, ProbabilityEstimate)> {
    match counts.experiment {
        Experiment::PhotonPairs => estimate_pair_probabilities(counts),
        Experiment::SinglePhoton => estimate_single_photon_probabilities(counts),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaDecomposition {
    pub p_success: f64,
    /// `|T′(P_e)|·σ(P_e)`.
    pub p_error_via_slope: f64,
    pub parameters: Vec<Sensitivity>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaDistance {
    pub distance: f64,
    pub threshold: f64,
    pub sigma_total: f64,
    pub decomposition: SigmaDecomposition,
}

/// Signed distance of the measured success probability from the threshold
/// at the measured error probability, in combined standard deviations.
pub fn sigma_distance(p_success: Measured, p_error: Measured, criterion: &dyn Criterion) -> Result<SigmaDistance> {
    let threshold = criterion.threshold(p_error.value)?;
    let slope_term = if p_error.sigma > 0.0 {
        (criterion.slope(p_error.value)? * p_error.sigma).abs()
    } else {
        0.0
    };
    let parameters = criterion.sensitivities(p_error.value)?;
    let sigma_total = parameters
        .iter()
        .fold(p_success.sigma.hypot(slope_term), |acc, s| acc.hypot(s.contribution));
    if sigma_total.is_nan() || sigma_total <= 0.0 {
        return Err(Error::Computation("total uncertainty is zero; sigma-distance undefined".into()));
    }
    Ok(SigmaDistance {
        distance: (p_success.value - threshold) / sigma_total,
        threshold,
        sigma_total,
        decomposition: SigmaDecomposition {
            p_success: p_success.sigma,
            p_error_via_slope: slope_term,
            parameters,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threshold_solver::{ModeCount, PairCriterion};

    fn paper() -> CountSummary {
        CountSummary::pairs(244113.0, 365.0, 430.0, 1200.0, 11.32e6).with_c0_rel_sigma(0.12 / 11.32)
    }

    #[test]
    fn rate_chain() {
        assert!((generation_rate(80e6, 0.566, 0.5).unwrap() - 22.64e6).abs() < 1e-6);
        // emission at a pi/2 pulse and the polarization filter folded together
        assert!((generation_rate(80e6, 0.566, 0.5 * 0.5).unwrap() - 11.32e6).abs() < 1e-6);
        assert_eq!(generation_rate(80e6, 1.0, 1.0).unwrap(), 80e6);
        assert!(generation_rate(80e6, 0.0, 0.5).is_err());
        assert!(generation_rate(80e6, 0.5, 1.2).is_err());
    }

    #[test]
    fn pair_estimates() {
        let (ps, pe) = estimate_pair_probabilities(&paper()).unwrap();
        let n = 11.32e6 * 1200.0;
        assert!((ps.value - 244113.0 / n).abs() < 1e-18);
        assert!((pe.value - 795.0 / (2.0 * n)).abs() < 1e-20);
        let want = ((244113f64).sqrt() / n).hypot(ps.value * 0.12 / 11.32);
        assert!((ps.sigma - want).abs() < 1e-18);
    }

    #[test]
    fn zero_counts_keep_only_rate_term() {
        let c = CountSummary::pairs(0.0, 0.0, 0.0, 10.0, 1e6).with_c0_rel_sigma(0.01);
        let (ps, pe) = estimate_pair_probabilities(&c).unwrap();
        assert_eq!((ps.value, ps.sigma, pe.value, pe.sigma), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn doubling_data_shrinks_sigma() {
        let c = CountSummary::pairs(1000.0, 10.0, 12.0, 10.0, 1e6);
        let d = CountSummary::pairs(2000.0, 20.0, 24.0, 20.0, 1e6);
        let (a, b) = (estimate_pair_probabilities(&c).unwrap(), estimate_pair_probabilities(&d).unwrap());
        assert!((a.0.value - b.0.value).abs() < 1e-18 && (a.1.value - b.1.value).abs() < 1e-18);
        assert!(b.0.sigma < a.0.sigma && b.1.sigma < a.1.sigma);
    }

    #[test]
    fn invalid_counts() {
        let mut c = paper();
        c.duration_s = 0.0;
        assert!(estimate_pair_probabilities(&c).is_err());
        let mut c = paper();
        c.c_s = -1.0;
        assert!(c.validate().is_err());
        let mut c = CountSummary::single_photon(10.0, 1.0, 1.0, 1e3);
        c.singles = None;
        assert!(estimate_probabilities(&c).is_err());
        assert!(CountSummary::from_json(r#"{"c_e_a":1,"duration_s":1,"c0_rate_hz":1,"bogus":2}"#).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = paper();
        assert_eq!(CountSummary::from_json(&c.to_json().unwrap()).unwrap(), c);
        let s = CountSummary::single_photon(1.2e8, 6500.5, 1200.0, 11.32e6);
        assert_eq!(CountSummary::from_json(&s.to_json().unwrap()).unwrap(), s);
    }

    #[test]
    fn distance_on_threshold_is_zero() {
        let crit = PairCriterion {
            eta: Measured::new(0.2, 0.01),
            n_modes: ModeCount::Asymptotic,
        };
        let pe = Measured::new(1e-6, 1e-8);
        let t = crit.threshold(pe.value).unwrap();
        let d = sigma_distance(Measured::new(t, 1e-7), pe, &crit).unwrap();
        assert!(d.distance.abs() < 1e-9);
        let below = sigma_distance(Measured::new(0.5 * t, 1e-7), pe, &crit).unwrap();
        assert!(below.distance < 0.0);
    }

    #[test]
    fn zero_uncertainty_is_an_error() {
        let crit = PairCriterion {
            eta: Measured::exact(0.2),
            n_modes: ModeCount::Asymptotic,
        };
        assert!(sigma_distance(Measured::exact(1e-4), Measured::exact(1e-6), &crit).is_err());
    }

    #[test]
    fn distance_grows_with_data() {
        let crit = PairCriterion {
            eta: Measured::exact(0.1467),
            n_modes: ModeCount::Asymptotic,
        };
        let mut last = 0.0;
        for k in [1.0, 2.0, 4.0, 8.0] {
            let c = CountSummary::pairs(244113.0 * k, 365.0 * k, 430.0 * k, 1200.0 * k, 11.32e6);
            let (ps, pe) = estimate_pair_probabilities(&c).unwrap();
            let d = sigma_distance(ps, pe, &crit).unwrap().distance;
            assert!(d > last);
            last = d;
        }
    }
}

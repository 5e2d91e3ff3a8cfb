//! Click and coincidence probabilities of Gaussian and photon-number
//! correlated states seen through a lossy channel, beamsplitters and on/off
//! detectors.
//!
//! Two independent routes are provided for single-mode Gaussian inputs: the
//! covariance-matrix pipeline in [`gaussian`] and the truncated Fock-basis
//! oracle in [`fock`]. Photon-pair sources of the multimode parametric
//! down-conversion family are handled in closed form by [`pairs`].

pub mod fock;
pub mod gaussian;
pub mod pairs;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

pub use fock::{fock_click_probs, fock_oracle_click_probs, fock_photon_distribution, FockOracleResult};
pub use gaussian::{
    apply_loss, beamsplit, lossy_no_click_ln, no_click_log_probability, no_click_probability,
    single_photon_click_probs, single_photon_click_probs_reduced, to_covariance, CovarianceForm,
};
pub use pairs::{multimode_pair_click_probs, tmsv_pair_click_probs};

/// Pure single-mode Gaussian state `D(α) S(r) |0⟩` with `α = d·e^{iθ}`.
///
/// The squeezing reduces the `x` quadrature; `relative_angle` is the angle
/// between the displacement and that axis. Mean photon number is
/// `d² + sinh² r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianStateParams {
    pub displacement_amplitude: f64,
    pub squeezing: f64,
    pub relative_angle: f64,
}

impl GaussianStateParams {
    /// Validates and canonicalises the angle into `[0, π)`. The angle is set
    /// to zero when it carries no meaning (no displacement or no squeezing).
    pub fn new(displacement_amplitude: f64, squeezing: f64, relative_angle: f64) -> Result<Self> {
        check_range("displacement_amplitude", displacement_amplitude, 0.0, f64::INFINITY, true, false, ">= 0")?;
        check_range("squeezing", squeezing, 0.0, f64::INFINITY, true, false, ">= 0")?;
        if !relative_angle.is_finite() {
            return Err(Error::Domain {
                name: "relative_angle",
                value: relative_angle,
                expected: "finite",
            });
        }
        let mut angle = relative_angle.rem_euclid(std::f64::consts::PI);
        // rem_euclid can round up to exactly π for tiny negative inputs
        if angle >= std::f64::consts::PI {
            angle = 0.0;
        }
        if displacement_amplitude == 0.0 || squeezing == 0.0 {
            angle = 0.0;
        }
        Ok(Self {
            displacement_amplitude,
            squeezing,
            relative_angle: angle,
        })
    }

    pub fn vacuum() -> Self {
        Self {
            displacement_amplitude: 0.0,
            squeezing: 0.0,
            relative_angle: 0.0,
        }
    }

    pub fn coherent(amplitude: f64) -> Result<Self> {
        Self::new(amplitude, 0.0, 0.0)
    }

    pub fn mean_photon_number(&self) -> f64 {
        let s = self.squeezing.sinh();
        self.displacement_amplitude * self.displacement_amplitude + s * s
    }
}

/// Pair-correlated photon-number parameters `μ_i` of independent two-mode
/// sources. Mode `i` emits `n` pairs with probability `(1 − μ_i) μ_iⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEnsemble {
    occupancies: Vec<f64>,
}

impl ModeEnsemble {
    pub fn new(occupancies: Vec<f64>) -> Result<Self> {
        if occupancies.is_empty() {
            return Err(Error::Invalid("mode ensemble needs at least one mode".into()));
        }
        for &mu in &occupancies {
            check_range("mu", mu, 0.0, 1.0, true, false, "in [0, 1)")?;
        }
        Ok(Self { occupancies })
    }

    pub fn uniform(n_modes: usize, mu: f64) -> Result<Self> {
        Self::new(vec![mu; n_modes])
    }

    pub fn occupancies(&self) -> &[f64] {
        &self.occupancies
    }

    pub fn n_modes(&self) -> usize {
        self.occupancies.len()
    }

    /// Probability of `n` pairs in mode `i`.
    pub fn pair_number_probability(&self, mode: usize, n: u32) -> f64 {
        let mu = self.occupancies[mode];
        (1.0 - mu) * mu.powi(n as i32)
    }
}

/// Loss and splitting model shared by every probability in this crate.
///
/// `eta` folds channel transmission and detector quantum efficiency into one
/// per-photon survival probability. `t_bs` is the beamsplitter transmission
/// toward the success detector; `t_bs_b`, when set, is the second arm's
/// splitter for pair measurements (defaults to `t_bs`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    pub eta: f64,
    #[serde(default = "half")]
    pub t_bs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_bs_b: Option<f64>,
    #[serde(default)]
    pub dark_count_prob: f64,
}

fn half() -> f64 {
    0.5
}

impl DetectionConfig {
    pub fn new(eta: f64, t_bs: f64) -> Result<Self> {
        let cfg = Self {
            eta,
            t_bs,
            t_bs_b: None,
            dark_count_prob: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_dark_counts(mut self, p: f64) -> Result<Self> {
        self.dark_count_prob = p;
        self.validate()?;
        Ok(self)
    }

    pub fn with_second_arm(mut self, t_bs_b: f64) -> Result<Self> {
        self.t_bs_b = Some(t_bs_b);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("eta", self.eta, 0.0, 1.0, false, true, "in (0, 1]")?;
        check_range("t_bs", self.t_bs, 0.0, 1.0, false, false, "in (0, 1)")?;
        if let Some(t) = self.t_bs_b {
            check_range("t_bs_b", t, 0.0, 1.0, false, false, "in (0, 1)")?;
        }
        check_range("dark_count_prob", self.dark_count_prob, 0.0, 1.0, true, false, "in [0, 1)")
    }

    pub fn arm_b_transmission(&self) -> f64 {
        self.t_bs_b.unwrap_or(self.t_bs)
    }
}

/// Success and error event probabilities per generated state.
///
/// For single photons: success is a click on D1, error a D1·D2 coincidence.
/// For pairs: success is the cross-arm coincidence D_a1·D_b1, error the
/// same-arm coincidence averaged over both arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickProbabilities {
    pub p_success: f64,
    pub p_error: f64,
}

/// `1 − Q₁ − Q₂ + Q₁₂` written as `(1−Q₁)(1−Q₂) + Q₁Q₂·(e^Δ − 1)` with
/// `Δ = ln Q₁₂ − ln Q₁ − ln Q₂`, which keeps relative precision when the
/// coincidence probability is many orders below the click probabilities.
pub(crate) fn coincidence_from_logs(ln_q1: f64, ln_q2: f64, correlation: f64) -> f64 {
    let click1 = -ln_q1.exp_m1();
    let click2 = -ln_q2.exp_m1();
    let value = click1 * click2 + (ln_q1 + ln_q2).exp() * correlation.exp_m1();
    value.clamp(0.0, 1.0)
}

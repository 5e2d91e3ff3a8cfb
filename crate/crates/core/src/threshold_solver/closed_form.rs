use serde::Serialize;

use super::{ModeCount, ThresholdCurve};
use crate::error::{check_range, Error, Result};
use crate::measured::Measured;

/// Small-`P₂` single-photon boundary with known loss:
/// `P₁ = (η P₂ / (4(2 − η)))^{1/3}`.
pub fn approx_single_threshold(eta: f64, p2: f64) -> Result<f64> {
    check_range("eta", eta, 0.0, 1.0, false, true, "in (0, 1]")?;
    check_range("p2", p2, 0.0, 1.0, true, false, "in [0, 1)")?;
    Ok((eta * p2 / (4.0 * (2.0 - eta))).cbrt())
}

/// `N / (2√(N(N+1)))`, or its `N → ∞` limit `1/2`.
pub fn pair_coefficient(n_modes: ModeCount) -> f64 {
    match n_modes {
        ModeCount::Finite(n) => {
            let n = n as f64;
            n / (2.0 * (n * (n + 1.0)).sqrt())
        }
        ModeCount::Asymptotic => 0.5,
    }
}

/// Small-`P_e` pair boundary `P_s = η · N/(2√(N(N+1))) · √P_e`.
pub fn asymptotic_pair_threshold(eta: f64, p_e: f64, n_modes: ModeCount) -> Result<f64> {
    check_range("eta", eta, 0.0, 1.0, false, true, "in (0, 1]")?;
    check_range("p_e", p_e, 0.0, 1.0, true, false, "in [0, 1)")?;
    Ok(eta * pair_coefficient(n_modes) * p_e.sqrt())
}

/// Loss-independent beamsplitter criterion: a state is non-Gaussian when
/// `P_e < 2 P_S³ (1 − T)/T²`. Returns that error-probability bound.
pub fn simple_bs_criterion(p_s: f64, t_bs: f64) -> Result<f64> {
    check_range("p_s", p_s, 0.0, 1.0, true, false, "in [0, 1)")?;
    check_range("t_bs", t_bs, 0.0, 1.0, false, false, "in (0, 1)")?;
    Ok(2.0 * p_s.powi(3) * (1.0 - t_bs) / (t_bs * t_bs))
}

/// [`simple_bs_criterion`] solved for the success probability.
pub fn simple_bs_success_threshold(p_e: f64, t_bs: f64) -> Result<f64> {
    check_range("p_e", p_e, 0.0, 1.0, true, false, "in [0, 1)")?;
    check_range("t_bs", t_bs, 0.0, 1.0, false, false, "in (0, 1)")?;
    Ok((p_e * t_bs * t_bs / (2.0 * (1.0 - t_bs))).cbrt())
}

/// One parameter's first-order contribution `|∂T/∂p|·σ_p` to the threshold
/// uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sensitivity {
    pub parameter: String,
    pub contribution: f64,
}

/// A certification boundary on the success axis: a measured point is
/// non-Gaussian when `p_success > threshold(p_error)`.
pub trait Criterion: Send + Sync {
    fn label(&self) -> String;

    fn threshold(&self, p_error: f64) -> Result<f64>;

    /// `dT/dP_e`; defaults to a central difference in log coordinates.
    fn slope(&self, p_error: f64) -> Result<f64> {
        if p_error <= 0.0 {
            return Err(Error::Invalid("threshold slope needs p_error > 0".into()));
        }
        let h = 1e-5;
        let up = self.threshold(p_error * (1.0 + h))?;
        let down = self.threshold(p_error * (1.0 - h))?;
        Ok((up - down) / (2.0 * h * p_error))
    }

    /// Contributions of uncertain criterion parameters (transmissions).
    fn sensitivities(&self, _p_error: f64) -> Result<Vec<Sensitivity>> {
        Ok(Vec::new())
    }

    /// Threshold ± the quadrature sum of parameter contributions.
    fn band(&self, p_error: f64) -> Result<(f64, f64)> {
        let t = self.threshold(p_error)?;
        let s = self
            .sensitivities(p_error)?
            .iter()
            .map(|c| c.contribution * c.contribution)
            .sum::<f64>()
            .sqrt();
        Ok(((t - s).max(0.0), t + s))
    }
}

/// Pair criterion with known loss, closed form.
#[derive(Debug, Clone, Copy)]
pub struct PairCriterion {
    pub eta: Measured,
    pub n_modes: ModeCount,
}

impl Criterion for PairCriterion {
    fn label(&self) -> String {
        format!("pair N={} eta={}", self.n_modes, self.eta.value)
    }

    fn threshold(&self, p_error: f64) -> Result<f64> {
        asymptotic_pair_threshold(self.eta.value, p_error, self.n_modes)
    }

    fn slope(&self, p_error: f64) -> Result<f64> {
        if p_error <= 0.0 {
            return Err(Error::Invalid("threshold slope needs p_error > 0".into()));
        }
        Ok(self.threshold(p_error)? / (2.0 * p_error))
    }

    fn sensitivities(&self, p_error: f64) -> Result<Vec<Sensitivity>> {
        let t = self.threshold(p_error)?;
        Ok(vec![Sensitivity {
            parameter: "eta".into(),
            contribution: t / self.eta.value * self.eta.sigma,
        }])
    }
}

/// Loss-independent single-photon criterion mapped onto the success axis.
#[derive(Debug, Clone, Copy)]
pub struct SimpleBsCriterion {
    pub t_bs: Measured,
}

impl Criterion for SimpleBsCriterion {
    fn label(&self) -> String {
        format!("simple-bs t_bs={}", self.t_bs.value)
    }

    fn threshold(&self, p_error: f64) -> Result<f64> {
        simple_bs_success_threshold(p_error, self.t_bs.value)
    }

    fn slope(&self, p_error: f64) -> Result<f64> {
        if p_error <= 0.0 {
            return Err(Error::Invalid("threshold slope needs p_error > 0".into()));
        }
        Ok(self.threshold(p_error)? / (3.0 * p_error))
    }

    fn sensitivities(&self, p_error: f64) -> Result<Vec<Sensitivity>> {
        let t = self.threshold(p_error)?;
        let tb = self.t_bs.value;
        let dlog = (2.0 / tb + 1.0 / (1.0 - tb)) / 3.0;
        Ok(vec![Sensitivity {
            parameter: "t_bs".into(),
            contribution: t * dlog * self.t_bs.sigma,
        }])
    }
}

/// Small-`P₂` single-photon criterion with known loss.
#[derive(Debug, Clone, Copy)]
pub struct SingleApproxCriterion {
    pub eta: Measured,
}

impl Criterion for SingleApproxCriterion {
    fn label(&self) -> String {
        format!("single-approx eta={}", self.eta.value)
    }

    fn threshold(&self, p_error: f64) -> Result<f64> {
        approx_single_threshold(self.eta.value, p_error)
    }

    fn slope(&self, p_error: f64) -> Result<f64> {
        if p_error <= 0.0 {
            return Err(Error::Invalid("threshold slope needs p_error > 0".into()));
        }
        Ok(self.threshold(p_error)? / (3.0 * p_error))
    }

    fn sensitivities(&self, p_error: f64) -> Result<Vec<Sensitivity>> {
        let t = self.threshold(p_error)?;
        let e = self.eta.value;
        let dlog = (1.0 / e + 1.0 / (2.0 - e)) / 3.0;
        Ok(vec![Sensitivity {
            parameter: "eta".into(),
            contribution: t * dlog * self.eta.sigma,
        }])
    }
}

/// A sampled numeric boundary, interpolated linearly in log-log coordinates.
#[derive(Debug, Clone)]
pub struct CurveCriterion {
    pub curve: ThresholdCurve,
}

impl Criterion for CurveCriterion {
    fn label(&self) -> String {
        format!("numeric {:?} N={} eta={}", self.curve.kind, self.curve.n_modes, self.curve.eta)
    }

    fn threshold(&self, p_error: f64) -> Result<f64> {
        self.curve.threshold_at(p_error).ok_or_else(|| {
            Error::Invalid(format!(
                "p_error {p_error:.3e} outside the sampled curve range"
            ))
        })
    }
}

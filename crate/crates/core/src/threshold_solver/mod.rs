//! Gaussian boundaries in (error, success) click-probability space.
//!
//! A boundary point is found by maximising `F = P_success − α·P_error` over a
//! Gaussian family for a fixed penalty weight `α > 0`; sweeping `α` traces
//! the upper envelope of what Gaussian states (and, by linearity, their
//! mixtures) can reach. Large `α` probes the small-error corner.

mod closed_form;
mod curve;
mod pair;
mod single;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::SimplexOptions;

pub use closed_form::{
    approx_single_threshold, asymptotic_pair_threshold, pair_coefficient, simple_bs_criterion,
    simple_bs_success_threshold, Criterion, CurveCriterion, PairCriterion, SimpleBsCriterion,
    SingleApproxCriterion, Sensitivity,
};
pub use curve::{CurveGap, CurveKind, CurvePoint, SolverMeta, ThresholdCurve, CURVE_SCHEMA};
pub use pair::{maximize_f_pair, pair_threshold_curve, PairMaximum};
pub use single::{maximize_f_single, single_threshold_curve, SingleMaximum};

/// Number of independent mode pairs in the pair-source model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeCount {
    Finite(usize),
    /// The `N → ∞` limit, the strictest pair criterion.
    Asymptotic,
}

impl std::fmt::Display for ModeCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModeCount::Finite(n) => write!(f, "{n}"),
            ModeCount::Asymptotic => f.write_str("asymptotic"),
        }
    }
}

impl std::str::FromStr for ModeCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("asymptotic") || s.eq_ignore_ascii_case("inf") {
            return Ok(ModeCount::Asymptotic);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(ModeCount::Finite(n)),
            _ => Err(Error::Invalid(format!("mode count must be a positive integer or \"asymptotic\", got {s:?}"))),
        }
    }
}

impl Serialize for ModeCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ModeCount::Finite(n) => s.serialize_u64(*n as u64),
            ModeCount::Asymptotic => s.serialize_str("asymptotic"),
        }
    }
}

impl<'de> Deserialize<'de> for ModeCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::Number(n) => match n.as_u64() {
                Some(n) if n >= 1 => Ok(ModeCount::Finite(n as usize)),
                _ => Err(serde::de::Error::custom("mode count must be >= 1")),
            },
            serde_json::Value::String(s) => s.parse().map_err(serde::de::Error::custom),
            _ => Err(serde::de::Error::custom("expected integer or \"asymptotic\"")),
        }
    }
}

/// Box constraints for the searched parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBounds {
    pub displacement: (f64, f64),
    pub squeezing: (f64, f64),
    pub occupancy: (f64, f64),
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            displacement: (1e-12, 10.0),
            squeezing: (1e-16, 3.0),
            occupancy: (1e-30, 0.999),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationConfig {
    /// Penalty weights, strictly positive and ascending.
    pub alpha_grid: Vec<f64>,
    /// Seeds per log-scaled search axis.
    pub multistart_seeds: usize,
    #[serde(default)]
    pub param_bounds: ParamBounds,
    /// Relative objective spread at convergence.
    pub tol_value: f64,
    /// Simplex diameter at convergence, in the (log) search coordinates.
    pub tol_param: f64,
    pub max_iters: usize,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            alpha_grid: log_grid(1.0, 1e12, 49),
            multistart_seeds: 3,
            param_bounds: ParamBounds::default(),
            tol_value: 1e-12,
            tol_param: 1e-9,
            max_iters: 20_000,
        }
    }
}

impl OptimizationConfig {
    pub fn with_alpha_grid(mut self, grid: Vec<f64>) -> Self {
        self.alpha_grid = grid;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha_grid.is_empty() {
            return Err(Error::Invalid("alpha grid is empty".into()));
        }
        if self.alpha_grid.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Invalid("alpha grid must be strictly positive".into()));
        }
        if self.alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("alpha grid must be strictly ascending".into()));
        }
        if self.multistart_seeds == 0 {
            return Err(Error::Invalid("multistart_seeds must be >= 1".into()));
        }
        if !(self.tol_value > 0.0 && self.tol_param > 0.0) {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Invalid("max_iters must be >= 1".into()));
        }
        let b = &self.param_bounds;
        for (name, (lo, hi)) in [("displacement", b.displacement), ("squeezing", b.squeezing), ("occupancy", b.occupancy)] {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::Invalid(format!("{name} bounds must satisfy 0 < lo < hi")));
            }
        }
        if b.occupancy.1 >= 1.0 {
            return Err(Error::Invalid("occupancy upper bound must be < 1".into()));
        }
        Ok(())
    }

    pub(crate) fn simplex_options(&self) -> SimplexOptions {
        SimplexOptions {
            tol_value: self.tol_value,
            tol_param: self.tol_param,
            max_iters: self.max_iters,
        }
    }
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Multiplicative offsets `10^{-1..1}` used to spread seeds around a scale guess.
pub(crate) fn seed_factors(count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![1.0];
    }
    (0..count)
        .map(|i| 10f64.powf(-1.0 + 2.0 * i as f64 / (count - 1) as f64))
        .collect()
}

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModeCount, OptimizationConfig};
use crate::error::{Error, Result};

pub const CURVE_SCHEMA: &str = "lossqng.threshold_curve/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    SinglePhoton,
    PhotonPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub p_error: f64,
    pub p_success_threshold: f64,
    /// Penalty weight that produced the point; `None` for closed-form curves.
    pub alpha: Option<f64>,
    /// Relative objective spread of the final simplex.
    pub residual: f64,
}

/// A penalty weight whose maximisation failed or produced an unusable point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveGap {
    pub alpha: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub method: String,
    pub config: Option<OptimizationConfig>,
    pub max_residual: f64,
    pub total_iterations: usize,
}

impl SolverMeta {
    pub fn closed_form(method: &str) -> Self {
        Self {
            method: method.into(),
            config: None,
            max_residual: 0.0,
            total_iterations: 0,
        }
    }
}

/// Gaussian boundary: a measured point with `p_success` above the curve at
/// its `p_error` cannot come from a Gaussian state (or mixture of them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurve {
    pub schema: String,
    pub kind: CurveKind,
    pub eta: f64,
    pub t_bs: f64,
    pub n_modes: ModeCount,
    pub points: Vec<CurvePoint>,
    #[serde(default)]
    pub gaps: Vec<CurveGap>,
    pub solver_meta: SolverMeta,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    p_error: f64,
    p_success_threshold: f64,
    alpha: Option<f64>,
    residual: f64,
}

impl ThresholdCurve {
    /// Sorts raw points by `p_error` and moves any point that breaks strict
    /// monotonicity or leaves `(0,1)²` into `gaps`.
    pub fn assemble(
        kind: CurveKind,
        eta: f64,
        t_bs: f64,
        n_modes: ModeCount,
        mut raw: Vec<CurvePoint>,
        mut gaps: Vec<CurveGap>,
        solver_meta: SolverMeta,
    ) -> Self {
        raw.sort_by(|a, b| a.p_error.total_cmp(&b.p_error));
        let mut points: Vec<CurvePoint> = Vec::with_capacity(raw.len());
        for p in raw {
            let inside = |v: f64| v > 0.0 && v < 1.0;
            let reason = if !(inside(p.p_error) && inside(p.p_success_threshold)) {
                Some("point outside (0,1)^2")
            } else if let Some(last) = points.last() {
                if p.p_error <= last.p_error || p.p_success_threshold <= last.p_success_threshold {
                    Some("point breaks strict monotonicity")
                } else {
                    None
                }
            } else {
                None
            };
            match reason {
                Some(r) => gaps.push(CurveGap {
                    alpha: p.alpha.unwrap_or(f64::NAN),
                    reason: r.into(),
                }),
                None => points.push(p),
            }
        }
        gaps.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        Self {
            schema: CURVE_SCHEMA.into(),
            kind,
            eta,
            t_bs,
            n_modes,
            points,
            gaps,
            solver_meta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CURVE_SCHEMA {
            return Err(Error::Invalid(format!("unsupported curve schema {:?}", self.schema)));
        }
        if self.points.is_empty() {
            return Err(Error::Invalid("curve has no points".into()));
        }
        for p in &self.points {
            if !(p.p_error > 0.0 && p.p_error < 1.0 && p.p_success_threshold > 0.0 && p.p_success_threshold < 1.0) {
                return Err(Error::Invalid(format!("curve point outside (0,1)^2: {p:?}")));
            }
        }
        for w in self.points.windows(2) {
            if !(w[1].p_error > w[0].p_error && w[1].p_success_threshold > w[0].p_success_threshold) {
                return Err(Error::Invalid("curve points are not strictly increasing".into()));
            }
        }
        Ok(())
    }

    /// Log-log interpolation; `None` outside the sampled `p_error` range.
    pub fn threshold_at(&self, p_error: f64) -> Option<f64> {
        let first = self.points.first()?;
        let last = self.points.last()?;
        if !(p_error >= first.p_error && p_error <= last.p_error) {
            return None;
        }
        let i = self.points.partition_point(|p| p.p_error < p_error);
        if i == 0 {
            return Some(first.p_success_threshold);
        }
        let (a, b) = (&self.points[i - 1], &self.points[i]);
        let w = (p_error / a.p_error).ln() / (b.p_error / a.p_error).ln();
        Some((a.p_success_threshold.ln() + w * (b.p_success_threshold / a.p_success_threshold).ln()).exp())
    }

    pub fn p_error_range(&self) -> Option<(f64, f64)> {
        Some((self.points.first()?.p_error, self.points.last()?.p_error))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(CsvRow {
                p_error: p.p_error,
                p_success_threshold: p.p_success_threshold,
                alpha: p.alpha,
                residual: p.residual,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the points of a CSV export; metadata must be supplied.
    pub fn read_csv_points<R: Read>(input: R) -> Result<Vec<CurvePoint>> {
        let mut r = csv::Reader::from_reader(input);
        r.deserialize::<CsvRow>()
            .map(|row| {
                let row = row?;
                Ok(CurvePoint {
                    p_error: row.p_error,
                    p_success_threshold: row.p_success_threshold,
                    alpha: row.alpha,
                    residual: row.residual,
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let curve: Self = serde_json::from_str(s)?;
        curve.validate()?;
        Ok(curve)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

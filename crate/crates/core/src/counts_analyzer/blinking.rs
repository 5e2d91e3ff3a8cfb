use std::io::{Read, Write};

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::scan_then_golden;

/// Area of the autocorrelation peak `delay_index` pulses away from zero delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakArea {
    pub delay_index: i64,
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlinkingFit {
    /// Long-delay plateau over the zero-delay envelope, `B/(A+B)`.
    pub blinking_factor: f64,
    pub amplitude: f64,
    /// Decay constant in pulse periods.
    pub tau: f64,
    pub plateau: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
}

/// Linear least squares for `A`, `B` at fixed `τ`; returns `(A, B, SSE)`.
fn project(peaks: &[(f64, f64)], tau: f64) -> Option<(f64, f64, f64)> {
    let mut m = Matrix2::zeros();
    let mut v = Vector2::zeros();
    for &(n, y) in peaks {
        let e = (-n / tau).exp();
        m += Matrix2::new(e * e, e, e, 1.0);
        v += Vector2::new(e * y, y);
    }
    let sol = m.lu().solve(&v)?;
    let sse = peaks
        .iter()
        .map(|&(n, y)| (sol[0] * (-n / tau).exp() + sol[1] - y).powi(2))
        .sum();
    Some((sol[0], sol[1], sse))
}

/// Fits `area(n) = A·exp(−|n|/τ) + B` to the side peaks (`n ≠ 0`) by a
/// one-dimensional search over `τ` with `A`, `B` eliminated linearly.
pub fn blinking_fit(peaks: &[PeakArea]) -> Result<BlinkingFit> {
    let data: Vec<(f64, f64)> = peaks
        .iter()
        .filter(|p| p.delay_index != 0)
        .map(|p| (p.delay_index.unsigned_abs() as f64, p.area))
        .collect();
    if data.len() < 4 {
        return Err(Error::Fit {
            message: format!("need at least 4 side peaks, got {}", data.len()),
            residual: f64::NAN,
        });
    }
    if data.iter().any(|(_, y)| !y.is_finite() || *y < 0.0) {
        return Err(Error::Fit {
            message: "peak areas must be finite and non-negative".into(),
            residual: f64::NAN,
        });
    }
    let max_n = data.iter().map(|d| d.0).fold(0.0, f64::max);
    let min_n = data.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    if max_n <= min_n {
        return Err(Error::Fit {
            message: "peaks must span several delays".into(),
            residual: f64::NAN,
        });
    }

    let mean = data.iter().map(|d| d.1).sum::<f64>() / data.len() as f64;
    let spread = data.iter().map(|d| (d.1 - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-12 * mean.abs() {
        return Ok(BlinkingFit {
            blinking_factor: 1.0,
            amplitude: 0.0,
            tau: f64::INFINITY,
            plateau: mean,
            rms_residual: 0.0,
        });
    }

    let (lo, hi) = ((0.05 * min_n).ln(), (20.0 * max_n).ln());
    let sse = |ln_tau: f64| project(&data, ln_tau.exp()).map_or(f64::INFINITY, |s| s.2);
    let (ln_tau, best) = scan_then_golden(sse, lo, hi, 200, 1e-10);
    let rms = (best / data.len() as f64).sqrt();
    let (a, b, _) = project(&data, ln_tau.exp()).ok_or_else(|| Error::Fit {
        message: "singular normal equations".into(),
        residual: rms,
    })?;
    if ln_tau - lo < 1e-6 || hi - ln_tau < 1e-6 || a + b <= 0.0 || (a + b).is_nan() || b < 0.0 {
        return Err(Error::Fit {
            message: format!("no exponential decay resolved (tau = {:.3e}, A = {a:.3e}, B = {b:.3e})", ln_tau.exp()),
            residual: rms,
        });
    }
    Ok(BlinkingFit {
        blinking_factor: b / (a + b),
        amplitude: a,
        tau: ln_tau.exp(),
        plateau: b,
        rms_residual: rms,
    })
}

/// Reads `delay_index,area` rows (header required).
pub fn read_peak_areas_csv<R: Read>(input: R) -> Result<Vec<PeakArea>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_peak_areas_csv<W: Write>(peaks: &[PeakArea], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in peaks {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

use serde::Serialize;

use super::{attenuation_scan, undersample, AttenuationScan, CountSummary, Undersampling};
use crate::error::{Error, Result};
use crate::threshold_solver::Criterion;

/// Fits behind a depth estimate. Lines are in natural-log coordinates:
/// `ln p_s = data_intercept + data_slope·ln p_e` and
/// `ln p_e = error_intercept + error_slope·ln T`, with `T` the residual
/// transmission of the scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthFitMeta {
    pub n_points: usize,
    pub data_slope: f64,
    pub data_intercept: f64,
    pub data_rms: f64,
    pub error_slope: f64,
    pub error_intercept: f64,
    pub error_rms: f64,
    /// `ln p_e` around which the threshold was expanded.
    pub expansion_center: f64,
    /// `ln T(p_e) ≈ c₀ + c₁·δ + c₂·δ²/2`, `δ = ln p_e − center`.
    pub threshold_expansion: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthResult {
    pub depth_db: f64,
    pub crossing_transmission: f64,
    /// First-order spread from the measured uncertainties and the
    /// threshold band.
    pub depth_sigma_db: f64,
    pub fit_meta: DepthFitMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DepthOutcome {
    Crossing(DepthResult),
    /// The data line does not meet the threshold for any transmission in
    /// `[MIN_TRANSMISSION, 1]`.
    NoCrossing { reason: String, fit_meta: DepthFitMeta },
}

impl DepthOutcome {
    pub fn depth_db(&self) -> Option<f64> {
        match self {
            DepthOutcome::Crossing(d) => Some(d.depth_db),
            DepthOutcome::NoCrossing { .. } => None,
        }
    }
}

const MIN_TRANSMISSION: f64 = 1e-6;
const EXPANSION_STEP: f64 = 0.05;

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (intercept + slope * a - b).powi(2)).sum::<f64>() / n).sqrt();
    (slope, intercept, rms)
}

#[derive(Clone, Copy)]
struct Lines {
    data_slope: f64,
    data_intercept: f64,
    error_slope: f64,
    error_intercept: f64,
    center: f64,
    expansion: [f64; 3],
}

impl Lines {
    /// ln(data) − ln(threshold) at log-transmission `l`.
    fn gap(&self, l: f64) -> f64 {
        let x = self.error_intercept + self.error_slope * l;
        let d = x - self.center;
        let [c0, c1, c2] = self.expansion;
        self.data_intercept + self.data_slope * x - (c0 + c1 * d + 0.5 * c2 * d * d)
    }

    fn crossing(&self) -> std::result::Result<f64, String> {
        let (mut lo, mut hi) = (MIN_TRANSMISSION.ln(), 0.0);
        let (g_lo, g_hi) = (self.gap(lo), self.gap(hi));
        if !(g_hi.is_finite() && g_lo.is_finite()) {
            return Err("fit produced non-finite values".into());
        }
        if g_hi <= 0.0 {
            return Err("data lies on or below the threshold without added loss".into());
        }
        if g_lo > 0.0 {
            return Err(format!("data stays above the threshold down to transmission {MIN_TRANSMISSION:e}"));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.gap(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Non-Gaussian depth: the residual transmission at which the log-log data
/// line meets the second-order expansion of the threshold.
pub fn depth_fit(scan: &AttenuationScan, criterion: &dyn Criterion) -> Result<DepthOutcome> {
    scan.validate()?;
    let used: Vec<(f64, f64, f64)> = scan
        .attenuations
        .iter()
        .zip(&scan.points)
        .filter(|(_, p)| p.p_e.value > 0.0 && p.p_s.value > 0.0)
        .map(|(a, p)| ((1.0 - a).ln(), p.p_e.value.ln(), p.p_s.value.ln()))
        .collect();
    if used.len() < 5 {
        return Err(Error::Fit {
            message: format!("depth fit needs at least 5 points with non-zero probabilities, got {}", used.len()),
            residual: f64::NAN,
        });
    }
    let l: Vec<f64> = used.iter().map(|u| u.0).collect();
    let x: Vec<f64> = used.iter().map(|u| u.1).collect();
    let y: Vec<f64> = used.iter().map(|u| u.2).collect();
    let (data_slope, data_intercept, data_rms) = line_fit(&x, &y);
    let (error_slope, error_intercept, error_rms) = line_fit(&l, &x);
    if !(data_slope.is_finite() && error_slope.is_finite()) || error_slope == 0.0 {
        return Err(Error::Fit {
            message: "scan does not vary with attenuation".into(),
            residual: data_rms,
        });
    }

    let center = x.iter().sum::<f64>() / x.len() as f64;
    let g = |v: f64| -> Result<f64> { Ok(criterion.threshold(v.exp())?.ln()) };
    let h = EXPANSION_STEP;
    let (gm, g0, gp) = (g(center - h)?, g(center)?, g(center + h)?);
    let expansion = [g0, (gp - gm) / (2.0 * h), (gp - 2.0 * g0 + gm) / (h * h)];

    let lines = Lines {
        data_slope,
        data_intercept,
        error_slope,
        error_intercept,
        center,
        expansion,
    };
    let fit_meta = DepthFitMeta {
        n_points: used.len(),
        data_slope,
        data_intercept,
        data_rms,
        error_slope,
        error_intercept,
        error_rms,
        expansion_center: center,
        threshold_expansion: expansion,
    };
    let l_cross = match lines.crossing() {
        Ok(v) => v,
        Err(reason) => return Ok(DepthOutcome::NoCrossing { reason, fit_meta }),
    };
    let depth = |l: f64| -10.0 * l.exp().log10();
    let depth_db = depth(l_cross);

    // Shift one input by one sigma at a time and re-solve.
    let first = &scan.points[0];
    let rel_s = first.p_s.sigma / first.p_s.value;
    let rel_e = first.p_e.sigma / first.p_e.value;
    let (band_lo, band_hi) = criterion.band(center.exp())?;
    let rel_t = (band_hi - band_lo) / (2.0 * g0.exp());
    let shifts = [
        Lines {
            data_intercept: data_intercept + rel_s.ln_1p(),
            ..lines
        },
        Lines {
            data_intercept: data_intercept - data_slope * rel_e.ln_1p(),
            error_intercept: error_intercept + rel_e.ln_1p(),
            ..lines
        },
        Lines {
            expansion: [g0 + rel_t.ln_1p(), expansion[1], expansion[2]],
            ..lines
        },
    ];
    let depth_sigma_db = shifts
        .iter()
        .filter_map(|s| s.crossing().ok())
        .map(|lc| depth(lc) - depth_db)
        .fold(0.0f64, f64::hypot);

    Ok(DepthOutcome::Crossing(DepthResult {
        depth_db,
        crossing_transmission: l_cross.exp(),
        depth_sigma_db,
        fit_meta,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowDepth {
    pub attenuation: f64,
    pub outcome: DepthOutcome,
}

/// Depth after a fixed pre-attenuation: the counts are first undersampled to
/// `attenuation`, the criterion is rebuilt for the remaining transmission
/// `1 − attenuation`, and a fresh scan is fitted.
pub fn pre_attenuated_depths<F>(
    counts: &CountSummary,
    attenuations: &[f64],
    a_max: f64,
    step: f64,
    criterion_for: F,
) -> Result<Vec<RowDepth>>
where
    F: Fn(f64) -> Result<Box<dyn Criterion>>,
{
    attenuations
        .iter()
        .map(|&a| {
            let base = undersample(counts, a, Undersampling::Deterministic)?;
            let scan = attenuation_scan(&base, a_max, step)?;
            let criterion = criterion_for(1.0 - a)?;
            Ok(RowDepth {
                attenuation: a,
                outcome: depth_fit(&scan, criterion.as_ref())?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts_analyzer::ScanPoint;
    use crate::measured::Measured;
    use crate::threshold_solver::{simple_bs_criterion, ModeCount, PairCriterion, SimpleBsCriterion};

    fn power_scan(ps0: f64, pe0: f64, s_exp: i32) -> AttenuationScan {
        let attenuations: Vec<f64> = (0..=40).map(|i| i as f64 * 0.02).collect();
        let points = attenuations
            .iter()
            .map(|a| {
                let u = 1.0 - a;
                ScanPoint {
                    p_e: Measured::new(pe0 * u * u, 0.01 * pe0 * u * u),
                    p_s: Measured::new(ps0 * u.powi(s_exp), 0.01 * ps0 * u.powi(s_exp)),
                }
            })
            .collect();
        AttenuationScan { attenuations, points }
    }

    #[test]
    fn single_photon_crossing_matches_algebra() {
        let t = 0.5166;
        let crit = SimpleBsCriterion { t_bs: Measured::new(t, 3e-4) };
        let ps0 = 0.009;
        let target = 0.25;
        let pe0 = simple_bs_criterion(ps0, t).unwrap() * target;
        let out = depth_fit(&power_scan(ps0, pe0, 1), &crit).unwrap();
        let DepthOutcome::Crossing(d) = out else { panic!("{out:?}") };
        assert!((d.crossing_transmission - target).abs() < 1e-9);
        assert!((d.depth_db + 10.0 * d.crossing_transmission.log10()).abs() < 1e-12);
        assert!(d.depth_sigma_db > 0.0);
    }

    #[test]
    fn homogeneous_pair_data_crosses_at_fixed_ratio() {
        let crit = PairCriterion { eta: Measured::new(0.2, 0.0), n_modes: ModeCount::Asymptotic };
        let (ps0, pe0) = (2e-5, 1e-8);
        let out = depth_fit(&power_scan(ps0, pe0, 2), &crit).unwrap();
        let DepthOutcome::Crossing(d) = out else { panic!("{out:?}") };
        let want = 0.2 * 0.5 * pe0.sqrt() / ps0;
        assert!((d.crossing_transmission / want - 1.0).abs() < 1e-9);
    }

    #[test]
    fn below_threshold_is_not_a_fit_failure() {
        let crit = PairCriterion { eta: Measured::new(0.2, 0.0), n_modes: ModeCount::Asymptotic };
        let out = depth_fit(&power_scan(1e-7, 1e-8, 2), &crit).unwrap();
        assert!(matches!(out, DepthOutcome::NoCrossing { .. }));
        assert!(out.depth_db().is_none());
    }

    #[test]
    fn too_few_points() {
        let mut scan = power_scan(1e-5, 1e-8, 2);
        scan.attenuations.truncate(4);
        scan.points.truncate(4);
        let crit = PairCriterion { eta: Measured::new(0.2, 0.0), n_modes: ModeCount::Asymptotic };
        assert!(depth_fit(&scan, &crit).is_err());
    }
}

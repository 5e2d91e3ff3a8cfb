use rayon::prelude::*;
use serde::Serialize;

use super::single::select;
use super::{
    pair_coefficient, seed_factors, CurveGap, CurveKind, CurvePoint, ModeCount, OptimizationConfig, SolverMeta,
    ThresholdCurve,
};
use crate::error::{check_range, Error, Result};
use crate::optim::{nelder_mead, scan_then_golden, Minimum};
use crate::photon_statistics::{multimode_pair_click_probs, DetectionConfig, ModeEnsemble};

#[derive(Debug, Clone, Serialize)]
pub struct PairMaximum {
    pub alpha: f64,
    pub p_success: f64,
    pub p_error: f64,
    pub objective: f64,
    pub ensemble: ModeEnsemble,
    pub iterations: usize,
    pub residual: f64,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(mu: f64) -> f64 {
    (mu / (1.0 - mu)).ln()
}

/// Maximises `P_s − α P_e` over `N` independent pair modes with balanced
/// splitters. Candidates: all modes equal, one dominant mode, then a
/// simplex refinement of each in logit coordinates.
pub fn maximize_f_pair(alpha: f64, eta: f64, n_modes: usize, cfg: &OptimizationConfig) -> Result<PairMaximum> {
    check_range("alpha", alpha, 0.0, f64::INFINITY, false, false, "> 0")?;
    if n_modes == 0 {
        return Err(Error::Invalid("n_modes must be >= 1".into()));
    }
    let det = DetectionConfig::new(eta, 0.5)?;
    cfg.validate()?;
    let (lo, hi) = cfg.param_bounds.occupancy;

    let occupancies = |x: &[f64]| -> Vec<f64> { x.iter().map(|&v| logistic(v).clamp(lo, hi)).collect() };
    let eval = |mus: Vec<f64>| -> f64 {
        match ModeEnsemble::new(mus).and_then(|e| multimode_pair_click_probs(&e, &det)) {
            Ok(p) => -(p.p_success - alpha * p.p_error),
            Err(_) => f64::INFINITY,
        }
    };
    let objective = |x: &[f64]| eval(occupancies(x));

    let (xl, xh) = (logit(lo), logit(hi));
    let line = |pattern: &dyn Fn(f64) -> Vec<f64>| scan_then_golden(|x| objective(&pattern(x)), xl, xh, 400, 1e-10);
    let symmetric = |x: f64| vec![x; n_modes];
    let dominant = |x: f64| {
        let mut v = vec![xl; n_modes];
        v[0] = x;
        v
    };
    let (xs, vs) = line(&symmetric);
    let (xd, vd) = line(&dominant);

    let mut runs = vec![
        Minimum { point: symmetric(xs), value: vs, iterations: 0, converged: true, spread: 0.0 },
        Minimum { point: dominant(xd), value: vd, iterations: 0, converged: true, spread: 0.0 },
    ];
    if n_modes > 1 {
        let step = vec![0.5; n_modes];
        let opts = cfg.simplex_options();
        let mut seeds = vec![symmetric(xs), dominant(xd)];
        for f in seed_factors(cfg.multistart_seeds) {
            if f != 1.0 {
                seeds.push(symmetric(xs + f.ln()));
            }
        }
        for s in seeds {
            runs.push(nelder_mead(objective, &s, &step, opts));
        }
    }
    let iterations = runs.iter().map(|m| m.iterations).sum();
    let best = select(runs, cfg.tol_value, |m| occupancies(&m.point).iter().map(|v| v * v).sum());
    let mus = occupancies(&best.point);
    if !best.converged {
        return Err(Error::NotConverged {
            iterations,
            best_value: -best.value,
            best_point: mus,
        });
    }
    let ensemble = ModeEnsemble::new(mus)?;
    let p = multimode_pair_click_probs(&ensemble, &det)?;
    Ok(PairMaximum {
        alpha,
        p_success: p.p_success,
        p_error: p.p_error,
        objective: p.p_success - alpha * p.p_error,
        ensemble,
        iterations,
        residual: best.spread / best.value.abs().max(f64::MIN_POSITIVE),
    })
}

/// Numeric boundary for finite `N`; the closed form `P_s = (η/2)√P_e` for
/// the asymptotic limit, sampled where `α` would place its maximiser
/// (`P_e = c²/(4α²)`).
pub fn pair_threshold_curve(eta: f64, n_modes: ModeCount, cfg: &OptimizationConfig) -> Result<ThresholdCurve> {
    DetectionConfig::new(eta, 0.5)?;
    cfg.validate()?;
    let n = match n_modes {
        ModeCount::Asymptotic => {
            let c = eta * pair_coefficient(n_modes);
            let points = cfg
                .alpha_grid
                .iter()
                .map(|&a| {
                    let pe = c * c / (4.0 * a * a);
                    CurvePoint {
                        p_error: pe,
                        p_success_threshold: c * pe.sqrt(),
                        alpha: Some(a),
                        residual: 0.0,
                    }
                })
                .collect();
            return Ok(ThresholdCurve::assemble(
                CurveKind::PhotonPairs,
                eta,
                0.5,
                n_modes,
                points,
                Vec::new(),
                SolverMeta::closed_form("asymptotic closed form"),
            ));
        }
        ModeCount::Finite(n) => n,
    };

    let results: Vec<(f64, Result<PairMaximum>)> = cfg
        .alpha_grid
        .par_iter()
        .map(|&a| (a, maximize_f_pair(a, eta, n, cfg)))
        .collect();
    let mut points = Vec::new();
    let mut gaps = Vec::new();
    let mut total_iterations = 0;
    let mut max_residual = 0.0f64;
    for (alpha, res) in results {
        match res {
            Ok(m) => {
                total_iterations += m.iterations;
                max_residual = max_residual.max(m.residual);
                points.push(CurvePoint {
                    p_error: m.p_error,
                    p_success_threshold: m.p_success,
                    alpha: Some(alpha),
                    residual: m.residual,
                });
            }
            Err(e) => gaps.push(CurveGap {
                alpha,
                reason: e.to_string(),
            }),
        }
    }
    Ok(ThresholdCurve::assemble(
        CurveKind::PhotonPairs,
        eta,
        0.5,
        n_modes,
        points,
        gaps,
        SolverMeta {
            method: "symmetric/dominant line search + nelder-mead in logit(mu)".into(),
            config: Some(cfg.clone()),
            max_residual,
            total_iterations,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threshold_solver::log_grid;

    #[test]
    fn single_mode_matches_brute_scan() {
        let cfg = OptimizationConfig::default();
        let det = DetectionConfig::new(0.5, 0.5).unwrap();
        for alpha in [1e2, 1e4, 1e6] {
            let m = maximize_f_pair(alpha, 0.5, 1, &cfg).unwrap();
            let f = |mu: f64| {
                let p = multimode_pair_click_probs(&ModeEnsemble::new(vec![mu]).unwrap(), &det).unwrap();
                p.p_success - alpha * p.p_error
            };
            let best = (0..20_000)
                .map(|i| f(10f64.powf(-12.0 + 12.0 * i as f64 / 20_000.0) * 0.99))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(m.objective >= best * (1.0 - 1e-9), "alpha {alpha}");
            assert!((m.objective - best) / best < 1e-6);
        }
    }

    #[test]
    fn asymptotic_curve_is_closed_form() {
        let cfg = OptimizationConfig::default();
        let c = pair_threshold_curve(0.1467, ModeCount::Asymptotic, &cfg).unwrap();
        c.validate().unwrap();
        for p in &c.points {
            assert!((p.p_success_threshold - 0.07335 * p.p_error.sqrt()).abs() < 1e-12 * p.p_success_threshold);
        }
    }

    #[test]
    fn two_mode_curve_below_asymptotic() {
        let cfg = OptimizationConfig::default().with_alpha_grid(log_grid(1e2, 1e6, 5));
        let c = pair_threshold_curve(0.5, ModeCount::Finite(2), &cfg).unwrap();
        assert!(c.gaps.is_empty(), "{:?}", c.gaps);
        for p in &c.points {
            assert!(p.p_success_threshold <= 0.25 * p.p_error.sqrt());
        }
    }

    #[test]
    fn rejects_zero_modes() {
        assert!(maximize_f_pair(1.0, 0.5, 0, &OptimizationConfig::default()).is_err());
    }
}

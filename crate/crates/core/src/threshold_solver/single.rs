use rayon::prelude::*;
use serde::Serialize;

use super::{seed_factors, CurveGap, CurveKind, CurvePoint, ModeCount, OptimizationConfig, SolverMeta, ThresholdCurve};
use crate::error::{check_range, Error, Result};
use crate::optim::{nelder_mead, Minimum};
use crate::photon_statistics::{single_photon_click_probs_reduced, DetectionConfig, GaussianStateParams};

#[derive(Debug, Clone, Serialize)]
pub struct SingleMaximum {
    pub alpha: f64,
    pub p_success: f64,
    pub p_error: f64,
    pub objective: f64,
    pub params: GaussianStateParams,
    pub iterations: usize,
    pub residual: f64,
}

fn decode(x: &[f64], cfg: &OptimizationConfig) -> (f64, f64, f64) {
    let b = &cfg.param_bounds;
    let d = x[0].exp().clamp(b.displacement.0, b.displacement.1);
    let r = x[1].exp().clamp(b.squeezing.0, b.squeezing.1);
    (d, r, x[2])
}

/// Maximises `P₁ − α P₂` over displaced squeezed states by multistart
/// simplex search in `(ln d, ln r, θ)`.
pub fn maximize_f_single(alpha: f64, eta: f64, t_bs: f64, cfg: &OptimizationConfig) -> Result<SingleMaximum> {
    check_range("alpha", alpha, 0.0, f64::INFINITY, false, false, "> 0")?;
    let det = DetectionConfig::new(eta, t_bs)?;
    cfg.validate()?;

    let objective = |x: &[f64]| {
        let (d, r, th) = decode(x, cfg);
        let state = GaussianStateParams {
            displacement_amplitude: d,
            squeezing: r,
            relative_angle: th,
        };
        let p = single_photon_click_probs_reduced(&state, &det);
        -(p.p_success - alpha * p.p_error)
    };

    // Optimum scales as d ~ α^{-1/4}, r ~ α^{-1/2}.
    let d0 = 0.8 * alpha.powf(-0.25);
    let r0 = 0.6 * alpha.powf(-0.5);
    let factors = seed_factors(cfg.multistart_seeds);
    let mut starts = Vec::new();
    for &fd in &factors {
        for &fr in &factors {
            for th in [0.05, std::f64::consts::FRAC_PI_2] {
                starts.push([(d0 * fd).ln(), (r0 * fr).ln(), th]);
            }
        }
    }

    let opts = cfg.simplex_options();
    let runs: Vec<Minimum> = starts
        .iter()
        .map(|x0| nelder_mead(objective, x0, &[0.5, 0.5, 0.3], opts))
        .collect();
    let iterations = runs.iter().map(|m| m.iterations).sum();
    let best = select(runs, cfg.tol_value, |m| {
        let (d, r, _) = decode(&m.point, cfg);
        d * d + r * r
    });
    let (d, r, th) = decode(&best.point, cfg);
    if !best.converged {
        return Err(Error::NotConverged {
            iterations,
            best_value: -best.value,
            best_point: vec![d, r, th],
        });
    }
    let params = GaussianStateParams::new(d, r, th)?;
    let p = single_photon_click_probs_reduced(&params, &det);
    Ok(SingleMaximum {
        alpha,
        p_success: p.p_success,
        p_error: p.p_error,
        objective: p.p_success - alpha * p.p_error,
        params,
        iterations,
        residual: best.spread / best.value.abs().max(f64::MIN_POSITIVE),
    })
}

/// Lowest objective; values within the tolerance are tied and the smaller
/// parameter norm wins.
pub(crate) fn select(runs: Vec<Minimum>, tol: f64, norm: impl Fn(&Minimum) -> f64) -> Minimum {
    let lowest = runs.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
    let slack = tol * lowest.abs();
    runs.into_iter()
        .filter(|m| m.value <= lowest + slack)
        .min_by(|a, b| norm(a).total_cmp(&norm(b)))
        .expect("at least one start")
}

/// Sweeps the penalty grid in parallel; failed weights become gaps.
pub fn single_threshold_curve(eta: f64, t_bs: f64, cfg: &OptimizationConfig) -> Result<ThresholdCurve> {
    DetectionConfig::new(eta, t_bs)?;
    cfg.validate()?;
    let results: Vec<(f64, Result<SingleMaximum>)> = cfg
        .alpha_grid
        .par_iter()
        .map(|&a| (a, maximize_f_single(a, eta, t_bs, cfg)))
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
        CurveKind::SinglePhoton,
        eta,
        t_bs,
        ModeCount::Finite(1),
        points,
        gaps,
        SolverMeta {
            method: "multistart nelder-mead over (ln d, ln r, theta)".into(),
            config: Some(cfg.clone()),
            max_residual,
            total_iterations,
        },
    ))
}

//! Derivative-free minimisers used by the threshold solver.

/// Convergence settings for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Relative spread of objective values across the simplex.
    pub tol_value: f64,
    /// Largest vertex distance from the best vertex (max-norm).
    pub tol_param: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective spread across the final simplex.
    pub spread: f64,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Nelder–Mead simplex minimisation starting from an axis-aligned simplex
/// around `x0` with per-coordinate `step`. One restart from the converged
/// vertex guards against premature collapse.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: &[f64], opts: SimplexOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let first = run_simplex(&f, x0, step, opts, opts.max_iters);
    if !first.converged {
        return first;
    }
    let budget = opts.max_iters.saturating_sub(first.iterations).max(1);
    let restart_step: Vec<f64> = step.iter().map(|s| s * 0.1).collect();
    let second = run_simplex(&f, &first.point, &restart_step, opts, budget);
    let iterations = first.iterations + second.iterations;
    if second.value < first.value {
        Minimum { iterations, ..second }
    } else {
        Minimum { iterations, ..first }
    }
}

fn run_simplex<F>(f: &F, x0: &[f64], step: &[f64], opts: SimplexOptions, max_iters: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step[i];
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = worst - best;
        let scale = best.abs().max(worst.abs()).max(f64::MIN_POSITIVE);
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if spread <= opts.tol_value * scale && diameter <= opts.tol_param {
            converged = true;
            break;
        }
        // Collapsed to rounding level: the objective's own noise exceeds
        // tol_value and no further progress is possible.
        let magnitude = simplex[0].0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if diameter <= 8.0 * f64::EPSILON * magnitude {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let toward = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let xr = toward(REFLECT);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = toward(REFLECT * EXPAND);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = toward(REFLECT * CONTRACT);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = toward(-CONTRACT);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, ai) in x.iter_mut().zip(&anchor) {
                *xi = ai + SHRINK * (*xi - ai);
            }
            *v = eval(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let spread = simplex[n].1 - simplex[0].1;
    let (point, value) = simplex.swap_remove(0);
    Minimum {
        point,
        value,
        iterations,
        converged,
        spread,
    }
}

/// Golden-section minimisation on `[lo, hi]` after a coarse scan picks the
/// bracket, which keeps it usable on mildly multimodal 1-D objectives.
pub fn scan_then_golden<F>(f: F, lo: f64, hi: f64, scan_points: usize, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let scan_points = scan_points.max(3);
    let h = (hi - lo) / (scan_points - 1) as f64;
    let (best_idx, _) = (0..scan_points)
        .map(|i| (i, f(lo + h * i as f64)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let mut a = lo + h * best_idx.saturating_sub(1) as f64;
    let mut b = (lo + h * (best_idx + 1) as f64).min(hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SimplexOptions {
        SimplexOptions {
            tol_value: 1e-14,
            tol_param: 1e-9,
            max_iters: 20_000,
        }
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &[0.5, 0.5], opts());
        assert!(m.converged);
        assert!((m.point[0] - 1.0).abs() < 1e-6);
        assert!((m.point[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quadratic_in_four_dimensions() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * (v - 0.5).powi(2)).sum::<f64>();
        let m = nelder_mead(f, &[0.0; 4], &[1.0; 4], opts());
        assert!(m.converged);
        assert!(m.point.iter().all(|v| (v - 0.5).abs() < 1e-6));
    }

    #[test]
    fn iteration_budget_is_reported() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(
            f,
            &[-1.2, 1.0],
            &[0.5, 0.5],
            SimplexOptions {
                max_iters: 5,
                ..opts()
            },
        );
        assert!(!m.converged);
        assert_eq!(m.iterations, 5);
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, v) = scan_then_golden(|x| (x - 0.3).powi(2) + 2.0, -5.0, 5.0, 21, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-14);
    }
}

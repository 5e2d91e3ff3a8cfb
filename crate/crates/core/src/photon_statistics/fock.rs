//! Truncated Fock-basis oracle for single-mode click statistics.
//!
//! The state `D(α) S(r) |0⟩` is built by exponentiating truncated ladder
//! operators, loss and splitting are applied photon by photon as binomial
//! trials, and click outcomes are summed exactly. Nothing here touches the
//! covariance formalism, so it serves as an independent check of
//! [`super::gaussian`].

use nalgebra::Complex;

use super::{ClickProbabilities, DetectionConfig, GaussianStateParams};
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Largest truncation deficit the oracle accepts.
pub const MAX_NORM_DEFICIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockOracleResult {
    pub probs: ClickProbabilities,
    /// Probability weight lost above the cutoff; bounds the absolute error of
    /// both probabilities.
    pub norm_deficit: f64,
}

/// `a|v⟩` on the truncated space.
fn annihilate(v: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for n in 1..v.len() {
        out[n - 1] = v[n] * (n as f64).sqrt();
    }
    out
}

/// `a†|v⟩` on the truncated space (the top level is dropped).
fn create(v: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for n in 0..v.len().saturating_sub(1) {
        out[n + 1] = v[n] * ((n + 1) as f64).sqrt();
    }
    out
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(G)|v⟩` by scaling and Taylor summation; `bound` must dominate the
/// operator norm of `G` on the truncated space.
fn expm_apply(generator: impl Fn(&[C64]) -> Vec<C64>, bound: f64, v: Vec<C64>) -> Vec<C64> {
    let steps = bound.ceil().max(1.0) as usize;
    let inv = 1.0 / steps as f64;
    let mut state = v;
    for _ in 0..steps {
        let mut term = state.clone();
        let mut acc = state.clone();
        for k in 1..200 {
            term = generator(&term);
            let scale = inv / k as f64;
            term.iter_mut().for_each(|c| *c *= scale);
            acc.iter_mut().zip(&term).for_each(|(a, t)| *a += t);
            if norm(&term) < 1e-18 * norm(&acc) {
                break;
            }
        }
        state = acc;
    }
    state
}

/// Photon-number distribution of `D(α)S(r)|0⟩` truncated below `cutoff`,
/// together with the norm deficit of the truncation.
pub fn fock_photon_distribution(state: &GaussianStateParams, cutoff: usize) -> Result<(Vec<f64>, f64)> {
    if cutoff == 0 {
        return Err(Error::Invalid("cutoff must be at least 1".into()));
    }
    let pad = (cutoff / 2).max(24);
    let dim = cutoff + pad;
    let mut v = vec![C64::new(0.0, 0.0); dim];
    v[0] = C64::new(1.0, 0.0);

    let r = state.squeezing;
    if r > 0.0 {
        // S(r) = exp(½ r (a² − a†²)) squeezes x for r > 0.
        let squeeze = |u: &[C64]| {
            let lowered = annihilate(&annihilate(u));
            let raised = create(&create(u));
            lowered
                .iter()
                .zip(&raised)
                .map(|(l, h)| (l - h) * (0.5 * r))
                .collect::<Vec<_>>()
        };
        v = expm_apply(squeeze, r * dim as f64, v);
    }

    let d = state.displacement_amplitude;
    if d > 0.0 {
        let alpha = C64::from_polar(d, state.relative_angle);
        let displace = |u: &[C64]| {
            let raised = create(u);
            let lowered = annihilate(u);
            raised
                .iter()
                .zip(&lowered)
                .map(|(h, l)| h * alpha - l * alpha.conj())
                .collect::<Vec<_>>()
        };
        v = expm_apply(displace, 2.0 * d * (dim as f64).sqrt(), v);
    }

    let probs: Vec<f64> = v[..cutoff].iter().map(|c| c.norm_sqr()).collect();
    let kept: f64 = probs.iter().sum();
    Ok((probs, (1.0 - kept).max(0.0)))
}

/// Binomial pmf `P(k; n, p)` for `k = 0..=n`, built by repeated convolution
/// with `(1−p) + p·z`.
fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for _ in 0..n {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &w) in pmf.iter().enumerate() {
            next[k] += w * (1.0 - p);
            next[k + 1] += w * p;
        }
        pmf = next;
    }
    pmf
}

/// Click statistics of an arbitrary photon-number distribution `p(n)`.
///
/// Every photon survives the channel with probability `η`; each survivor is
/// routed to D1 with probability `t`. Dark counts fire independently.
pub fn fock_click_probs(distribution: &[f64], cfg: &DetectionConfig) -> Result<ClickProbabilities> {
    cfg.validate()?;
    let live = 1.0 - cfg.dark_count_prob;
    let mut p1 = 0.0;
    let mut p2 = 0.0;
    for (n, &pn) in distribution.iter().enumerate() {
        if pn == 0.0 {
            continue;
        }
        for (k, &pk) in binomial_pmf(n, cfg.eta).iter().enumerate() {
            for (j, &pj) in binomial_pmf(k, cfg.t_bs).iter().enumerate() {
                let w = pn * pk * pj;
                let click1 = if j > 0 { 1.0 } else { 1.0 - live };
                let click2 = if k - j > 0 { 1.0 } else { 1.0 - live };
                p1 += w * click1;
                p2 += w * click1 * click2;
            }
        }
    }
    Ok(ClickProbabilities {
        p_success: p1,
        p_error: p2,
    })
}

/// Oracle click probabilities for a Gaussian state on a truncated Fock space.
pub fn fock_oracle_click_probs(
    state: &GaussianStateParams,
    cfg: &DetectionConfig,
    cutoff: usize,
) -> Result<FockOracleResult> {
    let (dist, deficit) = fock_photon_distribution(state, cutoff)?;
    if deficit > MAX_NORM_DEFICIT {
        return Err(Error::Precision {
            deficit,
            cutoff,
            suggested_cutoff: suggest_cutoff(state, cutoff),
        });
    }
    Ok(FockOracleResult {
        probs: fock_click_probs(&dist, cfg)?,
        norm_deficit: deficit,
    })
}

fn suggest_cutoff(state: &GaussianStateParams, cutoff: usize) -> usize {
    // mean plus a generous multiple of the photon-number spread
    let n = state.mean_photon_number();
    let spread = (n * (n + 1.0)).sqrt() + state.squeezing.sinh() * state.squeezing.cosh();
    ((n + 12.0 * spread + 20.0).ceil() as usize).max(2 * cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(eta: f64, t: f64) -> DetectionConfig {
        DetectionConfig::new(eta, t).unwrap()
    }

    #[test]
    fn vacuum_never_clicks() {
        for cutoff in [1, 5, 40] {
            let r = fock_oracle_click_probs(&GaussianStateParams::vacuum(), &cfg(0.7, 0.5), cutoff).unwrap();
            assert_eq!(r.probs.p_success, 0.0);
            assert_eq!(r.probs.p_error, 0.0);
        }
    }

    #[test]
    fn single_photon_cannot_coincide() {
        let p = fock_click_probs(&[0.0, 1.0], &cfg(0.5, 0.5)).unwrap();
        assert!((p.p_success - 0.25).abs() < 1e-15);
        assert_eq!(p.p_error, 0.0);
    }

    #[test]
    fn two_photons_split() {
        // |2⟩ with η = 1, t = ½: both detectors fire with probability ½.
        let p = fock_click_probs(&[0.0, 0.0, 1.0], &cfg(1.0, 0.5)).unwrap();
        assert!((p.p_error - 0.5).abs() < 1e-15);
        assert!((p.p_success - 0.75).abs() < 1e-15);
    }

    #[test]
    fn coherent_distribution_is_poissonian() {
        let d = 1.3;
        let (dist, deficit) = fock_photon_distribution(&GaussianStateParams::coherent(d).unwrap(), 40).unwrap();
        assert!(deficit < 1e-12);
        let mean = d * d;
        let mut poisson = (-mean).exp();
        for (n, &p) in dist.iter().enumerate().take(20) {
            assert!((p - poisson).abs() < 1e-13, "n = {n}");
            poisson *= mean / (n + 1) as f64;
        }
    }

    #[test]
    fn squeezed_vacuum_has_even_photon_numbers() {
        let r: f64 = 0.5;
        let (dist, _) = fock_photon_distribution(&GaussianStateParams::new(0.0, r, 0.0).unwrap(), 60).unwrap();
        let t = r.tanh();
        // p(2m) = (2m)!/(2^m m!)² · tanh^{2m} r / cosh r
        let mut expected = 1.0 / r.cosh();
        for m in 0..10 {
            assert!((dist[2 * m] - expected).abs() < 1e-13, "m = {m}");
            assert!(dist[2 * m + 1].abs() < 1e-14);
            let (a, b) = ((2 * m + 1) as f64, (2 * m + 2) as f64);
            expected *= a * b / (4.0 * ((m + 1) as f64).powi(2)) * t * t;
        }
    }

    #[test]
    fn insufficient_cutoff_is_reported() {
        let s = GaussianStateParams::new(2.0, 1.0, 0.3).unwrap();
        match fock_oracle_click_probs(&s, &cfg(0.5, 0.5), 8) {
            Err(Error::Precision {
                suggested_cutoff, cutoff, ..
            }) => {
                assert_eq!(cutoff, 8);
                assert!(suggested_cutoff > 8);
                assert!(fock_oracle_click_probs(&s, &cfg(0.5, 0.5), suggested_cutoff).is_ok());
            }
            other => panic!("expected precision error, got {other:?}"),
        }
    }
}

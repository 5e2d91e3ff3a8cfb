//! Pair-correlated sources: each mode pair `i` carries `n` photons in both
//! arms with probability `(1 − μ_i) μ_iⁿ`.
//!
//! For a detector that sees each photon of an arm with probability `κ` the
//! no-click probability of one mode is the geometric sum
//! `Q(1 − κ) = (1 − μ)/(1 − μ(1 − κ))`. The joint terms needed for
//! inclusion–exclusion reduce to
//!
//! * cross-arm, success detectors `κ_a, κ_b`:
//!   `ln[Q_ab / (Q_a Q_b)] = ln(1 + μ κ_a κ_b / ((1−μ)(1 − μ(1−κ_a)(1−κ_b))))`
//! * same arm, splitter `t`:
//!   `ln[Q_12 / (Q_1 Q_2)] = ln(1 + μ² η² t(1−t) / ((1−μ)(1 − μ(1−η))))`
//!
//! which are free of cancellation for small `μ`.

use super::{coincidence_from_logs, ClickProbabilities, DetectionConfig, ModeEnsemble};
use crate::error::{check_range, Result};

/// `ln Q` for one detector seeing each photon of a mode with probability `κ`.
fn ln_no_click(mu: f64, kappa: f64) -> f64 {
    -(mu * kappa / (1.0 - mu)).ln_1p()
}

fn cross_correlation(mu: f64, ka: f64, kb: f64) -> f64 {
    (mu * ka * kb / ((1.0 - mu) * (1.0 - mu * (1.0 - ka) * (1.0 - kb)))).ln_1p()
}

fn same_arm_correlation(mu: f64, eta: f64, t: f64) -> f64 {
    (mu * mu * eta * eta * t * (1.0 - t) / ((1.0 - mu) * (1.0 - mu * (1.0 - eta)))).ln_1p()
}

/// Success (cross-arm D_a1·D_b1) and error (same-arm, averaged over both arms)
/// coincidence probabilities of a multimode pair source.
pub fn multimode_pair_click_probs(ensemble: &ModeEnsemble, cfg: &DetectionConfig) -> Result<ClickProbabilities> {
    cfg.validate()?;
    let eta = cfg.eta;
    let (ta, tb) = (cfg.t_bs, cfg.arm_b_transmission());
    let dark = (-cfg.dark_count_prob).ln_1p();

    let mut ln_a1 = dark;
    let mut ln_a2 = dark;
    let mut ln_b1 = dark;
    let mut ln_b2 = dark;
    let mut cross = 0.0;
    let mut same_a = 0.0;
    let mut same_b = 0.0;
    for &mu in ensemble.occupancies() {
        if mu == 0.0 {
            continue;
        }
        ln_a1 += ln_no_click(mu, eta * ta);
        ln_a2 += ln_no_click(mu, eta * (1.0 - ta));
        ln_b1 += ln_no_click(mu, eta * tb);
        ln_b2 += ln_no_click(mu, eta * (1.0 - tb));
        cross += cross_correlation(mu, eta * ta, eta * tb);
        same_a += same_arm_correlation(mu, eta, ta);
        same_b += same_arm_correlation(mu, eta, tb);
    }
    let p_success = coincidence_from_logs(ln_a1, ln_b1, cross);
    let p_error = 0.5 * (coincidence_from_logs(ln_a1, ln_a2, same_a) + coincidence_from_logs(ln_b1, ln_b2, same_b));
    Ok(ClickProbabilities { p_success, p_error })
}

/// Single two-mode squeezed vacuum with pair parameter `mu`.
pub fn tmsv_pair_click_probs(mu: f64, cfg: &DetectionConfig) -> Result<ClickProbabilities> {
    check_range("mu", mu, 0.0, 1.0, true, false, "in [0, 1)")?;
    multimode_pair_click_probs(&ModeEnsemble::new(vec![mu])?, cfg)
}

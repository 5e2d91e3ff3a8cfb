use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{run_blocks, summary, SimOutput, SimRun, Tally};
use crate::counts_analyzer::Experiment;
use crate::error::{check_range, Error, Result};
use crate::photon_statistics::DetectionConfig;

/// Quantum-dot biexciton–exciton cascade. The biexciton (XX) photon goes to
/// arm a, the exciton (X) photon to arm b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QdSourceConfig {
    pub rep_rate_hz: f64,
    /// Probability that a pulse in the bright state emits a cascade.
    pub emission_prob: f64,
    pub blinking_on_fraction: f64,
    /// Telegraph correlation time in pulse periods.
    pub blinking_correlation_pulses: f64,
    /// Probability of a second cascade in a pulse that emitted one.
    pub g2_contamination: f64,
    pub xx_lifetime_ps: f64,
    pub x_lifetime_ps: f64,
    /// Detection gate opened at the excitation pulse.
    pub coincidence_window_ps: f64,
}

impl Default for QdSourceConfig {
    fn default() -> Self {
        Self {
            rep_rate_hz: 80e6,
            emission_prob: 0.5,
            blinking_on_fraction: 0.566,
            blinking_correlation_pulses: 8.0,
            g2_contamination: contamination_for_g2(0.0154, 0.5),
            xx_lifetime_ps: 249.8,
            x_lifetime_ps: 397.2,
            coincidence_window_ps: 1408.0,
        }
    }
}

/// Second-cascade probability giving `g²(0) = 2c/e` at emission probability `e`.
pub fn contamination_for_g2(g2: f64, emission_prob: f64) -> f64 {
    0.5 * g2 * emission_prob
}

impl QdSourceConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("rep_rate_hz", self.rep_rate_hz, 0.0, f64::INFINITY, false, false, "> 0")?;
        check_range("emission_prob", self.emission_prob, 0.0, 1.0, true, true, "in [0, 1]")?;
        check_range("blinking_on_fraction", self.blinking_on_fraction, 0.0, 1.0, false, true, "in (0, 1]")?;
        check_range(
            "blinking_correlation_pulses",
            self.blinking_correlation_pulses,
            0.0,
            f64::INFINITY,
            false,
            false,
            "> 0",
        )?;
        check_range("g2_contamination", self.g2_contamination, 0.0, 1.0, true, true, "in [0, 1]")?;
        for (name, v) in [
            ("xx_lifetime_ps", self.xx_lifetime_ps),
            ("x_lifetime_ps", self.x_lifetime_ps),
            ("coincidence_window_ps", self.coincidence_window_ps),
        ] {
            check_range(name, v, 0.0, f64::INFINITY, false, false, "> 0")?;
        }
        Ok(())
    }

    /// Cascades per second, the analyzer's `C₀`.
    pub fn generation_rate_hz(&self) -> f64 {
        self.rep_rate_hz * self.blinking_on_fraction * self.emission_prob
    }

    /// Per-pulse switching probabilities `(on→off, off→on)` of the telegraph
    /// process with the configured stationary fraction and correlation time.
    fn switching(&self) -> (f64, f64) {
        let total = -(-1.0 / self.blinking_correlation_pulses).exp_m1();
        let p = self.blinking_on_fraction;
        ((1.0 - p) * total, p * total)
    }
}

fn route<R: Rng>(rng: &mut R, eta: f64, t: f64, time: f64, window: f64, first: u8, clicks: &mut [Option<f64>; 4]) {
    if time >= window || !rng.random_bool(eta) {
        return;
    }
    let d = if rng.random_bool(t) { first } else { first + 1 } as usize;
    clicks[d] = Some(clicks[d].map_or(time, |c: f64| c.min(time)));
}

pub fn simulate_qd_pairs(src: &QdSourceConfig, det: &DetectionConfig, run: &SimRun) -> Result<SimOutput> {
    src.validate()?;
    det.validate()?;
    run.validate()?;
    let xx = Exp::new(1.0 / src.xx_lifetime_ps).map_err(|e| Error::Invalid(e.to_string()))?;
    let x = Exp::new(1.0 / src.x_lifetime_ps).map_err(|e| Error::Invalid(e.to_string()))?;
    let (to_off, to_on) = src.switching();
    let window = src.coincidence_window_ps;
    let (ta, tb) = (det.t_bs, det.arm_b_transmission());

    let tally = run_blocks(run, |rng, start, len| {
        let mut tally = Tally::default();
        let mut on = rng.random_bool(src.blinking_on_fraction);
        for pulse in start..start + len {
            on = if on { !rng.random_bool(to_off) } else { rng.random_bool(to_on) };
            let mut clicks = [None; 4];
            if on && rng.random_bool(src.emission_prob) {
                let cascades = 1 + usize::from(rng.random_bool(src.g2_contamination));
                for _ in 0..cascades {
                    let t_xx = xx.sample(rng);
                    let t_x = t_xx + x.sample(rng);
                    route(rng, det.eta, ta, t_xx, window, 0, &mut clicks);
                    route(rng, det.eta, tb, t_x, window, 2, &mut clicks);
                }
            }
            if det.dark_count_prob > 0.0 {
                for c in clicks.iter_mut() {
                    if rng.random_bool(det.dark_count_prob) {
                        let t = rng.random::<f64>() * window;
                        *c = Some(c.map_or(t, |v| v.min(t)));
                    }
                }
            }
            tally.record(pulse, clicks, run.record_tags);
        }
        tally
    });

    let duration = run.n_pulses as f64 / src.rep_rate_hz;
    // Without emission the pulse rate keeps the summary valid.
    let c0 = Some(src.generation_rate_hz()).filter(|&c| c > 0.0).unwrap_or(src.rep_rate_hz);
    Ok(SimOutput {
        counts: summary(&tally, Experiment::PhotonPairs, duration, c0),
        tags: run.record_tags.then_some(tally.tags),
    })
}

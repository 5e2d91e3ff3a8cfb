use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::{run_blocks, summary, SimOutput, SimRun, Tally};
use crate::counts_analyzer::Experiment;
use crate::error::Result;
use crate::photon_statistics::{DetectionConfig, ModeEnsemble};

/// Geometric pair number with `P(n) = (1 − μ) μⁿ`.
fn pair_number<R: Rng>(rng: &mut R, mu: f64) -> u64 {
    let u: f64 = rng.random();
    ((1.0 - u).ln() / mu.ln()).floor() as u64
}

fn binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 {
        return 0;
    }
    Binomial::new(n, p).expect("probability validated").sample(rng)
}

/// Independent pair modes sharing one pulse; each arm sees every photon with
/// probability `η` and routes it to detector 1 with probability `t`.
pub fn simulate_multimode_tmsv(ensemble: &ModeEnsemble, det: &DetectionConfig, run: &SimRun) -> Result<SimOutput> {
    det.validate()?;
    run.validate()?;
    let mus: Vec<f64> = ensemble.occupancies().iter().copied().filter(|&m| m > 0.0).collect();
    let (ta, tb) = (det.t_bs, det.arm_b_transmission());

    let tally = run_blocks(run, |rng, start, len| {
        let mut tally = Tally::default();
        for pulse in start..start + len {
            let mut photons = [0u64; 4];
            for &mu in &mus {
                let n = pair_number(rng, mu);
                if n == 0 {
                    continue;
                }
                for (arm, t) in [(0, ta), (2, tb)] {
                    let survived = binomial(rng, n, det.eta);
                    let first = binomial(rng, survived, t);
                    photons[arm] += first;
                    photons[arm + 1] += survived - first;
                }
            }
            let mut clicks = photons.map(|p| (p > 0).then_some(0.0));
            if det.dark_count_prob > 0.0 {
                for c in clicks.iter_mut() {
                    if rng.random_bool(det.dark_count_prob) {
                        *c = Some(0.0);
                    }
                }
            }
            tally.record(pulse, clicks, run.record_tags);
        }
        tally
    });
    let duration = run.n_pulses as f64 / run.rep_rate_hz;
    Ok(SimOutput {
        counts: summary(&tally, Experiment::PhotonPairs, duration, run.rep_rate_hz),
        tags: run.record_tags.then_some(tally.tags),
    })
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{run_blocks, summary, SimOutput, SimRun, Tally};
use crate::counts_analyzer::Experiment;
use crate::error::{check_range, Result};
use crate::photon_statistics::DetectionConfig;

/// Triggered single-photon emitter with occasional two-photon pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinglePhotonSource {
    #[serde(default = "one")]
    pub emission_prob: f64,
    /// Probability of a second photon in a pulse that emitted one.
    #[serde(default)]
    pub contamination: f64,
}

fn one() -> f64 {
    1.0
}

impl SinglePhotonSource {
    pub fn new(emission_prob: f64, contamination: f64) -> Result<Self> {
        let s = Self {
            emission_prob,
            contamination,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("emission_prob", self.emission_prob, 0.0, 1.0, true, true, "in [0, 1]")?;
        check_range("contamination", self.contamination, 0.0, 1.0, true, true, "in [0, 1]")
    }
}

/// One beamsplitter (`t` toward D1) after loss `η`. The summary reports
/// clicks on D1 as success and D1·D2 coincidences as errors, per pulse.
pub fn simulate_single_photon_stream(src: &SinglePhotonSource, det: &DetectionConfig, run: &SimRun) -> Result<SimOutput> {
    src.validate()?;
    det.validate()?;
    run.validate()?;
    let tally = run_blocks(run, |rng, start, len| {
        let mut tally = Tally::default();
        for pulse in start..start + len {
            let mut clicks = [None; 4];
            if rng.random_bool(src.emission_prob) {
                let photons = 1 + usize::from(rng.random_bool(src.contamination));
                for _ in 0..photons {
                    if rng.random_bool(det.eta) {
                        let d = if rng.random_bool(det.t_bs) { 0 } else { 1 };
                        clicks[d] = Some(0.0);
                    }
                }
            }
            if det.dark_count_prob > 0.0 {
                for c in clicks.iter_mut().take(2) {
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
        counts: summary(&tally, Experiment::SinglePhoton, duration, run.rep_rate_hz),
        tags: run.record_tags.then_some(tally.tags),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_single_photons() {
        let n = 400_000u64;
        let src = SinglePhotonSource::new(1.0, 0.0).unwrap();
        let out = simulate_single_photon_stream(&src, &DetectionConfig::new(0.5, 0.5).unwrap(), &SimRun::new(n, 8)).unwrap();
        assert_eq!(out.counts.c_e_a, 0.0);
        let p = out.counts.singles.as_ref().unwrap()[0] / n as f64;
        assert!((p - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / n as f64).sqrt());
    }

    #[test]
    fn seeded_repeatability() {
        let src = SinglePhotonSource::new(0.9, 0.05).unwrap();
        let det = DetectionConfig::new(0.7, 0.5).unwrap();
        let a = simulate_single_photon_stream(&src, &det, &SimRun::new(100_000, 5)).unwrap();
        let b = simulate_single_photon_stream(&src, &det, &SimRun::new(100_000, 5)).unwrap();
        assert_eq!(a, b);
    }
}

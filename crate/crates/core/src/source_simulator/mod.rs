//! Seeded Monte Carlo sources feeding the click-detection tree.
//!
//! Pulses are processed in fixed-size blocks; block `k` draws from its own
//! ChaCha stream `k` of the run seed, so results do not depend on how many
//! threads rayon uses.

mod qd;
mod single;
mod tags;
mod tmsv;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

pub use qd::{contamination_for_g2, simulate_qd_pairs, QdSourceConfig};
pub use single::{simulate_single_photon_stream, SinglePhotonSource};
pub use tags::{peak_areas_from_tags, read_tags, write_tags, Tag, TAGS_SCHEMA};
pub use tmsv::simulate_multimode_tmsv;

use crate::counts_analyzer::{CountSummary, Experiment};

/// Detector indices used in tallies and tag streams.
pub const D_A1: u8 = 0;
pub const D_A2: u8 = 1;
pub const D_B1: u8 = 2;
pub const D_B2: u8 = 3;

fn default_block() -> u64 {
    1 << 16
}

fn default_rep_rate() -> f64 {
    80e6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimRun {
    pub n_pulses: u64,
    pub seed: u64,
    #[serde(default = "default_block")]
    pub block_pulses: u64,
    /// Pulse rate for sources without their own (TMSV, single photons).
    #[serde(default = "default_rep_rate")]
    pub rep_rate_hz: f64,
    #[serde(default)]
    pub record_tags: bool,
}

impl SimRun {
    pub fn new(n_pulses: u64, seed: u64) -> Self {
        Self {
            n_pulses,
            seed,
            block_pulses: default_block(),
            rep_rate_hz: default_rep_rate(),
            record_tags: false,
        }
    }

    pub fn with_tags(mut self) -> Self {
        self.record_tags = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pulses == 0 {
            return Err(Error::Invalid("n_pulses must be > 0".into()));
        }
        if self.block_pulses == 0 {
            return Err(Error::Invalid("block_pulses must be > 0".into()));
        }
        check_range("rep_rate_hz", self.rep_rate_hz, 0.0, f64::INFINITY, false, false, "> 0")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub counts: CountSummary,
    pub tags: Option<Vec<Tag>>,
}

/// Per-block click statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Tally {
    pub c_s: u64,
    pub c_e_a: u64,
    pub c_e_b: u64,
    pub singles: [u64; 4],
    pub tags: Vec<Tag>,
}

impl Tally {
    /// Records one pulse given the first click time per detector.
    pub fn record(&mut self, pulse: u64, clicks: [Option<f64>; 4], keep_tags: bool) {
        let on = clicks.map(|c| c.is_some());
        self.c_s += u64::from(on[0] && on[2]);
        self.c_e_a += u64::from(on[0] && on[1]);
        self.c_e_b += u64::from(on[2] && on[3]);
        for (s, o) in self.singles.iter_mut().zip(on) {
            *s += u64::from(o);
        }
        if keep_tags {
            for (d, c) in clicks.iter().enumerate() {
                if let Some(t) = c {
                    self.tags.push(Tag {
                        pulse_index: pulse,
                        detector: d as u8,
                        time_ps: *t,
                    });
                }
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.c_s += other.c_s;
        self.c_e_a += other.c_e_a;
        self.c_e_b += other.c_e_b;
        for (a, b) in self.singles.iter_mut().zip(other.singles) {
            *a += b;
        }
        self.tags.extend(other.tags);
        self
    }
}

/// Runs `body(rng, first_pulse, len)` for every block and merges the tallies
/// in block order.
pub(crate) fn run_blocks<F>(run: &SimRun, body: F) -> Tally
where
    F: Fn(&mut ChaCha8Rng, u64, u64) -> Tally + Sync,
{
    let n_blocks = run.n_pulses.div_ceil(run.block_pulses);
    let tallies: Vec<Tally> = (0..n_blocks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
            rng.set_stream(k);
            let start = k * run.block_pulses;
            let len = run.block_pulses.min(run.n_pulses - start);
            body(&mut rng, start, len)
        })
        .collect();
    tallies.into_iter().fold(Tally::default(), Tally::merge)
}

pub(crate) fn summary(tally: &Tally, experiment: Experiment, duration_s: f64, c0_rate_hz: f64) -> CountSummary {
    let mut c = match experiment {
        Experiment::PhotonPairs => CountSummary::pairs(
            tally.c_s as f64,
            tally.c_e_a as f64,
            tally.c_e_b as f64,
            duration_s,
            c0_rate_hz,
        ),
        Experiment::SinglePhoton => {
            CountSummary::single_photon(tally.singles[0] as f64, tally.c_e_a as f64, duration_s, c0_rate_hz)
        }
    };
    c.singles = Some(match experiment {
        Experiment::PhotonPairs => tally.singles.iter().map(|&v| v as f64).collect(),
        Experiment::SinglePhoton => tally.singles[..2].iter().map(|&v| v as f64).collect(),
    });
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consistency {
    Pass,
    /// Between 3 and 4 standard errors.
    Flag,
    Fail,
}

/// Standard score of `count` successes in `trials` against probability `p`.
pub fn z_score(count: f64, trials: f64, p: f64) -> f64 {
    let sd = (trials * p * (1.0 - p)).sqrt();
    let diff = count - trials * p;
    if sd == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / sd
    }
}

pub fn classify(z: f64) -> Consistency {
    let z = z.abs();
    if z <= 3.0 {
        Consistency::Pass
    } else if z <= 4.0 {
        Consistency::Flag
    } else {
        Consistency::Fail
    }
}

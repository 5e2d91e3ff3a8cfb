use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{estimate_probabilities, CountSummary, ProbabilityEstimate};
use crate::error::{check_range, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Undersampling {
    /// Expected counts: singles × (1−a), coincidences × (1−a)².
    Deterministic,
    /// Binomial thinning with the same survival probabilities.
    Stochastic { seed: u64 },
}

fn thin(count: f64, keep: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let n = count.round();
    if (count - n).abs() > 1e-9 * count.max(1.0) {
        return Err(Error::Invalid(format!(
            "stochastic undersampling needs integer counts, got {count}"
        )));
    }
    let dist = Binomial::new(n as u64, keep).map_err(|e| Error::Computation(e.to_string()))?;
    Ok(dist.sample(rng) as f64)
}

/// Emulates an extra loss `a` on every detected photon.
pub fn undersample(counts: &CountSummary, attenuation: f64, mode: Undersampling) -> Result<CountSummary> {
    counts.validate()?;
    check_range("attenuation", attenuation, 0.0, 1.0, true, false, "in [0, 1)")?;
    let keep = 1.0 - attenuation;
    let mut out = counts.clone();
    match mode {
        Undersampling::Deterministic => {
            let k2 = keep * keep;
            out.c_s *= k2;
            out.c_e_a *= k2;
            out.c_e_b *= k2;
            if let Some(s) = out.singles.as_mut() {
                s.iter_mut().for_each(|v| *v *= keep);
            }
        }
        Undersampling::Stochastic { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k2 = keep * keep;
            out.c_s = thin(counts.c_s, k2, &mut rng)?;
            out.c_e_a = thin(counts.c_e_a, k2, &mut rng)?;
            out.c_e_b = thin(counts.c_e_b, k2, &mut rng)?;
            if let Some(s) = out.singles.as_mut() {
                for v in s.iter_mut() {
                    *v = thin(*v, keep, &mut rng)?;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub p_e: ProbabilityEstimate,
    pub p_s: ProbabilityEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttenuationScan {
    pub attenuations: Vec<f64>,
    pub points: Vec<ScanPoint>,
}

impl AttenuationScan {
    pub fn validate(&self) -> Result<()> {
        if self.attenuations.len() != self.points.len() {
            return Err(Error::Invalid("scan attenuations and points differ in length".into()));
        }
        if self.attenuations.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("scan attenuations must be strictly ascending".into()));
        }
        if self.attenuations.iter().any(|a| !(0.0..1.0).contains(a)) {
            return Err(Error::Invalid("scan attenuations must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// CSV columns: attenuation, p_e, sigma_pe, p_s, sigma_ps.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["attenuation", "p_e", "sigma_pe", "p_s", "sigma_ps"])?;
        for (a, p) in self.attenuations.iter().zip(&self.points) {
            w.write_record([a, &p.p_e.value, &p.p_e.sigma, &p.p_s.value, &p.p_s.sigma].map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Deterministic undersampling over `a = 0, step, 2·step, …, a_max`.
pub fn attenuation_scan(counts: &CountSummary, a_max: f64, step: f64) -> Result<AttenuationScan> {
    check_range("a_max", a_max, 0.0, 1.0, false, false, "in (0, 1)")?;
    check_range("step", step, 0.0, a_max, false, true, "in (0, a_max]")?;
    let n = (a_max / step + 1e-9).floor() as usize;
    let attenuations: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    let points = attenuations
        .par_iter()
        .map(|&a| {
            let c = undersample(counts, a, Undersampling::Deterministic)?;
            let (p_s, p_e) = estimate_probabilities(&c)?;
            Ok(ScanPoint { p_e, p_s })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AttenuationScan { attenuations, points })
}

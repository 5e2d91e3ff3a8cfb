use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::counts_analyzer::PeakArea;
use crate::error::{Error, Result};

pub const TAGS_SCHEMA: &str = "lossqng.tags/1";

/// One detector click: `pulse_index detector_id time_ps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tag {
    pub pulse_index: u64,
    pub detector: u8,
    pub time_ps: f64,
}

pub fn write_tags<W: Write>(tags: &[Tag], mut out: W) -> Result<()> {
    writeln!(out, "# {TAGS_SCHEMA}")?;
    writeln!(out, "# pulse_index detector_id time_ps")?;
    for t in tags {
        writeln!(out, "{} {} {}", t.pulse_index, t.detector, t.time_ps)?;
    }
    Ok(())
}

/// Reads a tag stream; `#` lines are comments.
pub fn read_tags<R: BufRead>(input: R) -> Result<Vec<Tag>> {
    let mut tags = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::Invalid(format!("tag line {}: {what}: {line:?}", i + 1));
        let mut f = line.split_whitespace();
        let (Some(p), Some(d), Some(t), None) = (f.next(), f.next(), f.next(), f.next()) else {
            return Err(bad("expected 3 fields"));
        };
        tags.push(Tag {
            pulse_index: p.parse().map_err(|_| bad("pulse_index"))?,
            detector: d.parse().map_err(|_| bad("detector_id"))?,
            time_ps: t.parse().map_err(|_| bad("time_ps"))?,
        });
    }
    Ok(tags)
}

/// Start–stop correlation between two detectors by pulse offset: the area of
/// peak `k` counts click pairs with the stop `k` pulses after the start.
pub fn peak_areas_from_tags(tags: &[Tag], start: u8, stop: u8, max_delay: i64) -> Vec<PeakArea> {
    let pulses = |d: u8| {
        let mut v: Vec<u64> = tags.iter().filter(|t| t.detector == d).map(|t| t.pulse_index).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let (a, b) = (pulses(start), pulses(stop));
    (-max_delay..=max_delay)
        .map(|k| {
            let area = a
                .iter()
                .filter(|&&p| {
                    let q = p as i64 + k;
                    q >= 0 && b.binary_search(&(q as u64)).is_ok()
                })
                .count();
            PeakArea {
                delay_index: k,
                area: area as f64,
            }
        })
        .collect()
}

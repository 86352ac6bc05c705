//! Band-energy projection of a scalogram and region calling.
//!
//! The default band brackets a 6.5 bp period with one bp of slack on either
//! side: periods 5.5..7.5 bp, i.e. frequencies 1/7.5..1/5.5 cycles/bp.

use std::fmt;
use std::io::Write;

use thiserror::Error;

use crate::cwt_engine::Scalogram;
use crate::sequence_io::{Annotation, AnnotationTrack, RegionLabel, SequenceError};

pub const DEFAULT_BAND: (f64, f64) = (1.0 / 7.5, 1.0 / 5.5);
pub const DEFAULT_MIN_LEN: usize = 40;
pub const DEFAULT_SMOOTHING: usize = 25;
const HISTOGRAM_BINS: usize = 256;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("no scale of the grid falls in the band [{f_lo}, {f_hi}] cycles/bp")]
    EmptyBand { f_lo: f64, f_hi: f64 },
    #[error("invalid band [{f_lo}, {f_hi}]: need 0 < f_lo < f_hi")]
    InvalidBand { f_lo: f64, f_hi: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("label `{0}` does not occur in the truth track")]
    LabelNotFound(String),
}

/// Per-position mean modulus over the scales of one frequency band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandEnergyProfile {
    pub values: Vec<f64>,
    pub band: (f64, f64),
    pub start_coordinate: u64,
    pub seq_id: String,
}

impl BandEnergyProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coordinate(&self, i: usize) -> u64 {
        self.start_coordinate + i as u64
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values.iter().sum::<f64>() / self.values.len() as f64
        }
    }
}

/// Projects the modulus rows whose frequency lies in `[f_lo, f_hi]` onto
/// the position axis. Cells inside the cone of influence are left out; at
/// positions where every band cell is inside it, all band cells are used.
pub fn band_energy(s: &Scalogram, f_lo: f64, f_hi: f64) -> Result<BandEnergyProfile, ScanError> {
    if !(f_lo > 0.0 && f_hi > f_lo && f_hi.is_finite()) {
        return Err(ScanError::InvalidBand { f_lo, f_hi });
    }
    let rows: Vec<usize> = s
        .frequencies()
        .iter()
        .enumerate()
        .filter(|(_, &f)| f >= f_lo && f <= f_hi)
        .map(|(i, _)| i)
        .collect();
    if rows.is_empty() {
        return Err(ScanError::EmptyBand { f_lo, f_hi });
    }
    let values = (0..s.width())
        .map(|b| {
            let (mut sum, mut n) = (0.0, 0usize);
            for &i in &rows {
                if !s.in_cone_of_influence(i, b) {
                    sum += s.modulus_row(i)[b];
                    n += 1;
                }
            }
            if n == 0 {
                rows.iter().map(|&i| s.modulus_row(i)[b]).sum::<f64>() / rows.len() as f64
            } else {
                sum / n as f64
            }
        })
        .collect();
    Ok(BandEnergyProfile {
        values,
        band: (f_lo, f_hi),
        start_coordinate: s.start_coordinate,
        seq_id: s.source_id.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Auto,
    Fixed(f64),
}

impl std::str::FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threshold::Auto);
        }
        s.parse::<f64>()
            .map(Threshold::Fixed)
            .map_err(|_| format!("threshold must be `auto` or a number, got `{s}`"))
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Auto => f.write_str("auto"),
            Threshold::Fixed(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalledInterval {
    pub start: u64,
    pub end: u64,
    pub mean_energy: f64,
}

impl CalledInterval {
    pub fn len(&self) -> u64 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionCall {
    pub seq_id: String,
    pub intervals: Vec<CalledInterval>,
    pub threshold_used: f64,
    pub min_len: usize,
    pub smoothing: usize,
}

impl RegionCall {
    pub fn to_track(&self, label: RegionLabel) -> Result<AnnotationTrack, SequenceError> {
        AnnotationTrack::from_entries(
            self.intervals
                .iter()
                .map(|iv| Annotation {
                    seq_id: self.seq_id.clone(),
                    start: iv.start,
                    end: iv.end,
                    label,
                })
                .collect(),
        )
    }

    /// Writes the calls in the 4-column annotation format.
    pub fn write_bed<W: Write>(&self, mut out: W, label: RegionLabel) -> std::io::Result<()> {
        for iv in &self.intervals {
            writeln!(out, "{}\t{}\t{}\t{}", self.seq_id, iv.start, iv.end, label)?;
        }
        Ok(())
    }
}

/// Centered moving average of width `width`; the window shrinks at the ends.
pub fn moving_average(values: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 || values.is_empty() {
        return values.to_vec();
    }
    let n = values.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    let back = width / 2;
    let fwd = width - 1 - back;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(back);
            let hi = (i + fwd).min(n - 1);
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect()
}

/// Two-class split of `values` minimizing intra-class variance on a
/// histogram; returns the midpoint between the two class means.
pub fn auto_threshold(values: &[f64]) -> f64 {
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if values.is_empty() {
        return 0.0;
    }
    let span = max - min;
    // rounding noise from smoothing a constant profile is not a second class
    if span <= 1e-9 * max.abs().max(min.abs()) {
        return max;
    }
    let mut counts = [0u64; HISTOGRAM_BINS];
    let mut sums = [0.0f64; HISTOGRAM_BINS];
    for &v in values {
        let bin = (((v - min) / span) * HISTOGRAM_BINS as f64) as usize;
        let bin = bin.min(HISTOGRAM_BINS - 1);
        counts[bin] += 1;
        sums[bin] += v;
    }
    let total_n = values.len() as f64;
    let total_sum: f64 = sums.iter().sum();
    let (mut n0, mut s0) = (0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, min, max);
    // maximizing between-class variance is the same as minimizing the
    // intra-class variance for a fixed total
    for b in 0..HISTOGRAM_BINS - 1 {
        n0 += counts[b] as f64;
        s0 += sums[b];
        let n1 = total_n - n0;
        if n0 == 0.0 || n1 == 0.0 {
            continue;
        }
        let m0 = s0 / n0;
        let m1 = (total_sum - s0) / n1;
        let between = n0 * n1 * (m0 - m1) * (m0 - m1);
        if between > best.0 {
            best = (between, m0, m1);
        }
    }
    0.5 * (best.1 + best.2)
}

/// Calls runs of the smoothed profile above the threshold.
///
/// Runs separated by fewer than `min_len / 2` positions are merged first,
/// then runs shorter than `min_len` are dropped.
pub fn call_regions(
    p: &BandEnergyProfile,
    threshold: Threshold,
    min_len: usize,
    smoothing: usize,
) -> Result<RegionCall, ScanError> {
    if min_len == 0 {
        return Err(ScanError::InvalidParameter("min_len must be >= 1".into()));
    }
    let smooth = moving_average(&p.values, smoothing);
    let threshold_used = match threshold {
        Threshold::Auto => auto_threshold(&smooth),
        Threshold::Fixed(t) => t,
    };

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &v) in smooth.iter().enumerate() {
        match (v > threshold_used, open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        runs.push((s, smooth.len() - 1));
    }

    let max_gap = min_len / 2;
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
    for (s, e) in runs {
        match merged.last_mut() {
            Some(last) if s - last.1 - 1 < max_gap => last.1 = e,
            _ => merged.push((s, e)),
        }
    }

    let intervals = merged
        .into_iter()
        .filter(|(s, e)| e - s + 1 >= min_len)
        .map(|(s, e)| CalledInterval {
            start: p.coordinate(s),
            end: p.coordinate(e),
            mean_energy: p.values[s..=e].iter().sum::<f64>() / (e - s + 1) as f64,
        })
        .collect();

    Ok(RegionCall {
        seq_id: p.seq_id.clone(),
        intervals,
        threshold_used,
        min_len,
        smoothing,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub label: RegionLabel,
    pub truth_bp: u64,
    pub called_bp: u64,
    pub true_positive_bp: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when nothing was called, so precision is reported as 0.
    pub precision_undefined: bool,
    pub truth_intervals: usize,
    pub called_intervals: usize,
    pub matched_intervals: usize,
    /// Mean |offset| of start and end edges over matched truth intervals. A
    /// truth interval is compared with the outer edges of the calls overlapping it.
    pub mean_boundary_offset: Option<f64>,
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "label\t{}", self.label)?;
        writeln!(f, "truth_bp\t{}", self.truth_bp)?;
        writeln!(f, "called_bp\t{}", self.called_bp)?;
        writeln!(f, "true_positive_bp\t{}", self.true_positive_bp)?;
        writeln!(f, "precision\t{:.6}", self.precision)?;
        writeln!(f, "precision_undefined\t{}", self.precision_undefined)?;
        writeln!(f, "recall\t{:.6}", self.recall)?;
        writeln!(f, "f1\t{:.6}", self.f1)?;
        writeln!(f, "truth_intervals\t{}", self.truth_intervals)?;
        writeln!(f, "called_intervals\t{}", self.called_intervals)?;
        writeln!(f, "matched_intervals\t{}", self.matched_intervals)?;
        match self.mean_boundary_offset {
            Some(o) => writeln!(f, "mean_boundary_offset_bp\t{o:.3}"),
            None => writeln!(f, "mean_boundary_offset_bp\tNA"),
        }
    }
}

/// Per-bp precision, recall and F1 of `calls` against the `label` intervals
/// of `truth` on the same sequence.
pub fn evaluate(
    calls: &RegionCall,
    truth: &AnnotationTrack,
    label: RegionLabel,
) -> Result<Metrics, ScanError> {
    evaluate_within(calls, truth, label, None)
}

/// Like [`evaluate`], with truth clipped to `range` (1-based inclusive).
pub fn evaluate_within(
    calls: &RegionCall,
    truth: &AnnotationTrack,
    label: RegionLabel,
    range: Option<(u64, u64)>,
) -> Result<Metrics, ScanError> {
    let truth_iv: Vec<(u64, u64)> = truth
        .with_label(label)
        .filter(|a| calls.seq_id.is_empty() || a.seq_id == calls.seq_id)
        .filter_map(|a| match range {
            Some((lo, hi)) => {
                let (s, e) = (a.start.max(lo), a.end.min(hi));
                (s <= e).then_some((s, e))
            }
            None => Some((a.start, a.end)),
        })
        .collect();
    if truth_iv.is_empty() {
        return Err(ScanError::LabelNotFound(label.to_string()));
    }
    let call_iv: Vec<(u64, u64)> = calls.intervals.iter().map(|c| (c.start, c.end)).collect();

    let overlap = |a: (u64, u64), b: (u64, u64)| -> u64 {
        let s = a.0.max(b.0);
        let e = a.1.min(b.1);
        if s <= e {
            e - s + 1
        } else {
            0
        }
    };

    let truth_bp: u64 = truth_iv.iter().map(|(s, e)| e - s + 1).sum();
    let called_bp: u64 = call_iv.iter().map(|(s, e)| e - s + 1).sum();
    let tp: u64 = truth_iv
        .iter()
        .map(|&t| call_iv.iter().map(|&c| overlap(t, c)).sum::<u64>())
        .sum();

    let precision_undefined = called_bp == 0;
    let precision = if precision_undefined {
        0.0
    } else {
        tp as f64 / called_bp as f64
    };
    let recall = tp as f64 / truth_bp as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };

    let mut offsets = Vec::new();
    let mut matched = 0;
    for &t in &truth_iv {
        // a truth interval split by interior dips still has one outer start and end
        let hits = call_iv.iter().filter(|&&c| overlap(t, c) > 0);
        let outer = hits.fold(None, |acc: Option<(u64, u64)>, &(s, e)| match acc {
            Some((lo, hi)) => Some((lo.min(s), hi.max(e))),
            None => Some((s, e)),
        });
        if let Some((s, e)) = outer {
            matched += 1;
            offsets.push(t.0.abs_diff(s) as f64);
            offsets.push(t.1.abs_diff(e) as f64);
        }
    }
    let mean_boundary_offset =
        (!offsets.is_empty()).then(|| offsets.iter().sum::<f64>() / offsets.len() as f64);

    Ok(Metrics {
        label,
        truth_bp,
        called_bp,
        true_positive_bp: tp,
        precision,
        recall,
        f1,
        precision_undefined,
        truth_intervals: truth_iv.len(),
        called_intervals: call_iv.len(),
        matched_intervals: matched,
        mean_boundary_offset,
    })
}

//! Complex Morlet continuous wavelet transform.
//!
//! The mother wavelet is
//! `psi(t) = pi^(-1/4) (exp(i w0 t) - exp(-w0^2 / 2)) exp(-t^2 / 2)`,
//! which integrates to zero for every `w0`. Signals are sampled at one
//! sample per bp, so the daughter at scale `a` is `psi(t / a) / sqrt(a)`
//! evaluated at integer `t`, and the coefficient at position `b` is
//! `T(a, b) = sum_t f(t) conj(psi_a(t - b))`. Samples outside the signal are
//! treated as zero.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::fcgs_encoder::FcgsSignal;

pub const SCALOGRAM_MAGIC: [u8; 8] = *b"FCGSSCL1";

#[derive(Debug, Error)]
pub enum CwtError {
    #[error("empty signal")]
    EmptySignal,
    #[error("invalid scale {0}: scales must be finite and > 0")]
    InvalidScale(f64),
    #[error("invalid scale grid: {0}")]
    InvalidGrid(String),
    #[error("invalid wavelet parameters: {0}")]
    InvalidParams(String),
    #[error("coordinate window {start}..={end} is outside the scalogram")]
    InvalidWindow { start: u64, end: u64 },
    #[error("scalogram format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Complex Morlet parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorletParams {
    /// Carrier in radians per unit wavelet time; must exceed 5.
    pub omega0: f64,
    /// Points in the tabulated mother wavelet (made odd).
    pub support_len: usize,
    /// The wavelet is truncated to `|t| <= half_width` in wavelet time.
    pub half_width: f64,
}

impl Default for MorletParams {
    fn default() -> Self {
        Self {
            omega0: 5.4285,
            support_len: 601,
            half_width: 8.0,
        }
    }
}

impl MorletParams {
    pub fn new(omega0: f64, support_len: usize) -> Result<Self, CwtError> {
        Self {
            omega0,
            support_len,
            ..Self::default()
        }
        .validated()
    }

    /// Checks the admissibility bound and makes `support_len` odd.
    pub fn validated(mut self) -> Result<Self, CwtError> {
        if !(self.omega0.is_finite() && self.omega0 > 5.0) {
            return Err(CwtError::InvalidParams(format!(
                "omega0 must be > 5, got {}",
                self.omega0
            )));
        }
        if self.support_len < 3 {
            return Err(CwtError::InvalidParams("support_len must be >= 3".into()));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(CwtError::InvalidParams("half_width must be > 0".into()));
        }
        if self.support_len.is_multiple_of(2) {
            self.support_len += 1;
        }
        Ok(self)
    }

    /// Center frequency in cycles per unit wavelet time.
    pub fn f0(&self) -> f64 {
        self.omega0 / (2.0 * PI)
    }

    /// The zero-mean correction constant `exp(-w0^2 / 2)`.
    pub fn kappa(&self) -> f64 {
        (-0.5 * self.omega0 * self.omega0).exp()
    }

    /// Wavelet times of the mother tabulation: `support_len` evenly spaced
    /// points covering `[-half_width, half_width]`.
    pub fn mother_times(&self) -> Vec<f64> {
        let n = self.support_len;
        let step = 2.0 * self.half_width / (n - 1) as f64;
        (0..n).map(|j| -self.half_width + j as f64 * step).collect()
    }

    pub fn mother_table(&self) -> Vec<Complex64> {
        self.mother_times()
            .into_iter()
            .map(|t| morlet(t, self))
            .collect()
    }
}

/// The complex Morlet mother wavelet at wavelet time `t`.
pub fn morlet(t: f64, params: &MorletParams) -> Complex64 {
    let norm = PI.powf(-0.25);
    let envelope = (-0.5 * t * t).exp();
    let carrier = Complex64::from_polar(1.0, params.omega0 * t);
    (carrier - params.kappa()) * (norm * envelope)
}

/// Daughter wavelet tabulated on integer sample offsets `-half..=half`.
#[derive(Debug, Clone, PartialEq)]
pub struct Daughter {
    pub scale: f64,
    pub half: usize,
    pub values: Vec<Complex64>,
}

impl Daughter {
    /// Value at integer offset `t` (zero outside the support).
    pub fn at(&self, t: i64) -> Complex64 {
        let idx = t + self.half as i64;
        if idx < 0 || idx as usize >= self.values.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[idx as usize]
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `psi(t / a) / sqrt(a)` at integer `t` with `|t| <= ceil(a * half_width)`.
pub fn daughter(params: &MorletParams, a: f64) -> Result<Daughter, CwtError> {
    if !(a.is_finite() && a > 0.0) {
        return Err(CwtError::InvalidScale(a));
    }
    let half = (a * params.half_width).ceil() as usize;
    let gain = 1.0 / a.sqrt();
    let values = (-(half as i64)..=half as i64)
        .map(|t| morlet(t as f64 / a, params) * gain)
        .collect();
    Ok(Daughter {
        scale: a,
        half,
        values,
    })
}

/// Scale in samples to frequency in cycles per sample (cycles/bp).
pub fn scale_to_frequency(a: f64, params: &MorletParams) -> Result<f64, CwtError> {
    if !(a.is_finite() && a > 0.0) {
        return Err(CwtError::InvalidScale(a));
    }
    Ok(params.f0() / a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleSpacing {
    Log,
    Linear,
}

/// Strictly increasing positive scales.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    scales: Vec<f64>,
}

impl ScaleGrid {
    pub fn new(scales: Vec<f64>) -> Result<Self, CwtError> {
        if scales.is_empty() {
            return Err(CwtError::InvalidGrid("no scales".into()));
        }
        if let Some(&bad) = scales.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(CwtError::InvalidScale(bad));
        }
        if scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CwtError::InvalidGrid(
                "scales must be strictly increasing".into(),
            ));
        }
        Ok(Self { scales })
    }

    /// `count` scales spaced evenly in log between `min` and `max`.
    pub fn log(min: f64, max: f64, count: usize) -> Result<Self, CwtError> {
        if count == 0 {
            return Err(CwtError::InvalidGrid("count must be >= 1".into()));
        }
        if count == 1 {
            return Self::new(vec![min]);
        }
        if max <= min {
            return Err(CwtError::InvalidGrid(format!("max {max} <= min {min}")));
        }
        let (lo, hi) = (min.ln(), max.ln());
        let step = (hi - lo) / (count - 1) as f64;
        let mut scales: Vec<f64> = (0..count).map(|i| (lo + i as f64 * step).exp()).collect();
        scales[0] = min;
        scales[count - 1] = max;
        Self::new(scales)
    }

    /// Every integer scale in `min..=max` (rounded inwards).
    pub fn linear(min: f64, max: f64) -> Result<Self, CwtError> {
        let lo = min.ceil().max(1.0) as u64;
        let hi = max.floor() as u64;
        if hi < lo {
            return Err(CwtError::InvalidGrid(format!(
                "no integer scale in [{min}, {max}]"
            )));
        }
        Self::new((lo..=hi).map(|a| a as f64).collect())
    }

    pub fn build(
        min: f64,
        max: f64,
        count: usize,
        spacing: ScaleSpacing,
    ) -> Result<Self, CwtError> {
        match spacing {
            ScaleSpacing::Log => Self::log(min, max, count),
            ScaleSpacing::Linear => Self::linear(min, max),
        }
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }
}

impl Default for ScaleGrid {
    fn default() -> Self {
        Self::log(1.0, 64.0, 64).expect("default grid")
    }
}

/// Cone-of-influence half-width in samples: the e-folding time `sqrt(2) a`
/// of the Morlet envelope.
pub fn coi_half_width(a: f64) -> usize {
    (std::f64::consts::SQRT_2 * a).ceil() as usize
}

/// CWT coefficients over (scale, position), row-major by scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    scales: Vec<f64>,
    frequencies: Vec<f64>,
    width: usize,
    coefficients: Vec<Complex64>,
    modulus: Vec<f64>,
    /// Per scale, the half-open column range not touched by edge effects.
    valid: Vec<(usize, usize)>,
    pub start_coordinate: u64,
    pub source_id: String,
    pub omega0: f64,
}

impl Scalogram {
    fn assemble(
        rows: Vec<Vec<Complex64>>,
        grid: &ScaleGrid,
        params: &MorletParams,
        width: usize,
    ) -> Self {
        let scales = grid.scales().to_vec();
        let frequencies = scales.iter().map(|&a| params.f0() / a).collect();
        let valid = scales
            .iter()
            .map(|&a| {
                let c = coi_half_width(a);
                if 2 * c >= width {
                    (0, 0)
                } else {
                    (c, width - c)
                }
            })
            .collect();
        let coefficients: Vec<Complex64> = rows.into_iter().flatten().collect();
        let modulus = coefficients.iter().map(|c| c.norm()).collect();
        Self {
            scales,
            frequencies,
            width,
            coefficients,
            modulus,
            valid,
            start_coordinate: 1,
            source_id: String::new(),
            omega0: params.omega0,
        }
    }

    /// Builds a scalogram from precomputed coefficient rows, one per scale.
    pub fn from_rows(
        rows: Vec<Vec<Complex64>>,
        grid: &ScaleGrid,
        params: &MorletParams,
    ) -> Result<Self, CwtError> {
        let params = params.validated()?;
        if rows.len() != grid.len() {
            return Err(CwtError::InvalidGrid(format!(
                "{} rows for {} scales",
                rows.len(),
                grid.len()
            )));
        }
        let width = rows.first().map_or(0, Vec::len);
        if width == 0 {
            return Err(CwtError::EmptySignal);
        }
        if rows.iter().any(|r| r.len() != width) {
            return Err(CwtError::InvalidGrid("rows differ in length".into()));
        }
        Ok(Self::assemble(rows, grid, &params, width))
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Frequency of each scale row, cycles/bp; decreasing with scale.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn n_scales(&self) -> usize {
        self.scales.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn coefficient_row(&self, i: usize) -> &[Complex64] {
        &self.coefficients[i * self.width..(i + 1) * self.width]
    }

    pub fn modulus_row(&self, i: usize) -> &[f64] {
        &self.modulus[i * self.width..(i + 1) * self.width]
    }

    pub fn modulus(&self) -> &[f64] {
        &self.modulus
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coordinate(&self, b: usize) -> u64 {
        self.start_coordinate + b as u64
    }

    pub fn end_coordinate(&self) -> u64 {
        self.start_coordinate + self.width as u64 - 1
    }

    /// Half-open column range of scale row `i` outside the cone of influence.
    pub fn valid_range(&self, i: usize) -> (usize, usize) {
        self.valid[i]
    }

    pub fn in_cone_of_influence(&self, i: usize, b: usize) -> bool {
        let (lo, hi) = self.valid[i];
        b < lo || b >= hi
    }

    pub fn mean_modulus_per_scale(&self) -> Vec<f64> {
        (0..self.n_scales())
            .map(|i| self.modulus_row(i).iter().sum::<f64>() / self.width.max(1) as f64)
            .collect()
    }

    /// Row index, scale and frequency of the largest mean modulus.
    pub fn ridge(&self) -> (usize, f64, f64) {
        let means = self.mean_modulus_per_scale();
        let i = means
            .iter()
            .enumerate()
            .fold(0, |best, (i, &m)| if m > means[best] { i } else { best });
        (i, self.scales[i], self.frequencies[i])
    }

    pub fn max_modulus(&self) -> f64 {
        self.modulus.iter().copied().fold(0.0, f64::max)
    }

    /// Multiplies every coefficient by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.coefficients.iter_mut().for_each(|c| *c *= alpha);
        out.modulus = out.coefficients.iter().map(|c| c.norm()).collect();
        out
    }

    /// Keeps the columns covering genomic coordinates `start..=end`. Cells
    /// whose cone of influence lay outside the kept window become valid.
    pub fn crop(&self, start: u64, end: u64) -> Result<Self, CwtError> {
        if start > end || start < self.start_coordinate || end > self.end_coordinate() {
            return Err(CwtError::InvalidWindow { start, end });
        }
        let lo = (start - self.start_coordinate) as usize;
        let hi = (end - self.start_coordinate) as usize + 1;
        let width = hi - lo;
        let mut coefficients = Vec::with_capacity(width * self.n_scales());
        let mut modulus = Vec::with_capacity(width * self.n_scales());
        for i in 0..self.n_scales() {
            coefficients.extend_from_slice(&self.coefficient_row(i)[lo..hi]);
            modulus.extend_from_slice(&self.modulus_row(i)[lo..hi]);
        }
        let valid = self
            .valid
            .iter()
            .map(|&(vlo, vhi)| {
                let a = vlo.clamp(lo, hi) - lo;
                let b = vhi.clamp(lo, hi) - lo;
                if a >= b {
                    (0, 0)
                } else {
                    (a, b)
                }
            })
            .collect();
        Ok(Self {
            scales: self.scales.clone(),
            frequencies: self.frequencies.clone(),
            width,
            coefficients,
            modulus,
            valid,
            start_coordinate: start,
            source_id: self.source_id.clone(),
            omega0: self.omega0,
        })
    }

    /// Modulus as CSV: header `scale,frequency,<coordinates...>`, then one
    /// row per scale.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "scale,frequency")?;
        for b in 0..self.width {
            write!(out, ",{}", self.coordinate(b))?;
        }
        writeln!(out)?;
        for i in 0..self.n_scales() {
            write!(out, "{},{}", self.scales[i], self.frequencies[i])?;
            for v in self.modulus_row(i) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Little-endian binary, see `docs/formats.md`:
    /// magic (8) | n_scales u32 | reserved u32 | start_coordinate u64 | width u64 |
    /// omega0 f64 | per scale: scale f64, valid_lo u64, valid_hi u64 |
    /// coefficients as (re f64, im f64), row-major by scale | source id bytes.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(&SCALOGRAM_MAGIC)?;
        out.write_all(&(self.n_scales() as u32).to_le_bytes())?;
        out.write_all(&0u32.to_le_bytes())?;
        out.write_all(&self.start_coordinate.to_le_bytes())?;
        out.write_all(&(self.width as u64).to_le_bytes())?;
        out.write_all(&self.omega0.to_le_bytes())?;
        for (a, (lo, hi)) in self.scales.iter().zip(&self.valid) {
            out.write_all(&a.to_le_bytes())?;
            out.write_all(&(*lo as u64).to_le_bytes())?;
            out.write_all(&(*hi as u64).to_le_bytes())?;
        }
        for c in &self.coefficients {
            out.write_all(&c.re.to_le_bytes())?;
            out.write_all(&c.im.to_le_bytes())?;
        }
        out.write_all(self.source_id.as_bytes())?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self, CwtError> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf)?;
        if buf.len() < 40 || buf[..8] != SCALOGRAM_MAGIC {
            return Err(CwtError::Format("bad header".into()));
        }
        let u64_at = |off: usize| u64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
        let f64_at = |off: usize| f64::from_bits(u64_at(off));
        let m = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
        let start_coordinate = u64_at(16);
        let width = u64_at(24) as usize;
        let omega0 = f64_at(32);
        let coeff_at = 40 + 24 * m;
        let payload_end = coeff_at + 16 * m * width;
        if m == 0 || buf.len() < payload_end {
            return Err(CwtError::Format(format!(
                "expected at least {payload_end} bytes, found {}",
                buf.len()
            )));
        }
        let mut scales = Vec::with_capacity(m);
        let mut valid = Vec::with_capacity(m);
        for i in 0..m {
            let off = 40 + 24 * i;
            scales.push(f64_at(off));
            valid.push((u64_at(off + 8) as usize, u64_at(off + 16) as usize));
        }
        let grid = ScaleGrid::new(scales)?;
        let params = MorletParams {
            omega0,
            ..MorletParams::default()
        }
        .validated()?;
        let coefficients: Vec<Complex64> = buf[coeff_at..payload_end]
            .chunks_exact(16)
            .map(|c| Complex64::new(f64_at_slice(&c[..8]), f64_at_slice(&c[8..])))
            .collect();
        let source_id = String::from_utf8(buf[payload_end..].to_vec())
            .map_err(|_| CwtError::Format("source id is not UTF-8".into()))?;
        let rows = coefficients
            .chunks(width.max(1))
            .map(<[Complex64]>::to_vec)
            .collect();
        let mut s = Self::assemble(rows, &grid, &params, width);
        s.valid = valid;
        s.start_coordinate = start_coordinate;
        s.source_id = source_id;
        Ok(s)
    }
}

fn f64_at_slice(b: &[u8]) -> f64 {
    f64::from_le_bytes(b.try_into().unwrap())
}

/// FFT-based CWT of raw samples; the first sample sits at coordinate 1.
pub fn cwt(
    samples: &[f64],
    grid: &ScaleGrid,
    params: &MorletParams,
) -> Result<Scalogram, CwtError> {
    let params = params.validated()?;
    let n = samples.len();
    if n == 0 {
        return Err(CwtError::EmptySignal);
    }
    let daughters = grid
        .scales()
        .iter()
        .map(|&a| daughter(&params, a))
        .collect::<Result<Vec<_>, _>>()?;
    let max_half = daughters.iter().map(|d| d.half).max().unwrap_or(0);
    let fft_len = (n + 2 * max_half).next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(fft_len);
    let inverse = planner.plan_fft_inverse(fft_len);

    let mut spectrum: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spectrum.resize(fft_len, Complex64::new(0.0, 0.0));
    forward.process(&mut spectrum);
    let norm = 1.0 / fft_len as f64;

    let rows: Vec<Vec<Complex64>> = daughters
        .par_iter()
        .map(|d| {
            // kernel[m] = conj(d(half - m)) turns the correlation into a
            // linear convolution whose output is shifted by `half`
            let mut kernel = vec![Complex64::new(0.0, 0.0); fft_len];
            let width = d.values.len();
            for (m, slot) in kernel.iter_mut().take(width).enumerate() {
                *slot = d.values[width - 1 - m].conj();
            }
            forward.process(&mut kernel);
            for (k, s) in kernel.iter_mut().zip(&spectrum) {
                *k *= s;
            }
            inverse.process(&mut kernel);
            kernel[d.half..d.half + n]
                .iter()
                .map(|c| c * norm)
                .collect()
        })
        .collect();

    Ok(Scalogram::assemble(rows, grid, &params, n))
}

/// Reference CWT by direct summation at every (scale, position).
pub fn cwt_direct(
    samples: &[f64],
    grid: &ScaleGrid,
    params: &MorletParams,
) -> Result<Scalogram, CwtError> {
    let params = params.validated()?;
    let n = samples.len();
    if n == 0 {
        return Err(CwtError::EmptySignal);
    }
    let rows = grid
        .scales()
        .iter()
        .map(|&a| {
            let d = daughter(&params, a)?;
            let half = d.half as i64;
            Ok((0..n as i64)
                .map(|b| {
                    let lo = (b - half).max(0);
                    let hi = (b + half).min(n as i64 - 1);
                    (lo..=hi)
                        .map(|t| d.at(t - b).conj() * samples[t as usize])
                        .sum::<Complex64>()
                })
                .collect())
        })
        .collect::<Result<Vec<Vec<Complex64>>, CwtError>>()?;
    Ok(Scalogram::assemble(rows, grid, &params, n))
}

/// CWT of an encoded signal with genomic coordinates carried over.
pub fn analyze(
    signal: &FcgsSignal,
    grid: &ScaleGrid,
    params: &MorletParams,
) -> Result<Scalogram, CwtError> {
    let mut s = cwt(&signal.values, grid, params)?;
    s.start_coordinate = signal.start_coordinate;
    s.source_id = signal.source_id.clone();
    Ok(s)
}

//! End-to-end run: FASTA to FCGR, signal, scalogram, band profile, calls,
//! metrics and PNG, all written under one output directory with a manifest.
//!
//! Configuration is a flat `key = value` file; `#` starts a comment. The
//! same keys are accepted as CLI overrides. Relative paths in a config file
//! resolve against the file's directory.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chaos_game::{compute_fcgr, FcgrMatrix};
use crate::cwt_engine::{analyze, MorletParams, ScaleGrid, ScaleSpacing};
use crate::error::{Error, Result};
use crate::fcgs_encoder::encode_at;
use crate::intron_scan::{
    band_energy, call_regions, evaluate_within, Metrics, RegionCall, Threshold, DEFAULT_BAND,
    DEFAULT_MIN_LEN, DEFAULT_SMOOTHING,
};
use crate::sequence_io::{
    parse_annotations, read_fasta_file, subsequence, AnnotationTrack, NucleotideSequence,
    RegionLabel, SequenceError,
};
use crate::viz_export::{
    export_profile_csv, render_scalogram, Colormap, RenderSpec, MIN_IMAGE_SIDE,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("missing required setting `{0}`")]
    Missing(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub fasta: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    /// Precomputed FCGR CSV used instead of counting the input.
    pub matrix: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Record to analyze; the first record when unset.
    pub seq_id: Option<String>,
    /// Analysis window, 1-based inclusive. The whole record when unset.
    pub window: Option<(u64, u64)>,
    /// Flanking bases encoded on each side of the window. Defaults to the
    /// widest daughter half-support.
    pub context_margin: Option<u64>,
    pub k_order: usize,
    pub omega0: f64,
    pub support_len: usize,
    pub scale_min: f64,
    pub scale_max: f64,
    pub scale_count: usize,
    pub scale_spacing: ScaleSpacing,
    pub band: (f64, f64),
    pub threshold: Threshold,
    pub min_len: usize,
    pub smoothing: usize,
    pub label: RegionLabel,
    pub seed: u64,
    pub image_width: u32,
    pub image_height: u32,
    pub colormap: Colormap,
    pub scalogram_csv: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            fasta: None,
            annotations: None,
            matrix: None,
            out_dir: PathBuf::from("fcgs_out"),
            seq_id: None,
            window: None,
            context_margin: None,
            k_order: 2,
            omega0: 5.4285,
            support_len: 601,
            scale_min: 1.0,
            scale_max: 64.0,
            scale_count: 64,
            scale_spacing: ScaleSpacing::Log,
            band: DEFAULT_BAND,
            threshold: Threshold::Auto,
            min_len: DEFAULT_MIN_LEN,
            smoothing: DEFAULT_SMOOTHING,
            label: RegionLabel::Intron,
            seed: 0,
            image_width: 1200,
            image_height: 400,
            colormap: Colormap::Jet,
            scalogram_csv: true,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| invalid(key, format!("cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(
            key,
            format!("expected true or false, got `{value}`"),
        )),
    }
}

fn optional(value: &str) -> Option<&str> {
    (!value.is_empty() && value != "none").then_some(value)
}

impl PipelineConfig {
    /// Sets one key. `base` resolves relative paths.
    pub fn set(
        &mut self,
        key: &str,
        value: &str,
        base: Option<&Path>,
    ) -> std::result::Result<(), ConfigError> {
        let value = value.trim();
        let path = |v: &str| match base {
            Some(b) if Path::new(v).is_relative() => b.join(v),
            _ => PathBuf::from(v),
        };
        match key {
            "fasta" => self.fasta = optional(value).map(path),
            "annotations" => self.annotations = optional(value).map(path),
            "matrix" => self.matrix = optional(value).map(path),
            "out_dir" => self.out_dir = path(value),
            "seq_id" => self.seq_id = optional(value).map(str::to_string),
            "window_start" | "window_end" => {
                let v = optional(value)
                    .map(|v| parse_num::<u64>(key, v))
                    .transpose()?;
                let (mut s, mut e) = self.window.unwrap_or((0, 0));
                match (key, v) {
                    (_, None) => {
                        self.window = None;
                        return Ok(());
                    }
                    ("window_start", Some(v)) => s = v,
                    (_, Some(v)) => e = v,
                }
                self.window = Some((s, e));
            }
            "context_margin" => {
                self.context_margin = optional(value).map(|v| parse_num(key, v)).transpose()?
            }
            "k_order" => self.k_order = parse_num(key, value)?,
            "omega0" => self.omega0 = parse_num(key, value)?,
            "support_len" => self.support_len = parse_num(key, value)?,
            "scale_min" => self.scale_min = parse_num(key, value)?,
            "scale_max" => self.scale_max = parse_num(key, value)?,
            "scale_count" => self.scale_count = parse_num(key, value)?,
            "scale_spacing" => {
                self.scale_spacing = match value.to_ascii_lowercase().as_str() {
                    "log" => ScaleSpacing::Log,
                    "linear" => ScaleSpacing::Linear,
                    _ => return Err(invalid(key, "expected `log` or `linear`")),
                }
            }
            "band_low" => self.band.0 = parse_num(key, value)?,
            "band_high" => self.band.1 = parse_num(key, value)?,
            "threshold" => self.threshold = value.parse().map_err(|m: String| invalid(key, m))?,
            "min_len" => self.min_len = parse_num(key, value)?,
            "smoothing" => self.smoothing = parse_num(key, value)?,
            "label" => self.label = value.parse().map_err(|m: String| invalid(key, m))?,
            "seed" => self.seed = parse_num(key, value)?,
            "image_width" => self.image_width = parse_num(key, value)?,
            "image_height" => self.image_height = parse_num(key, value)?,
            "colormap" => {
                self.colormap = value.parse().map_err(|e| invalid(key, format!("{e}")))?
            }
            "scalogram_csv" => self.scalogram_csv = parse_bool(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_str(
        &mut self,
        text: &str,
        base: Option<&Path>,
    ) -> std::result::Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key.trim(), value, base).map_err(|e| match e {
                ConfigError::UnknownKey(k) => ConfigError::Parse {
                    line: i + 1,
                    message: format!("unknown key `{k}`"),
                },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_str(&text, path.parent())?;
        Ok(cfg)
    }

    pub fn morlet(&self) -> std::result::Result<MorletParams, ConfigError> {
        MorletParams::new(self.omega0, self.support_len)
            .map_err(|e| invalid("omega0", e.to_string()))
    }

    pub fn scale_grid(&self) -> std::result::Result<ScaleGrid, ConfigError> {
        ScaleGrid::build(
            self.scale_min,
            self.scale_max,
            self.scale_count,
            self.scale_spacing,
        )
        .map_err(|e| invalid("scale_min", e.to_string()))
    }

    pub fn effective_margin(&self) -> u64 {
        self.context_margin.unwrap_or_else(|| {
            let half_width = MorletParams::default().half_width;
            (self.scale_max * half_width).ceil() as u64
        })
    }

    /// Checks every setting before any computation starts.
    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        if self.fasta.is_none() {
            return Err(ConfigError::Missing("fasta".into()));
        }
        if self.k_order == 0 {
            return Err(invalid("k_order", "must be >= 1"));
        }
        if !(self.scale_min > 0.0 && self.scale_max > self.scale_min) {
            return Err(invalid(
                "scale_max",
                format!(
                    "need 0 < scale_min < scale_max, got {} and {}",
                    self.scale_min, self.scale_max
                ),
            ));
        }
        self.morlet()?;
        self.scale_grid()?;
        let (lo, hi) = self.band;
        if !(lo > 0.0 && hi > lo) {
            return Err(invalid(
                "band_low",
                format!("need 0 < band_low < band_high, got {lo} and {hi}"),
            ));
        }
        if let Threshold::Fixed(t) = self.threshold {
            if !t.is_finite() {
                return Err(invalid("threshold", "must be finite"));
            }
        }
        if self.min_len == 0 {
            return Err(invalid("min_len", "must be >= 1"));
        }
        if self.smoothing == 0 {
            return Err(invalid("smoothing", "must be >= 1"));
        }
        if let Some((s, e)) = self.window {
            if s == 0 || e == 0 {
                return Err(invalid(
                    "window_start",
                    "window needs both window_start and window_end >= 1",
                ));
            }
            if s > e {
                return Err(invalid(
                    "window_end",
                    format!("window end {e} precedes start {s}"),
                ));
            }
        }
        if self.image_width < MIN_IMAGE_SIDE || self.image_height < MIN_IMAGE_SIDE {
            return Err(invalid(
                "image_width",
                format!("image sides must be >= {MIN_IMAGE_SIDE}"),
            ));
        }
        Ok(())
    }

    /// Every key with its effective value, readable back by [`apply_str`].
    ///
    /// [`apply_str`]: PipelineConfig::apply_str
    pub fn to_config_string(&self) -> String {
        let opt_path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map_or("none".to_string(), |p| p.display().to_string())
        };
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("fasta", opt_path(&self.fasta));
        put("annotations", opt_path(&self.annotations));
        put("matrix", opt_path(&self.matrix));
        put("out_dir", self.out_dir.display().to_string());
        put(
            "seq_id",
            self.seq_id.clone().unwrap_or_else(|| "none".into()),
        );
        let (ws, we) = self
            .window
            .map_or(("none".into(), "none".into()), |(s, e)| {
                (s.to_string(), e.to_string())
            });
        put("window_start", ws);
        put("window_end", we);
        put("context_margin", self.effective_margin().to_string());
        put("k_order", self.k_order.to_string());
        put("omega0", self.omega0.to_string());
        put("support_len", self.support_len.to_string());
        put("scale_min", self.scale_min.to_string());
        put("scale_max", self.scale_max.to_string());
        put("scale_count", self.scale_count.to_string());
        put(
            "scale_spacing",
            match self.scale_spacing {
                ScaleSpacing::Log => "log".into(),
                ScaleSpacing::Linear => "linear".into(),
            },
        );
        put("band_low", self.band.0.to_string());
        put("band_high", self.band.1.to_string());
        put("threshold", self.threshold.to_string());
        put("min_len", self.min_len.to_string());
        put("smoothing", self.smoothing.to_string());
        put("label", self.label.to_string());
        put("seed", self.seed.to_string());
        put("image_width", self.image_width.to_string());
        put("image_height", self.image_height.to_string());
        put(
            "colormap",
            match self.colormap {
                Colormap::Jet => "jet".into(),
                Colormap::Gray => "gray".into(),
            },
        );
        put("scalogram_csv", self.scalogram_csv.to_string());
        s
    }
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub seq_id: String,
    /// Analyzed range, 1-based inclusive.
    pub range: (u64, u64),
    pub calls: RegionCall,
    pub metrics: Option<Metrics>,
    /// Index, scale and frequency of the strongest mean-modulus scale.
    pub ridge: (usize, f64, f64),
    pub artifacts: Vec<(String, PathBuf)>,
    pub manifest: PathBuf,
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = std::io::Read::read(&mut file, &mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn stage<E: Into<Error>>(name: &'static str) -> impl FnOnce(E) -> Error {
    move |e| e.into().in_stage(name)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn pick_record(records: Vec<NucleotideSequence>, id: Option<&str>) -> Result<NucleotideSequence> {
    let found = match id {
        Some(id) => records.into_iter().find(|r| r.id() == id),
        None => records.into_iter().next(),
    };
    found.ok_or_else(|| {
        ConfigError::Invalid {
            key: "seq_id".into(),
            message: format!("record `{}` not found", id.unwrap_or("<first>")),
        }
        .into()
    })
}

/// Runs every stage and writes the artifacts. The config is validated first.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    let params = cfg.morlet()?;
    let grid = cfg.scale_grid()?;
    let fasta = cfg.fasta.as_ref().expect("validated");

    let records = read_fasta_file(fasta).map_err(|e| match e {
        SequenceError::Io(io) => Error::io(fasta, io).in_stage("read_input"),
        other => Error::from(other).in_stage("read_input"),
    })?;
    let seq = pick_record(records, cfg.seq_id.as_deref()).map_err(|e| e.in_stage("read_input"))?;
    let truth = match &cfg.annotations {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| Error::io(p, e).in_stage("read_input"))?;
            Some(parse_annotations(&text).map_err(stage("read_input"))?)
        }
        None => None,
    };
    log::info!("{}: {} bp", seq.id(), seq.len());

    let matrix = match &cfg.matrix {
        Some(p) => {
            let m = FcgrMatrix::read_csv(p).map_err(stage("fcgr"))?;
            if m.order() != cfg.k_order {
                return Err(Error::from(crate::chaos_game::CgrError::OrderMismatch {
                    expected: cfg.k_order,
                    found: m.order(),
                })
                .in_stage("fcgr"));
            }
            m
        }
        None => compute_fcgr(&seq, cfg.k_order).map_err(stage("fcgr"))?,
    };

    let len = seq.len() as u64;
    let last_sample = len.saturating_sub(cfg.k_order as u64 - 1);
    let range = match cfg.window {
        Some((s, e)) => {
            if s > last_sample {
                return Err(Error::from(invalid(
                    "window_start",
                    format!("window start {s} lies past the last word start {last_sample}"),
                ))
                .in_stage("encode"));
            }
            (s, e.min(last_sample))
        }
        None => (1, last_sample),
    };
    let margin = cfg.effective_margin();
    let cut_start = range.0.saturating_sub(margin).max(1);
    let cut_end = (range.1 + margin + cfg.k_order as u64 - 1).min(len);
    let piece = subsequence(&seq, cut_start, cut_end).map_err(stage("encode"))?;
    let mut signal = encode_at(&piece, &matrix, cut_start).map_err(stage("encode"))?;
    signal.source_id = seq.id().to_string();

    let scalogram = analyze(&signal, &grid, &params)
        .and_then(|s| s.crop(range.0, range.1))
        .map_err(stage("cwt"))?;
    let ridge = scalogram.ridge();

    let profile = band_energy(&scalogram, cfg.band.0, cfg.band.1).map_err(stage("scan"))?;
    let calls =
        call_regions(&profile, cfg.threshold, cfg.min_len, cfg.smoothing).map_err(stage("scan"))?;
    log::info!("{} regions called", calls.intervals.len());

    let seq_truth = truth
        .as_ref()
        .map(|t| AnnotationTrack::from_entries(t.for_sequence(seq.id()).cloned().collect()))
        .transpose()
        .map_err(stage("evaluate"))?;
    let metrics = seq_truth
        .as_ref()
        .map(|t| evaluate_within(&calls, t, cfg.label, Some(range)))
        .transpose()
        .map_err(stage("evaluate"))?;

    let mut spec = RenderSpec::full(&scalogram, cfg.image_width, cfg.image_height);
    spec.colormap = cfg.colormap;
    if let Some(t) = &seq_truth {
        let entries = t.with_label(cfg.label).cloned().collect();
        spec.overlay = Some(AnnotationTrack::from_entries(entries).map_err(stage("render"))?);
    }
    let png = render_scalogram(&scalogram, &spec).map_err(stage("render"))?;

    let out = &cfg.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e).in_stage("write"))?;
    let mut artifacts = Vec::new();
    let mut add = |name: &str| {
        let p = out.join(name);
        artifacts.push((name.to_string(), p.clone()));
        p
    };
    let p = add("fcgr.csv");
    matrix.write_csv(&p).map_err(stage("write"))?;
    let (csv, bin) = (add("signal.csv"), add("signal.bin"));
    signal
        .save(Some(&csv), Some(&bin))
        .map_err(|e| Error::io(&csv, e).in_stage("write"))?;
    if cfg.scalogram_csv {
        let p = add("scalogram.csv");
        let mut w = create(&p)?;
        scalogram
            .write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&p, e).in_stage("write"))?;
    }
    let p = add("scalogram.bin");
    let mut w = create(&p)?;
    scalogram
        .write_binary(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&p, e).in_stage("write"))?;
    let p = add("scalogram.png");
    std::fs::write(&p, &png).map_err(|e| Error::io(&p, e).in_stage("write"))?;
    let p = add("profile.csv");
    export_profile_csv(&profile, &p).map_err(stage("write"))?;
    let p = add("calls.bed");
    let mut w = create(&p)?;
    calls
        .write_bed(&mut w, cfg.label)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&p, e).in_stage("write"))?;
    if let Some(m) = &metrics {
        let p = add("metrics.txt");
        std::fs::write(&p, m.to_string()).map_err(|e| Error::io(&p, e).in_stage("write"))?;
    }

    let manifest = out.join("manifest.txt");
    let mut text = String::from("[config]\n");
    text.push_str(&cfg.to_config_string());
    let _ = writeln!(text, "\n[run]");
    let _ = writeln!(text, "seq_id = {}", seq.id());
    let _ = writeln!(text, "range = {}-{}", range.0, range.1);
    let _ = writeln!(text, "encoded = {cut_start}-{cut_end}");
    let _ = writeln!(text, "threshold_used = {}", calls.threshold_used);
    let _ = writeln!(text, "ridge_scale = {}", ridge.1);
    let _ = writeln!(text, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(text, "\n[inputs]");
    for p in [Some(fasta), cfg.annotations.as_ref(), cfg.matrix.as_ref()]
        .into_iter()
        .flatten()
    {
        let _ = writeln!(text, "{}  {}", sha256_file(p)?, p.display());
    }
    let _ = writeln!(text, "\n[artifacts]");
    for (name, p) in &artifacts {
        let _ = writeln!(text, "{}  {name}", sha256_file(p)?);
    }
    std::fs::write(&manifest, text).map_err(|e| Error::io(&manifest, e).in_stage("write"))?;

    Ok(PipelineReport {
        seq_id: seq.id().to_string(),
        range,
        calls,
        metrics,
        ridge,
        artifacts,
        manifest,
    })
}

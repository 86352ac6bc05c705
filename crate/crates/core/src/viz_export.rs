//! Scalogram rendering and CSV artifacts.
//!
//! Rows of the plot are scales: the smallest scale (highest frequency) is at
//! the top and the largest scale at the bottom. Columns cover the requested
//! genomic window; each column shows the mean modulus of the bp it spans.
//! Colors are normalized by the maximum modulus inside the window.

use std::io::{BufRead, Cursor, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::cwt_engine::Scalogram;
use crate::intron_scan::BandEnergyProfile;
use crate::sequence_io::AnnotationTrack;

pub const MIN_IMAGE_SIDE: u32 = 16;
const OVERLAY_COLOR: [u8; 3] = [255, 0, 0];
const BACKGROUND: [u8; 3] = [255, 255, 255];
const INK: [u8; 3] = [0, 0, 0];
const GLYPH_SCALE: usize = 2;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("empty window {start}..={end}")]
    EmptyWindow { start: u64, end: u64 },
    #[error("window {start}..={end} is outside the scalogram range {lo}..={hi}")]
    WindowOutOfRange {
        start: u64,
        end: u64,
        lo: u64,
        hi: u64,
    },
    #[error("image size {width}x{height} is below the {MIN_IMAGE_SIDE} px minimum")]
    InvalidSize { width: u32, height: u32 },
    #[error("unknown colormap `{0}`")]
    UnknownColormap(String),
    #[error("PNG encoding failed: {0}")]
    Encoding(String),
    #[error("profile CSV line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Colormap {
    /// Dark blue for low values through cyan and yellow to dark red.
    #[default]
    Jet,
    /// White for low values, black for high.
    Gray,
}

impl Colormap {
    pub fn color(self, v: f64) -> [u8; 3] {
        let v = if v.is_finite() {
            v.clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
        match self {
            Colormap::Jet => [
                q(1.5 - (4.0 * v - 3.0).abs()),
                q(1.5 - (4.0 * v - 2.0).abs()),
                q(1.5 - (4.0 * v - 1.0).abs()),
            ],
            Colormap::Gray => {
                let g = q(1.0 - v);
                [g, g, g]
            }
        }
    }
}

impl FromStr for Colormap {
    type Err = RenderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jet" => Ok(Colormap::Jet),
            "gray" | "grey" => Ok(Colormap::Gray),
            _ => Err(RenderError::UnknownColormap(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    /// Genomic window, 1-based inclusive.
    pub window: (u64, u64),
    pub colormap: Colormap,
    pub width: u32,
    pub height: u32,
    /// Vertical lines are drawn at the start and end of every entry.
    pub overlay: Option<AnnotationTrack>,
}

impl RenderSpec {
    /// The whole scalogram at the given size.
    pub fn full(s: &Scalogram, width: u32, height: u32) -> Self {
        Self {
            window: (s.start_coordinate, s.end_coordinate()),
            colormap: Colormap::Jet,
            width,
            height,
            overlay: None,
        }
    }
}

/// Pixel rectangle holding the heat map inside the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlotArea {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl PlotArea {
    /// Images large enough get margins for tick labels.
    pub fn for_image(width: u32, height: u32) -> Self {
        let (w, h) = (width as usize, height as usize);
        if w >= 160 && h >= 80 {
            let (left, right, top, bottom) = (64, 6, 16, 28);
            Self {
                x: left,
                y: top,
                width: w - left - right,
                height: h - top - bottom,
            }
        } else {
            Self {
                x: 0,
                y: 0,
                width: w,
                height: h,
            }
        }
    }

    /// Scale row shown at plot row `r` (0 = top).
    pub fn scale_index(&self, r: usize, n_scales: usize) -> usize {
        (r * n_scales / self.height).min(n_scales - 1)
    }

    /// Half-open 0-based column range of the window covered by plot column `c`.
    pub fn column_span(&self, c: usize, window_len: usize) -> (usize, usize) {
        let lo = c * window_len / self.width;
        let hi = ((c + 1) * window_len / self.width)
            .max(lo + 1)
            .min(window_len);
        (lo, hi)
    }

    fn column_of(&self, offset: usize, window_len: usize) -> usize {
        (offset * self.width / window_len).min(self.width - 1)
    }
}

struct Canvas {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Canvas {
    fn new(width: usize, height: usize) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&BACKGROUND);
        }
        Self {
            width,
            height,
            data,
        }
    }

    fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        if x < self.width && y < self.height {
            let i = (y * self.width + x) * 3;
            self.data[i..i + 3].copy_from_slice(&rgb);
        }
    }

    fn text(&mut self, x: usize, y: usize, text: &str) {
        let mut cx = x;
        for ch in text.chars() {
            if let Some(rows) = glyph(ch) {
                for (dy, bits) in rows.iter().enumerate() {
                    for dx in 0..3 {
                        if bits & (0b100 >> dx) != 0 {
                            for sy in 0..GLYPH_SCALE {
                                for sx in 0..GLYPH_SCALE {
                                    self.put(
                                        cx + dx * GLYPH_SCALE + sx,
                                        y + dy * GLYPH_SCALE + sy,
                                        INK,
                                    );
                                }
                            }
                        }
                    }
                }
            }
            cx += 4 * GLYPH_SCALE;
        }
    }

    fn encode_png(&self) -> Result<Vec<u8>, RenderError> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc
                .write_header()
                .map_err(|e| RenderError::Encoding(e.to_string()))?;
            writer
                .write_image_data(&self.data)
                .map_err(|e| RenderError::Encoding(e.to_string()))?;
        }
        Ok(out)
    }
}

fn text_width(text: &str) -> usize {
    text.chars().count() * 4 * GLYPH_SCALE
}

/// 3x5 bitmap glyphs for the characters used in axis labels.
fn glyph(ch: char) -> Option<[u8; 5]> {
    Some(match ch {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b001, 0b001, 0b001],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        '.' => [0b000, 0b000, 0b000, 0b000, 0b010],
        '-' => [0b000, 0b000, 0b111, 0b000, 0b000],
        '/' => [0b001, 0b001, 0b010, 0b100, 0b100],
        'b' => [0b100, 0b100, 0b111, 0b101, 0b111],
        'p' => [0b000, 0b111, 0b101, 0b111, 0b100],
        'c' => [0b000, 0b111, 0b100, 0b100, 0b111],
        'y' => [0b000, 0b101, 0b111, 0b001, 0b111],
        'l' => [0b010, 0b010, 0b010, 0b010, 0b010],
        'e' => [0b111, 0b101, 0b111, 0b100, 0b111],
        's' => [0b011, 0b100, 0b010, 0b001, 0b110],
        _ => return None,
    })
}

/// Renders the modulus of `s` inside `spec.window` as an RGB PNG.
pub fn render_scalogram(s: &Scalogram, spec: &RenderSpec) -> Result<Vec<u8>, RenderError> {
    let (start, end) = spec.window;
    if start > end {
        return Err(RenderError::EmptyWindow { start, end });
    }
    let (lo, hi) = (s.start_coordinate, s.end_coordinate());
    if s.width() == 0 || start < lo || end > hi {
        return Err(RenderError::WindowOutOfRange { start, end, lo, hi });
    }
    if spec.width < MIN_IMAGE_SIDE || spec.height < MIN_IMAGE_SIDE {
        return Err(RenderError::InvalidSize {
            width: spec.width,
            height: spec.height,
        });
    }

    let offset = (start - lo) as usize;
    let window_len = (end - start + 1) as usize;
    let area = PlotArea::for_image(spec.width, spec.height);
    let n_scales = s.n_scales();

    // column-binned modulus, one row per scale
    let binned: Vec<Vec<f64>> = (0..n_scales)
        .map(|i| {
            let row = &s.modulus_row(i)[offset..offset + window_len];
            (0..area.width)
                .map(|c| {
                    let (a, b) = area.column_span(c, window_len);
                    row[a..b].iter().sum::<f64>() / (b - a) as f64
                })
                .collect()
        })
        .collect();
    let max = binned.iter().flatten().copied().fold(0.0, f64::max);

    let mut canvas = Canvas::new(spec.width as usize, spec.height as usize);
    for r in 0..area.height {
        let row = &binned[area.scale_index(r, n_scales)];
        for (c, &v) in row.iter().enumerate() {
            let norm = if max > 0.0 { v / max } else { 0.0 };
            canvas.put(area.x + c, area.y + r, spec.colormap.color(norm));
        }
    }

    if let Some(track) = &spec.overlay {
        for a in track.entries() {
            for edge in [a.start, a.end] {
                if (start..=end).contains(&edge) {
                    let x = area.x + area.column_of((edge - start) as usize, window_len);
                    for y in area.y..area.y + area.height {
                        canvas.put(x, y, OVERLAY_COLOR);
                    }
                }
            }
        }
    }

    if area.x > 0 {
        draw_axes(&mut canvas, &area, s, start, window_len);
    }
    canvas.encode_png()
}

fn draw_axes(canvas: &mut Canvas, area: &PlotArea, s: &Scalogram, start: u64, window_len: usize) {
    let n_scales = s.n_scales();
    let glyph_h = 5 * GLYPH_SCALE;
    // frequency ticks on the left
    let ticks = 5.min(n_scales);
    for t in 0..ticks {
        let r = if ticks == 1 {
            0
        } else {
            t * (area.height - 1) / (ticks - 1)
        };
        let f = s.frequencies()[area.scale_index(r, n_scales)];
        let label = format!("{f:.3}");
        let y = area.y + r;
        for x in area.x.saturating_sub(4)..area.x {
            canvas.put(x, y, INK);
        }
        let tx = area.x.saturating_sub(6 + text_width(&label));
        let ty = y.saturating_sub(glyph_h / 2).min(canvas.height - glyph_h);
        canvas.text(tx, ty, &label);
    }
    canvas.text(2, 2, "cycles/bp");

    // coordinate ticks along the bottom
    let base_y = area.y + area.height;
    let xticks = 4;
    for t in 0..=xticks {
        let c = t * (area.width - 1) / xticks;
        let (a, _) = area.column_span(c, window_len);
        let label = (start + a as u64).to_string();
        let x = area.x + c;
        for y in base_y..base_y + 4 {
            canvas.put(x, y, INK);
        }
        let w = text_width(&label);
        let tx = x.saturating_sub(w / 2).min(canvas.width.saturating_sub(w));
        canvas.text(tx, base_y + 6, &label);
    }
    let unit = "bp";
    canvas.text(
        canvas.width.saturating_sub(text_width(unit) + 2),
        canvas.height.saturating_sub(glyph_h + 1),
        unit,
    );
}

/// Decodes an RGB PNG into `(width, height, pixels)`.
pub fn decode_png(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>), RenderError> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| RenderError::Encoding(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| RenderError::Encoding("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| RenderError::Encoding(e.to_string()))?;
    buf.truncate(info.buffer_size());
    Ok((info.width, info.height, buf))
}

/// Writes `coordinate,energy` with 17 significant digits per value.
pub fn write_profile_csv<W: Write>(p: &BandEnergyProfile, mut out: W) -> std::io::Result<()> {
    writeln!(out, "coordinate,energy")?;
    for (i, v) in p.values.iter().enumerate() {
        writeln!(out, "{},{:.16e}", p.coordinate(i), v)?;
    }
    Ok(())
}

pub fn export_profile_csv(
    p: &BandEnergyProfile,
    path: impl AsRef<Path>,
) -> Result<(), RenderError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_profile_csv(p, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads `(coordinate, energy)` pairs written by [`write_profile_csv`].
pub fn read_profile_csv<R: BufRead>(input: R) -> Result<Vec<(u64, f64)>, RenderError> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "coordinate,energy" {
                return Err(RenderError::Format {
                    line: 1,
                    message: "missing header".into(),
                });
            }
            continue;
        }
        let bad = |message: String| RenderError::Format {
            line: i + 1,
            message,
        };
        let (c, v) = line
            .split_once(',')
            .ok_or_else(|| bad(format!("expected two fields in `{line}`")))?;
        let c = c
            .parse()
            .map_err(|_| bad(format!("bad coordinate `{c}`")))?;
        let v = v.parse().map_err(|_| bad(format!("bad value `{v}`")))?;
        rows.push((c, v));
    }
    Ok(rows)
}

//! Chaos game representation and order-k frequency matrices (FCGR).
//!
//! Corners of the unit square: A=(0,0), C=(0,1), G=(1,1), T=(1,0).
//! Each residue moves the current point halfway towards its corner,
//! starting from the center (0.5, 0.5).
//!
//! The FCGR cell of a k-word is the cell of a 2^k x 2^k grid that holds the
//! word's CGR end point, with row 0 at the top (y near 1). Because every step
//! halves the distance to a corner, the cell is a pure bit pattern: bit `j`
//! of the column is the x-bit of the word's `j`-th residue, so the last residue
//! picks the quadrant and the first residue picks the innermost sub-cell.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::sequence_io::NucleotideSequence;

/// Largest order accepted unless a caller raises the cap.
pub const DEFAULT_MAX_ORDER: usize = 12;

/// Imported matrices may carry printed rounding; anything further from a
/// unit total than this is rejected.
pub const IMPORT_SUM_TOLERANCE: f64 = 1e-3;

/// Sequences longer than this are counted in parallel chunks.
const PARALLEL_MIN_LEN: usize = 1 << 20;
const PARALLEL_MAX_ORDER: usize = 8;

#[derive(Debug, Error)]
pub enum CgrError {
    #[error("ambiguous base {found:?} at word offset {position}")]
    AmbiguousBase { position: usize, found: char },
    #[error("sequence has no unambiguous residues")]
    EmptyTrajectory,
    #[error("word length must be at least 1")]
    InvalidOrder,
    #[error("no window of length {k} free of ambiguous bases")]
    NoValidWords { k: usize },
    #[error("order {k} exceeds the configured maximum {max}")]
    OrderTooLarge { k: usize, max: usize },
    #[error("word length {found} does not match matrix order {expected}")]
    OrderMismatch { expected: usize, found: usize },
    #[error("matrix CSV line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgrPoint {
    pub x: f64,
    pub y: f64,
}

impl CgrPoint {
    pub const ORIGIN: CgrPoint = CgrPoint { x: 0.5, y: 0.5 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Corner bits `(x, y)` of a base.
#[inline]
pub fn vertex(base: u8) -> Option<(u8, u8)> {
    match base {
        b'A' => Some((0, 0)),
        b'C' => Some((0, 1)),
        b'G' => Some((1, 1)),
        b'T' => Some((1, 0)),
        _ => None,
    }
}

/// One CGR iteration: the midpoint between `previous` and the corner of `base`.
pub fn cgr_step(previous: CgrPoint, base: u8) -> Result<CgrPoint, CgrError> {
    let (vx, vy) = vertex(base.to_ascii_uppercase()).ok_or(CgrError::AmbiguousBase {
        position: 0,
        found: base as char,
    })?;
    Ok(CgrPoint {
        x: 0.5 * (previous.x + f64::from(vx)),
        y: 0.5 * (previous.y + f64::from(vy)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgrTrajectory {
    pub origin: CgrPoint,
    pub points: Vec<CgrPoint>,
}

/// Runs the chaos game over `seq`. `N` residues are skipped: they do not move
/// the point and produce no trajectory entry.
pub fn cgr_map(seq: &NucleotideSequence) -> Result<CgrTrajectory, CgrError> {
    cgr_map_residues(seq.residues())
}

pub(crate) fn cgr_map_residues(residues: &[u8]) -> Result<CgrTrajectory, CgrError> {
    let mut points = Vec::with_capacity(residues.len());
    let mut current = CgrPoint::ORIGIN;
    for &b in residues {
        if vertex(b).is_none() {
            continue;
        }
        current = cgr_step(current, b)?;
        points.push(current);
    }
    if points.is_empty() {
        return Err(CgrError::EmptyTrajectory);
    }
    Ok(CgrTrajectory {
        origin: CgrPoint::ORIGIN,
        points,
    })
}

/// Column and row bit codes of a word; `y_code` counts from the bottom.
#[inline]
fn word_codes(word: &[u8]) -> Result<(usize, usize), CgrError> {
    let mut x_code = 0usize;
    let mut y_code = 0usize;
    for (j, &b) in word.iter().enumerate() {
        let (vx, vy) = vertex(b).ok_or(CgrError::AmbiguousBase {
            position: j,
            found: b as char,
        })?;
        x_code |= usize::from(vx) << j;
        y_code |= usize::from(vy) << j;
    }
    Ok((x_code, y_code))
}

/// `(row, col)` of a word in its order-`word.len()` FCGR grid, row 0 at the top.
pub fn cell_index(word: &[u8]) -> Result<(usize, usize), CgrError> {
    let k = word.len();
    if k == 0 {
        return Err(CgrError::InvalidOrder);
    }
    if k >= usize::BITS as usize / 2 {
        return Err(CgrError::OrderTooLarge {
            k,
            max: usize::BITS as usize / 2 - 1,
        });
    }
    let (x_code, y_code) = word_codes(word)?;
    let side = 1usize << k;
    Ok((side - 1 - y_code, x_code))
}

/// Order-k word frequencies laid out on the CGR grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FcgrMatrix {
    order: usize,
    cells: Vec<f64>,
    counted_words: u64,
    source_id: String,
}

#[derive(Debug, Clone, Copy)]
pub struct FcgrOptions {
    pub max_order: usize,
}

impl Default for FcgrOptions {
    fn default() -> Self {
        Self {
            max_order: DEFAULT_MAX_ORDER,
        }
    }
}

/// Counts every N-free k-word of `seq` and normalizes by the number of
/// counted words, so the cells sum to one.
pub fn compute_fcgr(seq: &NucleotideSequence, k: usize) -> Result<FcgrMatrix, CgrError> {
    compute_fcgr_with(seq, k, FcgrOptions::default())
}

pub fn compute_fcgr_with(
    seq: &NucleotideSequence,
    k: usize,
    options: FcgrOptions,
) -> Result<FcgrMatrix, CgrError> {
    check_order(k, options.max_order)?;
    let residues = seq.residues();
    let side = 1usize << k;

    let counts = if residues.len() >= PARALLEL_MIN_LEN && k <= PARALLEL_MAX_ORDER {
        let n_windows = residues.len().saturating_sub(k - 1);
        let chunk = PARALLEL_MIN_LEN / 4;
        (0..n_windows.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                let first = c * chunk;
                let last = (first + chunk).min(n_windows);
                let mut local = vec![0u64; side * side];
                count_words(&residues[first..last + k - 1], k, &mut local);
                local
            })
            .reduce(
                || vec![0u64; side * side],
                |mut acc, local| {
                    acc.iter_mut().zip(&local).for_each(|(a, b)| *a += b);
                    acc
                },
            )
    } else {
        let mut counts = vec![0u64; side * side];
        count_words(residues, k, &mut counts);
        counts
    };

    let counted_words: u64 = counts.iter().sum();
    if counted_words == 0 {
        return Err(CgrError::NoValidWords { k });
    }
    let total = counted_words as f64;
    Ok(FcgrMatrix {
        order: k,
        cells: counts.iter().map(|&c| c as f64 / total).collect(),
        counted_words,
        source_id: seq.id().to_string(),
    })
}

fn check_order(k: usize, max_order: usize) -> Result<(), CgrError> {
    if k == 0 {
        return Err(CgrError::InvalidOrder);
    }
    let max = max_order.min(usize::BITS as usize / 2 - 1);
    if k > max {
        return Err(CgrError::OrderTooLarge { k, max });
    }
    Ok(())
}

/// Visits the flat cell index of every N-free k-window in order; the
/// callback receives the 0-based window start.
pub(crate) fn for_each_word_cell(residues: &[u8], k: usize, mut f: impl FnMut(usize, usize)) {
    let side = 1usize << k;
    let top = k - 1;
    let mut x_code = 0usize;
    let mut y_code = 0usize;
    let mut run = 0usize;
    for (i, &b) in residues.iter().enumerate() {
        match vertex(b) {
            Some((vx, vy)) => {
                x_code = (x_code >> 1) | (usize::from(vx) << top);
                y_code = (y_code >> 1) | (usize::from(vy) << top);
                run += 1;
                if run >= k {
                    f(i + 1 - k, (side - 1 - y_code) * side + x_code);
                }
            }
            None => run = 0,
        }
    }
}

fn count_words(residues: &[u8], k: usize, counts: &mut [u64]) {
    for_each_word_cell(residues, k, |_, cell| counts[cell] += 1);
}

impl FcgrMatrix {
    /// Builds a matrix from row-major cells, e.g. one printed in a table.
    ///
    /// Cells must lie in [0, 1] and sum to one within [`IMPORT_SUM_TOLERANCE`].
    pub fn from_cells(
        order: usize,
        cells: Vec<f64>,
        counted_words: u64,
        source_id: impl Into<String>,
    ) -> Result<Self, CgrError> {
        check_order(order, usize::BITS as usize / 2 - 1)?;
        let side = 1usize << order;
        if cells.len() != side * side {
            return Err(CgrError::Format {
                line: 0,
                message: format!(
                    "expected {} cells for order {order}, got {}",
                    side * side,
                    cells.len()
                ),
            });
        }
        if let Some(bad) = cells.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(CgrError::Format {
                line: 0,
                message: format!("cell value {bad} outside [0, 1]"),
            });
        }
        let total: f64 = cells.iter().sum();
        if (total - 1.0).abs() > IMPORT_SUM_TOLERANCE {
            return Err(CgrError::Format {
                line: 0,
                message: format!("cells sum to {total}, expected 1"),
            });
        }
        Ok(Self {
            order,
            cells,
            counted_words,
            source_id: source_id.into(),
        })
    }

    /// Every cell set to 4^-k.
    pub fn uniform(order: usize) -> Result<Self, CgrError> {
        check_order(order, DEFAULT_MAX_ORDER)?;
        let n = 1usize << (2 * order);
        Ok(Self {
            order,
            cells: vec![1.0 / n as f64; n],
            counted_words: 0,
            source_id: "uniform".into(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn side(&self) -> usize {
        1 << self.order
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn counted_words(&self) -> u64 {
        self.counted_words
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.side() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let side = self.side();
        &self.cells[row * side..(row + 1) * side]
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }

    pub fn max_value(&self) -> f64 {
        self.cells.iter().copied().fold(0.0, f64::max)
    }

    /// Shannon entropy of the word distribution, in bits.
    pub fn entropy_bits(&self) -> f64 {
        self.cells
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum()
    }

    /// Frequency of `word`, which must have exactly `order` unambiguous bases.
    pub fn lookup(&self, word: &[u8]) -> Result<f64, CgrError> {
        if word.len() != self.order {
            return Err(CgrError::OrderMismatch {
                expected: self.order,
                found: word.len(),
            });
        }
        let (row, col) = cell_index(word)?;
        Ok(self.get(row, col))
    }

    pub(crate) fn cell_value(&self, flat: usize) -> f64 {
        self.cells[flat]
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = format!(
            "# fcgr order={} counted_words={} source_id={}\n",
            self.order, self.counted_words, self.source_id
        );
        for r in 0..self.side() {
            for (c, v) in self.row(r).iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), CgrError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_csv_string().as_bytes())?;
        f.flush()?;
        Ok(())
    }

    /// Parses the CSV written by [`FcgrMatrix::to_csv_string`].
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self, CgrError> {
        let mut lines = reader.lines().enumerate();
        let (order, counted_words, source_id) = match lines.next() {
            Some((_, line)) => parse_header(&line?)?,
            None => {
                return Err(CgrError::Format {
                    line: 1,
                    message: "missing header".into(),
                })
            }
        };
        check_order(order, usize::BITS as usize / 2 - 1)?;
        let side = 1usize << order;
        let mut cells = Vec::with_capacity(side * side);
        let mut rows = 0;
        for (i, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let before = cells.len();
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| CgrError::Format {
                    line: lineno,
                    message: format!("not a number: `{field}`"),
                })?;
                cells.push(v);
            }
            if cells.len() - before != side {
                return Err(CgrError::Format {
                    line: lineno,
                    message: format!("expected {side} values, found {}", cells.len() - before),
                });
            }
            rows += 1;
        }
        if rows != side {
            return Err(CgrError::Format {
                line: rows + 2,
                message: format!("expected {side} rows, found {rows}"),
            });
        }
        Self::from_cells(order, cells, counted_words, source_id)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, CgrError> {
        let f = std::fs::File::open(path)?;
        Self::from_csv(std::io::BufReader::new(f))
    }
}

fn parse_header(line: &str) -> Result<(usize, u64, String), CgrError> {
    let bad = |message: &str| CgrError::Format {
        line: 1,
        message: message.to_string(),
    };
    let rest = line
        .trim()
        .strip_prefix("# fcgr")
        .ok_or_else(|| bad("header must start with `# fcgr`"))?;
    let mut order = None;
    let mut counted = 0u64;
    let mut source = String::new();
    let mut tokens = rest.trim().splitn(3, ' ');
    for tok in tokens.by_ref() {
        if let Some(v) = tok.strip_prefix("order=") {
            order = Some(v.parse().map_err(|_| bad("bad order"))?);
        } else if let Some(v) = tok.strip_prefix("counted_words=") {
            counted = v.parse().map_err(|_| bad("bad counted_words"))?;
        } else if let Some(v) = tok.strip_prefix("source_id=") {
            source = v.to_string();
        }
    }
    let order = order.ok_or_else(|| bad("missing order"))?;
    Ok((order, counted, source))
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: &str = "GAATTCCTAAGCCTAAGCCT";

    fn seq(s: &str) -> NucleotideSequence {
        NucleotideSequence::new("t", s).unwrap()
    }

    #[test]
    fn step_examples() {
        let p = cgr_step(CgrPoint::ORIGIN, b'A').unwrap();
        assert_eq!(p, CgrPoint::new(0.25, 0.25));
        let q = cgr_step(p, b'C').unwrap();
        assert_eq!(q, CgrPoint::new(0.125, 0.625));
        assert_eq!(
            cgr_step(CgrPoint::new(1.0, 1.0), b'G').unwrap(),
            CgrPoint::new(1.0, 1.0)
        );
        assert!(matches!(
            cgr_step(p, b'N'),
            Err(CgrError::AmbiguousBase { .. })
        ));
    }

    #[test]
    fn map_acggt() {
        let t = cgr_map(&seq("ACGGT")).unwrap();
        // hand iteration: each step is the midpoint towards the next corner
        let expected = [
            (0.25, 0.25),
            (0.125, 0.625),
            (0.5625, 0.8125),
            (0.78125, 0.90625),
            (0.890625, 0.453125),
        ];
        assert_eq!(t.points.len(), 5);
        for (p, (x, y)) in t.points.iter().zip(expected) {
            assert_eq!((p.x, p.y), (x, y));
        }
        assert_eq!(t.origin, CgrPoint::ORIGIN);
    }

    #[test]
    fn map_contracts_towards_a() {
        let t = cgr_map(&seq(&"A".repeat(30))).unwrap();
        for w in t.points.windows(2) {
            assert!(w[1].x < w[0].x && w[1].y < w[0].y);
        }
        assert!(t.points.iter().all(|p| p.x > 0.0 && p.y > 0.0));
    }

    #[test]
    fn map_skips_ambiguous_and_rejects_all_n() {
        let t = cgr_map(&seq("ANC")).unwrap();
        assert_eq!(t.points.len(), 2);
        assert_eq!(t.points[1], CgrPoint::new(0.125, 0.625));
        assert!(matches!(
            cgr_map(&seq("NNN")),
            Err(CgrError::EmptyTrajectory)
        ));
        assert!(matches!(cgr_map(&seq("")), Err(CgrError::EmptyTrajectory)));
    }

    #[test]
    fn cell_index_first_order() {
        assert_eq!(cell_index(b"A").unwrap(), (1, 0));
        assert_eq!(cell_index(b"C").unwrap(), (0, 0));
        assert_eq!(cell_index(b"G").unwrap(), (0, 1));
        assert_eq!(cell_index(b"T").unwrap(), (1, 1));
        assert_eq!(cell_index(b"GA").unwrap(), (2, 1));
        assert!(matches!(
            cell_index(b"GN"),
            Err(CgrError::AmbiguousBase { position: 1, .. })
        ));
        assert!(matches!(cell_index(b""), Err(CgrError::InvalidOrder)));
    }

    #[test]
    fn fcgr_first_order_counts() {
        let m = compute_fcgr(&seq(S), 1).unwrap();
        assert_eq!(m.counted_words(), 20);
        let tol = 1e-12;
        assert!((m.lookup(b"A").unwrap() - 6.0 / 20.0).abs() < tol);
        assert!((m.lookup(b"C").unwrap() - 6.0 / 20.0).abs() < tol);
        assert!((m.lookup(b"G").unwrap() - 3.0 / 20.0).abs() < tol);
        assert!((m.lookup(b"T").unwrap() - 5.0 / 20.0).abs() < tol);
        assert!((m.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fcgr_skips_windows_with_n() {
        let m = compute_fcgr(&seq("ACNGT"), 2).unwrap();
        assert_eq!(m.counted_words(), 2);
        assert_eq!(m.lookup(b"AC").unwrap(), 0.5);
        assert_eq!(m.lookup(b"GT").unwrap(), 0.5);
        assert!(matches!(
            compute_fcgr(&seq("ANA"), 2),
            Err(CgrError::NoValidWords { k: 2 })
        ));
        assert!(matches!(
            compute_fcgr(&seq("A"), 2),
            Err(CgrError::NoValidWords { k: 2 })
        ));
        assert!(matches!(
            compute_fcgr(&seq("ACGT"), 0),
            Err(CgrError::InvalidOrder)
        ));
        assert!(matches!(
            compute_fcgr(&seq("ACGT"), 13),
            Err(CgrError::OrderTooLarge { k: 13, max: 12 })
        ));
        assert!(
            compute_fcgr_with(&seq("ACGTACGTACGTACG"), 13, FcgrOptions { max_order: 14 }).is_ok()
        );
    }

    #[test]
    fn lookup_errors_and_uniform() {
        let m = FcgrMatrix::uniform(2).unwrap();
        assert_eq!(m.lookup(b"TG").unwrap(), 1.0 / 16.0);
        assert!(matches!(
            m.lookup(b"T"),
            Err(CgrError::OrderMismatch {
                expected: 2,
                found: 1
            })
        ));
        assert!(matches!(
            m.lookup(b"TN"),
            Err(CgrError::AmbiguousBase { .. })
        ));
    }

    #[test]
    fn csv_round_trip_and_header() {
        let m = compute_fcgr(&seq(S), 2).unwrap();
        let text = m.to_csv_string();
        assert!(text.starts_with("# fcgr order=2 counted_words=19 source_id=t\n"));
        let back = FcgrMatrix::from_csv(text.as_bytes()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn csv_rejects_malformed() {
        assert!(FcgrMatrix::from_csv("".as_bytes()).is_err());
        assert!(FcgrMatrix::from_csv("# fcgr order=1\n0.5,0.5\n".as_bytes()).is_err());
        assert!(FcgrMatrix::from_csv("# fcgr order=1\n0.5,0.5\n0.5,x\n".as_bytes()).is_err());
        assert!(FcgrMatrix::from_csv("# fcgr order=1\n0.5,0.5\n0.5,0.5\n".as_bytes()).is_err());
        assert!(FcgrMatrix::from_csv("# fcgr order=1\n0.25,0.25,0.25\n0.25\n".as_bytes()).is_err());
        assert!(FcgrMatrix::from_csv("# fcgr order=1\n1.5,-0.5\n0,0\n".as_bytes()).is_err());
        let ok = FcgrMatrix::from_csv("# fcgr order=1\n0.25,0.25\n0.25,0.25\n".as_bytes()).unwrap();
        assert_eq!(ok.counted_words(), 0);
    }

    #[test]
    fn parallel_counting_matches_sequential() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut s: Vec<u8> = (0..PARALLEL_MIN_LEN + 12_345)
            .map(|_| b"ACGT"[rng.random_range(0..4)])
            .collect();
        s[1000] = b'N';
        let big = NucleotideSequence::new("big", std::str::from_utf8(&s).unwrap()).unwrap();
        for k in [1, 3, 6] {
            let par = compute_fcgr(&big, k).unwrap();
            let mut counts = vec![0u64; 1 << (2 * k)];
            count_words(big.residues(), k, &mut counts);
            assert_eq!(par.counted_words(), counts.iter().sum::<u64>());
            for (c, f) in counts.iter().zip(par.cells()) {
                assert_eq!(*f, *c as f64 / par.counted_words() as f64);
            }
        }
    }
}

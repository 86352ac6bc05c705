//! Frequency Chaos Game Signal: every k-word of a sequence replaced by its
//! frequency in an FCGR matrix, one sample per word start.
//!
//! Sample `i` (0-based) belongs to the genomic coordinate
//! `start_coordinate + i`. Windows containing `N` emit `0.0` and are flagged
//! in the mask.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::chaos_game::{for_each_word_cell, FcgrMatrix};
use crate::sequence_io::NucleotideSequence;

pub const SIGNAL_MAGIC: [u8; 8] = *b"FCGSSIG1";
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("sequence of {len} bp is shorter than word length {n}")]
    SequenceTooShort { len: usize, n: usize },
    #[error("word length {found} does not match matrix order {expected}")]
    OrderMismatch { expected: usize, found: usize },
    #[error("signal format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcgsSignal {
    pub values: Vec<f64>,
    /// `true` where the window held an ambiguous base.
    pub mask: Vec<bool>,
    pub order: usize,
    pub source_id: String,
    pub start_coordinate: u64,
    pub matrix_id: String,
}

impl FcgsSignal {
    /// Wraps raw samples, e.g. a synthetic test signal.
    pub fn from_samples(values: Vec<f64>, start_coordinate: u64) -> Self {
        let mask = vec![false; values.len()];
        Self {
            values,
            mask,
            order: 1,
            source_id: "samples".into(),
            start_coordinate,
            matrix_id: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn coordinate(&self, i: usize) -> u64 {
        self.start_coordinate + i as u64
    }

    /// `coordinate,value` rows under a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "coordinate,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", self.coordinate(i), v)?;
        }
        Ok(())
    }

    /// Little-endian binary: magic (8) | order u32 | reserved u32 |
    /// start_coordinate u64 | length u64 | length x f64 | source id bytes.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(&SIGNAL_MAGIC)?;
        out.write_all(&(self.order as u32).to_le_bytes())?;
        out.write_all(&0u32.to_le_bytes())?;
        out.write_all(&self.start_coordinate.to_le_bytes())?;
        out.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(self.source_id.as_bytes())?;
        Ok(())
    }

    /// Reads the binary layout of [`FcgsSignal::write_binary`]. The mask is
    /// not stored; every sample comes back unmasked.
    pub fn read_binary<R: Read>(mut input: R) -> Result<Self, EncodeError> {
        let mut header = [0u8; HEADER_LEN];
        input.read_exact(&mut header)?;
        if header[..8] != SIGNAL_MAGIC {
            return Err(EncodeError::Format("bad magic".into()));
        }
        let order = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let start = u64::from_le_bytes(header[16..24].try_into().unwrap());
        let len = u64::from_le_bytes(header[24..32].try_into().unwrap()) as usize;
        let mut body = Vec::new();
        input.read_to_end(&mut body)?;
        if body.len() < len * 8 {
            return Err(EncodeError::Format(format!(
                "expected {} payload bytes, found {}",
                len * 8,
                body.len()
            )));
        }
        let source_id = String::from_utf8(body[len * 8..].to_vec())
            .map_err(|_| EncodeError::Format("source id is not UTF-8".into()))?;
        let values = body[..len * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            values,
            mask: vec![false; len],
            order,
            source_id,
            start_coordinate: start,
            matrix_id: String::new(),
        })
    }

    pub fn save(&self, csv: Option<&Path>, binary: Option<&Path>) -> std::io::Result<()> {
        if let Some(p) = csv {
            let mut w = std::io::BufWriter::new(std::fs::File::create(p)?);
            self.write_csv(&mut w)?;
            w.flush()?;
        }
        if let Some(p) = binary {
            let mut w = std::io::BufWriter::new(std::fs::File::create(p)?);
            self.write_binary(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }
}

/// Overlapping words of length `n` at stride 1, in sequence order.
pub fn word_stream(seq: &NucleotideSequence, n: usize) -> Result<Vec<&str>, EncodeError> {
    if n == 0 || n > seq.len() {
        return Err(EncodeError::SequenceTooShort { len: seq.len(), n });
    }
    Ok(seq
        .residues()
        .windows(n)
        .map(|w| std::str::from_utf8(w).expect("ASCII residues"))
        .collect())
}

/// Encodes `seq` against `matrix`; the matrix may come from a longer source
/// such as the whole chromosome the sequence was cut from.
pub fn encode(seq: &NucleotideSequence, matrix: &FcgrMatrix) -> Result<FcgsSignal, EncodeError> {
    encode_at(seq, matrix, 1)
}

/// Like [`encode`], with the first sample placed at `start_coordinate`.
pub fn encode_at(
    seq: &NucleotideSequence,
    matrix: &FcgrMatrix,
    start_coordinate: u64,
) -> Result<FcgsSignal, EncodeError> {
    let n = matrix.order();
    if n == 0 {
        return Err(EncodeError::OrderMismatch {
            expected: 1,
            found: 0,
        });
    }
    if n > seq.len() {
        return Err(EncodeError::SequenceTooShort { len: seq.len(), n });
    }
    let count = seq.len() - n + 1;
    let mut values = vec![0.0; count];
    let mut mask = vec![true; count];
    for_each_word_cell(seq.residues(), n, |i, cell| {
        values[i] = matrix.cell_value(cell);
        mask[i] = false;
    });
    let masked = mask.iter().filter(|&&m| m).count();
    if masked > 0 {
        log::warn!(
            "{}: {masked} of {count} windows contain N and were set to 0",
            seq.id()
        );
    }
    Ok(FcgsSignal {
        values,
        mask,
        order: n,
        source_id: seq.id().to_string(),
        start_coordinate,
        matrix_id: matrix.source_id().to_string(),
    })
}

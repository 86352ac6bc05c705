//! Sequence and annotation ingestion.
//!
//! Coordinates are 1-based and inclusive. Conversion to 0-based offsets
//! happens only where residues are sliced.

mod annotations;
mod fasta;
mod fetch;

use std::fmt;

use thiserror::Error;

pub use annotations::{
    parse_annotations, write_annotations, Annotation, AnnotationTrack, RegionLabel,
};
pub use fasta::{parse_fasta, read_fasta_file, write_fasta};
pub use fetch::{cache_path_for, fetch_remote_fasta};

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid character {found:?} at line {line}, column {column}")]
    InvalidCharacter {
        line: usize,
        column: usize,
        found: char,
    },
    #[error("record `{0}` has no sequence")]
    EmptyRecord(String),
    #[error("line {0}: sequence data before the first '>' header")]
    MissingHeader(usize),
    #[error("line {line}: start {start} > end {end}")]
    InvalidInterval { line: usize, start: u64, end: u64 },
    #[error("line {line}: interval overlaps an earlier interval on `{seq_id}`")]
    OverlapError { line: usize, seq_id: String },
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("range {start}..={end} is outside 1..={len}")]
    RangeError { start: u64, end: u64, len: u64 },
    #[error("fetch failed: {0}")]
    Fetch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A DNA sequence over `{A, C, G, T, N}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NucleotideSequence {
    id: String,
    residues: Vec<u8>,
}

/// Canonical residue for an input byte: uppercase ACGT pass through, other
/// IUPAC codes collapse to `N`, anything else is rejected.
pub(crate) fn canonical_residue(b: u8) -> Option<u8> {
    match b.to_ascii_uppercase() {
        c @ (b'A' | b'C' | b'G' | b'T') => Some(c),
        b'N' | b'U' | b'R' | b'Y' | b'S' | b'W' | b'K' | b'M' | b'B' | b'D' | b'H' | b'V' => {
            Some(b'N')
        }
        _ => None,
    }
}

impl NucleotideSequence {
    /// Builds a sequence from text, canonicalizing case and IUPAC codes.
    pub fn new(id: impl Into<String>, residues: &str) -> Result<Self, SequenceError> {
        let mut out = Vec::with_capacity(residues.len());
        for (i, ch) in residues.chars().enumerate() {
            let canon = if ch.is_ascii() {
                canonical_residue(ch as u8)
            } else {
                None
            };
            match canon {
                Some(c) => out.push(c),
                None => {
                    return Err(SequenceError::InvalidCharacter {
                        line: 1,
                        column: i + 1,
                        found: ch,
                    })
                }
            }
        }
        Ok(Self {
            id: id.into(),
            residues: out,
        })
    }

    pub(crate) fn from_canonical(id: String, residues: Vec<u8>) -> Self {
        debug_assert!(residues
            .iter()
            .all(|b| matches!(b, b'A' | b'C' | b'G' | b'T' | b'N')));
        Self { id, residues }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn residues(&self) -> &[u8] {
        &self.residues
    }

    pub fn as_str(&self) -> &str {
        // residues are always ASCII
        std::str::from_utf8(&self.residues).expect("ASCII residues")
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn count_ambiguous(&self) -> usize {
        self.residues.iter().filter(|&&b| b == b'N').count()
    }
}

impl fmt::Display for NucleotideSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, ">{} ({} bp)", self.id, self.len())
    }
}

/// Cuts `start..=end` (1-based, inclusive) out of `seq`.
///
/// The returned record is named `<id>:<start>-<end>`.
pub fn subsequence(
    seq: &NucleotideSequence,
    start: u64,
    end: u64,
) -> Result<NucleotideSequence, SequenceError> {
    let len = seq.len() as u64;
    if start < 1 || start > end || end > len {
        return Err(SequenceError::RangeError { start, end, len });
    }
    let residues = seq.residues[(start - 1) as usize..end as usize].to_vec();
    Ok(NucleotideSequence {
        id: format!("{}:{}-{}", seq.id, start, end),
        residues,
    })
}

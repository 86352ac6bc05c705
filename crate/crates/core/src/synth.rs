//! Seeded synthetic genomes: i.i.d. background with embedded period-6.5
//! tandem motifs, plus the matching truth annotation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pipeline::ConfigError;
use crate::sequence_io::{Annotation, AnnotationTrack, NucleotideSequence, RegionLabel};

/// A C G T background frequencies.
pub const BACKGROUND_COMPOSITION: [f64; 4] = [0.3226, 0.1774, 0.1769, 0.3231];
pub const DEFAULT_UNIT6: &str = "GGAAAA";
pub const DEFAULT_UNIT7: &str = "GGAAAAA";
const BASES: [u8; 4] = *b"ACGT";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seq_id: String,
    /// Segment lengths: background, motif, background, motif, ...
    pub layout: Vec<usize>,
    pub mutation_rate: f64,
    pub seed: u64,
    pub unit6: String,
    pub unit7: String,
    pub composition: [f64; 4],
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seq_id: "synth".into(),
            layout: vec![2000, 200, 2000],
            mutation_rate: 0.0,
            seed: 0,
            unit6: DEFAULT_UNIT6.into(),
            unit7: DEFAULT_UNIT7.into(),
            composition: BACKGROUND_COMPOSITION,
        }
    }
}

/// Parses `"2000,53,3000"` into segment lengths.
pub fn parse_layout(raw: &str) -> Result<Vec<usize>, ConfigError> {
    let layout = raw
        .split(',')
        .map(|t| {
            t.trim().parse::<usize>().map_err(|_| ConfigError::Invalid {
                key: "layout".into(),
                message: format!("`{}` is not a length", t.trim()),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(layout)
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |message: String| ConfigError::Invalid {
            key: "synth".into(),
            message,
        };
        if self.layout.is_empty() || self.layout.contains(&0) {
            return Err(bad(
                "layout needs at least one segment, all lengths >= 1".into()
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(bad(format!(
                "mutation rate {} outside [0, 1]",
                self.mutation_rate
            )));
        }
        for u in [&self.unit6, &self.unit7] {
            if u.is_empty() || !u.bytes().all(|b| BASES.contains(&b)) {
                return Err(bad(format!("motif unit `{u}` must be non-empty ACGT")));
            }
        }
        let total: f64 = self.composition.iter().sum();
        if self.composition.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-3 {
            return Err(bad("composition must be non-negative and sum to 1".into()));
        }
        Ok(())
    }

    /// Motif segment positions, 1-based inclusive.
    pub fn motif_intervals(&self) -> Vec<(u64, u64)> {
        let mut pos = 1u64;
        let mut out = Vec::new();
        for (i, &len) in self.layout.iter().enumerate() {
            if i % 2 == 1 {
                out.push((pos, pos + len as u64 - 1));
            }
            pos += len as u64;
        }
        out
    }
}

/// Exact tandem of alternating 6-mer and 7-mer units, cut to `len`.
pub fn motif_segment(unit6: &str, unit7: &str, len: usize) -> Vec<u8> {
    unit6
        .bytes()
        .chain(unit7.bytes())
        .cycle()
        .take(len)
        .collect()
}

fn draw_base(rng: &mut ChaCha8Rng, composition: &[f64; 4]) -> u8 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (b, p) in BASES.iter().zip(composition) {
        acc += p;
        if u < acc {
            return *b;
        }
    }
    b'T'
}

/// Builds the genome and its truth track. Motifs are labeled intron, the
/// background other.
pub fn generate(spec: &SynthSpec) -> Result<(NucleotideSequence, AnnotationTrack), ConfigError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total: usize = spec.layout.iter().sum();
    let mut residues = Vec::with_capacity(total);
    let mut entries = Vec::with_capacity(spec.layout.len());
    for (i, &len) in spec.layout.iter().enumerate() {
        let start = residues.len() as u64 + 1;
        let label = if i % 2 == 1 {
            let mut seg = motif_segment(&spec.unit6, &spec.unit7, len);
            for b in seg.iter_mut() {
                if rng.random::<f64>() < spec.mutation_rate {
                    let others: Vec<u8> = BASES.iter().copied().filter(|x| x != b).collect();
                    *b = others[rng.random_range(0..3)];
                }
            }
            residues.extend_from_slice(&seg);
            RegionLabel::Intron
        } else {
            residues.extend((0..len).map(|_| draw_base(&mut rng, &spec.composition)));
            RegionLabel::Other
        };
        entries.push(Annotation {
            seq_id: spec.seq_id.clone(),
            start,
            end: residues.len() as u64,
            label,
        });
    }
    let text = String::from_utf8(residues).expect("ASCII residues");
    let seq =
        NucleotideSequence::new(spec.seq_id.clone(), &text).map_err(|e| ConfigError::Invalid {
            key: "synth".into(),
            message: e.to_string(),
        })?;
    let track = AnnotationTrack::from_entries(entries).map_err(|e| ConfigError::Invalid {
        key: "synth".into(),
        message: e.to_string(),
    })?;
    Ok((seq, track))
}

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use super::SequenceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegionLabel {
    Exon,
    Intron,
    Intergenic,
    Other,
}

impl RegionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::Exon => "exon",
            RegionLabel::Intron => "intron",
            RegionLabel::Intergenic => "intergenic",
            RegionLabel::Other => "other",
        }
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exon" => Ok(RegionLabel::Exon),
            "intron" => Ok(RegionLabel::Intron),
            "intergenic" => Ok(RegionLabel::Intergenic),
            "other" => Ok(RegionLabel::Other),
            _ => Err(format!("unknown label `{s}`")),
        }
    }
}

/// One labeled interval, 1-based inclusive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Annotation {
    pub seq_id: String,
    pub start: u64,
    pub end: u64,
    pub label: RegionLabel,
}

impl Annotation {
    pub fn len(&self) -> u64 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Sorted, per-sequence non-overlapping intervals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationTrack {
    entries: Vec<Annotation>,
}

impl AnnotationTrack {
    /// Validates and sorts `entries`. Line numbers in errors are the
    /// 1-based positions within `entries`.
    pub fn from_entries(entries: Vec<Annotation>) -> Result<Self, SequenceError> {
        let numbered = entries
            .into_iter()
            .enumerate()
            .map(|(i, a)| (i + 1, a))
            .collect();
        Self::validate(numbered)
    }

    fn validate(mut numbered: Vec<(usize, Annotation)>) -> Result<Self, SequenceError> {
        for (line, a) in &numbered {
            if a.start > a.end {
                return Err(SequenceError::InvalidInterval {
                    line: *line,
                    start: a.start,
                    end: a.end,
                });
            }
            if a.start == 0 {
                return Err(SequenceError::ParseError {
                    line: *line,
                    message: "coordinates are 1-based; start must be >= 1".into(),
                });
            }
        }
        numbered.sort_by(|(_, a), (_, b)| a.cmp(b));
        for pair in numbered.windows(2) {
            let (_, prev) = &pair[0];
            let (line, next) = &pair[1];
            if prev.seq_id == next.seq_id && next.start <= prev.end {
                return Err(SequenceError::OverlapError {
                    line: *line,
                    seq_id: next.seq_id.clone(),
                });
            }
        }
        Ok(Self {
            entries: numbered.into_iter().map(|(_, a)| a).collect(),
        })
    }

    pub fn entries(&self) -> &[Annotation] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn with_label(&self, label: RegionLabel) -> impl Iterator<Item = &Annotation> {
        self.entries.iter().filter(move |a| a.label == label)
    }

    pub fn for_sequence<'a>(&'a self, seq_id: &'a str) -> impl Iterator<Item = &'a Annotation> {
        self.entries.iter().filter(move |a| a.seq_id == seq_id)
    }
}

/// Parses the 4-column tab-separated annotation format:
/// `seq_id <TAB> start <TAB> end <TAB> label`. Lines starting with `#`
/// and blank lines are skipped.
pub fn parse_annotations(raw: &str) -> Result<AnnotationTrack, SequenceError> {
    let mut numbered = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(SequenceError::ParseError {
                line: lineno,
                message: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let coord = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| SequenceError::ParseError {
                    line: lineno,
                    message: format!("non-integer coordinate `{s}`"),
                })
        };
        let start = coord(fields[1])?;
        let end = coord(fields[2])?;
        let label = fields[3].trim().parse::<RegionLabel>().map_err(|message| {
            SequenceError::ParseError {
                line: lineno,
                message,
            }
        })?;
        numbered.push((
            lineno,
            Annotation {
                seq_id: fields[0].trim().to_string(),
                start,
                end,
                label,
            },
        ));
    }
    AnnotationTrack::validate(numbered)
}

pub fn write_annotations<W: Write>(track: &AnnotationTrack, mut out: W) -> std::io::Result<()> {
    for a in track.entries() {
        writeln!(out, "{}\t{}\t{}\t{}", a.seq_id, a.start, a.end, a.label)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gene_window_interval() {
        let t = parse_annotations("chrIII\t235841\t253375\tother").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.entries()[0].len(), 17535);
        assert_eq!(t.entries()[0].label, RegionLabel::Other);
    }

    #[test]
    fn comments_only_is_empty() {
        assert!(parse_annotations("").unwrap().is_empty());
        assert!(parse_annotations("# header\n\n# more\n")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn output_is_sorted() {
        let t = parse_annotations("c\t500\t600\tintron\nc\t10\t20\texon\n").unwrap();
        let starts: Vec<u64> = t.entries().iter().map(|a| a.start).collect();
        assert_eq!(starts, vec![10, 500]);
    }

    #[test]
    fn order_independent() {
        let lines = [
            "a\t1\t5\texon",
            "b\t3\t9\tintron",
            "a\t10\t20\tintron",
            "a\t30\t31\tother",
        ];
        let fwd = parse_annotations(&lines.join("\n")).unwrap();
        let mut rev = lines.to_vec();
        rev.reverse();
        let back = parse_annotations(&rev.join("\n")).unwrap();
        assert_eq!(fwd, back);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            parse_annotations("c\t9\t5\texon"),
            Err(SequenceError::InvalidInterval { line: 1, .. })
        ));
        assert!(matches!(
            parse_annotations("# c\nc\t1\t10\texon\nc\t5\t20\tintron"),
            Err(SequenceError::OverlapError { line: 3, .. })
        ));
        assert!(matches!(
            parse_annotations("c\tone\t5\texon"),
            Err(SequenceError::ParseError { line: 1, .. })
        ));
        assert!(matches!(
            parse_annotations("c\t1\t5"),
            Err(SequenceError::ParseError { line: 1, .. })
        ));
        assert!(matches!(
            parse_annotations("c\t1\t5\tgene"),
            Err(SequenceError::ParseError { line: 1, .. })
        ));
        // same coordinates on different sequences do not overlap
        assert!(parse_annotations("a\t1\t5\texon\nb\t1\t5\texon").is_ok());
    }

    #[test]
    fn write_then_parse() {
        let t = parse_annotations("c\t500\t600\tintron\nc\t10\t20\texon\n").unwrap();
        let mut buf = Vec::new();
        write_annotations(&t, &mut buf).unwrap();
        assert_eq!(
            parse_annotations(std::str::from_utf8(&buf).unwrap()).unwrap(),
            t
        );
    }
}

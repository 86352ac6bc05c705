use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{canonical_residue, NucleotideSequence, SequenceError};

/// Parses FASTA text into records, preserving record order.
///
/// Header lines start with `>`; the record id is the first whitespace
/// separated token after it. Sequence lines may wrap and may contain
/// whitespace. Lines starting with `;` are treated as comments.
pub fn parse_fasta<R: Read>(raw: R) -> Result<Vec<NucleotideSequence>, SequenceError> {
    let mut reader = BufReader::new(raw);
    let mut records = Vec::new();
    let mut current: Option<(String, Vec<u8>)> = None;
    let mut saw_content = false;
    let mut line = Vec::new();
    let mut lineno = 0usize;

    loop {
        line.clear();
        if reader.read_until(b'\n', &mut line)? == 0 {
            break;
        }
        lineno += 1;
        let text = trim_line_end(&line);
        if text.iter().all(|b| b.is_ascii_whitespace()) {
            continue;
        }
        saw_content = true;
        match text[0] {
            b'>' => {
                if let Some((id, residues)) = current.take() {
                    records.push(finish_record(id, residues)?);
                }
                let header = String::from_utf8_lossy(&text[1..]);
                let id = header.split_whitespace().next().unwrap_or("").to_string();
                current = Some((id, Vec::new()));
            }
            b';' => {}
            _ => {
                let Some((_, residues)) = current.as_mut() else {
                    return Err(SequenceError::MissingHeader(lineno));
                };
                for (col, &b) in text.iter().enumerate() {
                    if b.is_ascii_whitespace() {
                        continue;
                    }
                    match canonical_residue(b) {
                        Some(c) => residues.push(c),
                        None => {
                            return Err(SequenceError::InvalidCharacter {
                                line: lineno,
                                column: col + 1,
                                found: b as char,
                            })
                        }
                    }
                }
            }
        }
    }

    if let Some((id, residues)) = current.take() {
        records.push(finish_record(id, residues)?);
    }
    if !saw_content {
        return Err(SequenceError::EmptyInput);
    }
    Ok(records)
}

fn trim_line_end(line: &[u8]) -> &[u8] {
    let mut end = line.len();
    while end > 0 && matches!(line[end - 1], b'\n' | b'\r') {
        end -= 1;
    }
    &line[..end]
}

fn finish_record(id: String, residues: Vec<u8>) -> Result<NucleotideSequence, SequenceError> {
    if residues.is_empty() {
        return Err(SequenceError::EmptyRecord(id));
    }
    Ok(NucleotideSequence::from_canonical(id, residues))
}

pub fn read_fasta_file(path: impl AsRef<Path>) -> Result<Vec<NucleotideSequence>, SequenceError> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_fasta(file)
}

/// Writes records as FASTA with residues wrapped at `line_width` columns.
pub fn write_fasta<W: Write>(
    records: &[NucleotideSequence],
    mut out: W,
    line_width: usize,
) -> std::io::Result<()> {
    let width = line_width.max(1);
    for rec in records {
        writeln!(out, ">{}", rec.id())?;
        for chunk in rec.residues().chunks(width) {
            out.write_all(chunk)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

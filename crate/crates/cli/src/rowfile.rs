//! Plain-text row dumps.
//!
//! ```text
//! #V=4334
//! 1 1 0 1 3,17,402
//! 0 ? 1 0 5
//! ```
//!
//! Columns are `r_a a c y words`, separated by tabs (shown as spaces here),
//! with `?` for a missing treatment and the word positions comma separated
//! in increasing order.

use std::io::{self, BufRead, Write};

use causal_text_core::tabular::{Dataset, Provenance, TextLayout};

#[derive(Debug, thiserror::Error)]
pub enum RowFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] causal_text_core::Error),
}

fn bit(b: bool) -> char {
    if b {
        '1'
    } else {
        '0'
    }
}

pub fn write_rows<W: Write>(data: &Dataset, mut out: W) -> io::Result<()> {
    writeln!(out, "#V={}", data.vocab_size())?;
    let mut words = String::new();
    for row in data.rows() {
        words.clear();
        for (k, i) in row.text.iter().enumerate() {
            if k > 0 {
                words.push(',');
            }
            words.push_str(&i.to_string());
        }
        let a = row.a.map_or('?', bit);
        writeln!(out, "{}\t{}\t{}\t{}\t{}", bit(row.a.is_some()), a, bit(row.c), bit(row.y), words)?;
    }
    out.flush()
}

fn parse_bit(field: &str, line: usize) -> Result<bool, RowFileError> {
    match field {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(RowFileError::Parse {
            line,
            message: format!("expected 0 or 1, found {other:?}"),
        }),
    }
}

pub fn read_rows<R: BufRead>(input: R, provenance: Provenance, layout: TextLayout) -> Result<Dataset, RowFileError> {
    let mut lines = input.lines().enumerate();
    let vocab_size = match lines.next() {
        Some((_, header)) => {
            let header = header?;
            header
                .strip_prefix("#V=")
                .and_then(|v| v.trim().parse::<usize>().ok())
                .ok_or_else(|| RowFileError::Parse {
                    line: 1,
                    message: "missing #V=<vocab_size> header".into(),
                })?
        }
        None => {
            return Err(RowFileError::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    };
    let mut builder = Dataset::builder(vocab_size, provenance, layout);
    for (k, line) in lines {
        let n = k + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(RowFileError::Parse {
                line: n,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let observed = parse_bit(fields[0], n)?;
        let a = match fields[1] {
            "?" => None,
            f => Some(parse_bit(f, n)?),
        };
        if observed != a.is_some() {
            return Err(RowFileError::Parse {
                line: n,
                message: "r_a disagrees with the treatment column".into(),
            });
        }
        let words = if fields[4].is_empty() {
            Vec::new()
        } else {
            fields[4]
                .split(',')
                .map(|w| w.parse::<u32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| RowFileError::Parse {
                    line: n,
                    message: format!("bad word index: {e}"),
                })?
        };
        builder
            .push(a, parse_bit(fields[2], n)?, parse_bit(fields[3], n)?, None, words)
            .map_err(|e| RowFileError::Parse {
                line: n,
                message: e.to_string(),
            })?;
    }
    Ok(builder.finish())
}

//! Stream files.
//!
//! Line 1 is `#streampca-v1 d=<int> n=<int> split=<0|1>`; each following line
//! is one record of comma-separated floats: `x`, then `q` and `v` when
//! `split=1`. Floats are written in shortest round-trip form, so a save/load
//! cycle is exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::format_float;
use crate::stream_model::StreamRecord;
use crate::symmat::Vector;

const MAGIC: &str = "#streampca-v1";

pub fn write_stream<W: Write>(out: &mut W, d: usize, records: &[StreamRecord]) -> std::io::Result<()> {
    let split = !records.is_empty() && records.iter().all(StreamRecord::has_split);
    writeln!(out, "{MAGIC} d={d} n={} split={}", records.len(), u8::from(split))?;
    let mut line = String::new();
    for r in records {
        line.clear();
        let parts: Vec<&Vector> = if split {
            vec![r.x(), r.q().expect("split"), r.v().expect("split")]
        } else {
            vec![r.x()]
        };
        for (i, c) in parts.iter().flat_map(|v| v.iter()).enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format_float(*c));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Writes `records` to `path`. Records must all have dimension `d` and
/// finite entries; the `q`/`v` split is kept only if every record has one.
pub fn save_stream(path: &Path, d: usize, records: &[StreamRecord]) -> Result<()> {
    for (i, r) in records.iter().enumerate() {
        if r.dim() != d {
            return Err(Error::invalid(format!("record {i} has dimension {}, expected {d}", r.dim())));
        }
        if r.x().iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("record {i} has non-finite entries")));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_stream(&mut out, d, records)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

fn header_field(word: Option<&str>, name: &str) -> Result<usize> {
    word.and_then(|w| w.strip_prefix(name))
        .and_then(|w| w.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::parse(1, format!("malformed header: expected `{name}=<int>`")))
}

/// Stream header: `(d, n, split)`.
fn parse_header(line: &str) -> Result<(usize, usize, bool)> {
    let mut words = line.split_whitespace();
    if words.next() != Some(MAGIC) {
        return Err(Error::parse(1, format!("malformed header: expected `{MAGIC}`")));
    }
    let d = header_field(words.next(), "d")?;
    let n = header_field(words.next(), "n")?;
    let split = match header_field(words.next(), "split")? {
        0 => false,
        1 => true,
        other => return Err(Error::parse(1, format!("split must be 0 or 1, got {other}"))),
    };
    if words.next().is_some() {
        return Err(Error::parse(1, "malformed header: trailing fields"));
    }
    if d == 0 {
        return Err(Error::parse(1, "d must be at least 1"));
    }
    Ok((d, n, split))
}

/// Reads a stream; returns its dimension and records.
pub fn read_stream<R: BufRead>(input: R) -> Result<(usize, Vec<StreamRecord>)> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::parse(1, e.to_string()))?,
        None => return Err(Error::parse(1, "empty file")),
    };
    let (d, n, split) = parse_header(header.trim_end_matches('\r'))?;
    let arity = if split { 3 * d } else { d };
    let mut records = Vec::with_capacity(n.min(1 << 20));
    let mut values = Vec::with_capacity(arity);
    let mut trailing_blank = None;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            trailing_blank.get_or_insert(lineno);
            continue;
        }
        if let Some(blank) = trailing_blank {
            return Err(Error::parse(blank, "blank line inside the record body"));
        }
        if records.len() == n {
            return Err(Error::parse(lineno, format!("more than the {n} records declared in the header")));
        }
        values.clear();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("`{}` is not a number", field.trim())))?;
            if !v.is_finite() {
                return Err(Error::parse(lineno, format!("non-finite value `{}`", field.trim())));
            }
            values.push(v);
        }
        if values.len() != arity {
            return Err(Error::parse(
                lineno,
                format!("expected {arity} values (d={d}, split={}), found {}", u8::from(split), values.len()),
            ));
        }
        let x = Vector::from_column_slice(&values[..d]);
        let record = if split {
            let q = Vector::from_column_slice(&values[d..2 * d]);
            let v = Vector::from_column_slice(&values[2 * d..]);
            if (&q + &v) != x {
                return Err(Error::parse(lineno, "x differs from q + v"));
            }
            StreamRecord::from_parts(q, v)
        } else {
            StreamRecord::observed(x)
        };
        records.push(record);
    }
    if records.len() != n {
        return Err(Error::parse(
            records.len() + 2,
            format!("header declares {n} records, found {}", records.len()),
        ));
    }
    Ok((d, records))
}

pub fn load_stream(path: &Path) -> Result<(usize, Vec<StreamRecord>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_stream(BufReader::new(file))
}

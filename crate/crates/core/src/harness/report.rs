//! CSV reports.
//!
//! `curve_<learner>.csv` holds `n,avg_regret,avg_regret_stderr,alignment,rank_one_ok_rate`
//! and `summary.csv` holds
//! `learner,final_avg_regret,final_stderr,rank_one_error_rate,steps_per_sec`.
//! Absent values are empty fields; non-finite values are refused.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::experiment::RunResult;
use crate::harness::format_float;

pub const CURVE_HEADER: &str = "n,avg_regret,avg_regret_stderr,alignment,rank_one_ok_rate";
pub const SUMMARY_HEADER: &str = "learner,final_avg_regret,final_stderr,rank_one_error_rate,steps_per_sec";
pub const MERGED_HEADER: &str = "learner,n,avg_regret,avg_regret_stderr,alignment,rank_one_ok_rate";

fn field(value: Option<f64>, name: impl FnOnce() -> String) -> Result<String> {
    match value {
        None => Ok(String::new()),
        Some(v) if v.is_finite() => Ok(format_float(v)),
        Some(_) => Err(Error::Diagnostics { field: name() }),
    }
}

pub fn curve_file_name(learner: &str) -> String {
    format!("curve_{learner}.csv")
}

/// Renders every report file in memory as `(file name, contents)`.
pub fn render_report(result: &RunResult) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    let mut summary = format!("{SUMMARY_HEADER}\n");
    for l in &result.learners {
        let mut curve = format!("{CURVE_HEADER}\n");
        for p in &l.curve {
            let at = |col: &str| format!("{}.{col} at n={}", l.name, p.n);
            curve.push_str(&format!(
                "{},{},{},{},{}\n",
                p.n,
                field(Some(p.avg_regret), || at("avg_regret"))?,
                field(p.avg_regret_stderr, || at("avg_regret_stderr"))?,
                field(p.alignment, || at("alignment"))?,
                field(p.rank_one_ok_rate, || at("rank_one_ok_rate"))?,
            ));
        }
        files.push((curve_file_name(&l.name), curve));
        let col = |c: &str| format!("{}.{c}", l.name);
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            l.name,
            field(Some(l.final_avg_regret), || col("final_avg_regret"))?,
            field(l.final_stderr, || col("final_stderr"))?,
            field(l.rank_one_error_rate, || col("rank_one_error_rate"))?,
            field(l.steps_per_sec, || col("steps_per_sec"))?,
        ));
    }
    files.push(("summary.csv".to_string(), summary));
    Ok(files)
}

/// Writes one curve CSV per learner and `summary.csv` into `out_dir`.
/// Nothing is written if any value is non-finite.
pub fn write_report(result: &RunResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let files = render_report(result)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))
}

/// Concatenates the curve files listed in `in_dir/summary.csv` into one
/// long-format CSV with a leading `learner` column.
pub fn merge_report(in_dir: &Path, out: &Path) -> Result<()> {
    let summary_path = in_dir.join("summary.csv");
    let summary = read_lines(&summary_path)?;
    if summary.first().map(String::as_str) != Some(SUMMARY_HEADER) {
        return Err(Error::parse(1, format!("{}: unexpected header", summary_path.display())));
    }
    let mut merged = format!("{MERGED_HEADER}\n");
    for line in summary.iter().skip(1).filter(|l| !l.is_empty()) {
        let learner = line.split(',').next().unwrap_or_default();
        let curve_path = in_dir.join(curve_file_name(learner));
        let curve = read_lines(&curve_path)?;
        if curve.first().map(String::as_str) != Some(CURVE_HEADER) {
            return Err(Error::parse(1, format!("{}: unexpected header", curve_path.display())));
        }
        for (i, row) in curve.iter().enumerate().skip(1).filter(|(_, r)| !r.is_empty()) {
            if row.split(',').count() != 5 {
                return Err(Error::parse(i + 1, format!("{}: expected 5 columns", curve_path.display())));
            }
            merged.push_str(learner);
            merged.push(',');
            merged.push_str(row);
            merged.push('\n');
        }
    }
    let mut file = fs::File::create(out).map_err(|e| Error::io(out, e))?;
    file.write_all(merged.as_bytes()).map_err(|e| Error::io(out, e))
}

//! On-disk formats.
//!
//! * `ppg.csv`: header `time_s,value`, uniformly spaced times.
//! * `rpeaks.csv`: header `time_s`.
//! * `epochs.csv`: header `start_s,end_s,label`.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so
//! reading a file back yields bit-identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ppgproto_core::segmentation::Epoch;
use ppgproto_core::{EventTrain, UniformSeries};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

pub const PPG_FILE: &str = "ppg.csv";
pub const RPEAKS_FILE: &str = "rpeaks.csv";
pub const EPOCHS_FILE: &str = "epochs.csv";
pub const TRUTH_FILE: &str = "truth.json";

/// Largest deviation of a PPG time step from the mean step, relative.
const UNIFORM_TOLERANCE: f64 = 1e-3;

pub fn num(v: f64) -> String {
    format!("{v}")
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let found = reader.headers().map_err(|e| CliError::io(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CliError::io(
            path,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    reader
        .records()
        .map(|r| r.map_err(|e| CliError::io(path, e)))
        .collect()
}

fn field(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<f64> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(i).unwrap_or("");
    let v: f64 = raw
        .parse()
        .map_err(|_| CliError::io(path, format!("line {line}: `{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::io(path, format!("line {line}: non-finite value")));
    }
    Ok(v)
}

pub fn read_ppg(path: &Path) -> Result<UniformSeries> {
    let rows = read_table(path, &["time_s", "value"])?;
    if rows.len() < 2 {
        return Err(CliError::io(path, "need at least two samples"));
    }
    let mut times = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for r in &rows {
        times.push(field(path, r, 0)?);
        values.push(field(path, r, 1)?);
    }
    let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(step > 0.0)
        || times
            .windows(2)
            .any(|w| ((w[1] - w[0]) - step).abs() > UNIFORM_TOLERANCE * step)
    {
        return Err(CliError::io(
            path,
            "time stamps are not uniformly spaced and increasing",
        ));
    }
    UniformSeries::new(times[0], 1.0 / step, values).map_err(|e| CliError::io(path, e))
}

pub fn read_rpeaks(path: &Path) -> Result<EventTrain> {
    let times = read_table(path, &["time_s"])?
        .iter()
        .map(|r| field(path, r, 0))
        .collect::<Result<Vec<f64>>>()?;
    EventTrain::new(times).map_err(|e| CliError::io(path, e))
}

pub fn read_epochs(path: &Path) -> Result<Vec<Epoch>> {
    read_table(path, &["start_s", "end_s", "label"])?
        .iter()
        .map(|r| {
            let epoch = Epoch {
                start: field(path, r, 0)?,
                end: field(path, r, 1)?,
                label: r.get(2).unwrap_or("").to_string(),
            };
            if epoch.label.is_empty() || !(epoch.start < epoch.end) {
                return Err(CliError::io(
                    path,
                    format!(
                        "bad epoch [{}, {}) `{}`",
                        epoch.start, epoch.end, epoch.label
                    ),
                ));
            }
            Ok(epoch)
        })
        .collect()
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// CSV with a header and one row per item; cells are pre-formatted.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|c| quote(&c)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

pub fn write_ppg(path: &Path, ppg: &UniformSeries) -> Result<()> {
    let mut out = String::from("time_s,value\n");
    for (j, v) in ppg.values().iter().enumerate() {
        let _ = writeln!(out, "{},{}", num(ppg.time_at(j)), num(*v));
    }
    write_text(path, &out)
}

pub fn write_rpeaks(path: &Path, rpeaks: &EventTrain) -> Result<()> {
    write_csv(path, &["time_s"], rpeaks.times().iter().map(|t| [num(*t)]))
}

pub fn write_epochs(path: &Path, epochs: &[Epoch]) -> Result<()> {
    write_csv(
        path,
        &["start_s", "end_s", "label"],
        epochs
            .iter()
            .map(|e| [num(e.start), num(e.end), e.label.clone()]),
    )
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}

/// Files under `inputs` whose name satisfies `keep`. Directories are walked
/// recursively; the result is sorted and deduplicated.
pub fn collect_files(inputs: &[PathBuf], keep: &dyn Fn(&str) -> bool) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, keep: &dyn Fn(&str) -> bool, out: &mut Vec<PathBuf>) -> Result<()> {
        for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
            let path = entry.map_err(|e| CliError::io(dir, e))?.path();
            if path.is_dir() {
                walk(&path, keep, out)?;
            } else if path.file_name().and_then(|n| n.to_str()).is_some_and(keep) {
                out.push(path);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            walk(input, keep, &mut out)?;
        } else if input.is_file() {
            out.push(input.clone());
        } else {
            return Err(CliError::io(input, "no such file or directory"));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Subject directories: each input that holds a `ppg.csv`, or else its
/// immediate subdirectories that do.
pub fn subject_dirs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if !input.is_dir() {
            return Err(CliError::io(input, "not a directory"));
        }
        if input.join(PPG_FILE).is_file() {
            out.push(input.clone());
            continue;
        }
        let mut found: Vec<PathBuf> = fs::read_dir(input)
            .map_err(|e| CliError::io(input, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(PPG_FILE).is_file())
            .collect();
        if found.is_empty() {
            return Err(CliError::io(
                input,
                format!("no {PPG_FILE} here or in any subdirectory"),
            ));
        }
        found.sort();
        out.append(&mut found);
    }
    Ok(out)
}

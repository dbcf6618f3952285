use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Dataset, PointSet};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Delimiter {
    /// Tab if the first non-empty line contains one, comma otherwise.
    #[default]
    Auto,
    Byte(u8),
}

/// A line that did not yield a point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RejectedRow {
    /// 1-based line number.
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedPoints<T> {
    pub points: PointSet<T>,
    pub header_skipped: bool,
    pub rejected: Vec<RejectedRow>,
}

fn parse_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn sniff(head: &[u8]) -> u8 {
    let line = head
        .split(|&b| b == b'\n')
        .find(|l| !l.iter().all(u8::is_ascii_whitespace))
        .unwrap_or(&[]);
    if line.contains(&b'\t') {
        b'\t'
    } else {
        b','
    }
}

/// Reads the first `dim` columns of every row of a delimiter-separated file.
///
/// A first line whose leading fields are not all numeric is taken as a
/// header. Later rows with too few fields, non-numeric or non-finite values
/// are rejected and reported with their line numbers.
pub fn load_points<T: Scalar>(path: &Path, dim: usize, delimiter: Delimiter) -> Result<LoadedPoints<T>> {
    if dim < 2 {
        return Err(Error::TooFewDimensions(dim));
    }
    let mut reader = BufReader::new(File::open(path)?);
    let delim = match delimiter {
        Delimiter::Byte(b) => b,
        Delimiter::Auto => sniff(reader.fill_buf()?),
    };
    parse(reader, path, dim, delim)
}

fn parse<T: Scalar, R: Read>(reader: R, path: &Path, dim: usize, delim: u8) -> Result<LoadedPoints<T>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .delimiter(delim)
        .from_reader(reader);
    let mut points = PointSet::new(dim);
    let mut rejected = Vec::new();
    let mut header_skipped = false;
    let mut short_rows = 0usize;
    let mut first = true;
    let mut row = Vec::with_capacity(dim);
    for record in csv.records() {
        let record = record.map_err(|e| parse_error(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let was_first = std::mem::replace(&mut first, false);
        row.clear();
        let mut reason = None;
        let mut non_numeric = false;
        for (i, field) in record.iter().take(dim).enumerate() {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(T::of(v)),
                Ok(_) => {
                    reason = Some(format!("column {} is not finite", i + 1));
                    break;
                }
                Err(_) => {
                    non_numeric = true;
                    reason = Some(format!("column {} is not numeric: {field:?}", i + 1));
                    break;
                }
            }
        }
        if reason.is_none() && row.len() < dim {
            short_rows += 1;
            reason = Some(format!("expected {dim} fields, found {}", record.len()));
        }
        match reason {
            None => points.try_push(&row)?,
            Some(_) if was_first && non_numeric => header_skipped = true,
            Some(reason) => rejected.push(RejectedRow { line, reason }),
        }
    }
    if points.is_empty() {
        if short_rows > 0 {
            return Err(Error::DimensionMismatch { expected: dim, found: 0 });
        }
        return Err(parse_error(path, "no valid points"));
    }
    if !rejected.is_empty() {
        log::warn!("{}: rejected {} rows", path.display(), rejected.len());
    }
    Ok(LoadedPoints {
        points,
        header_skipped,
        rejected,
    })
}

/// Loads a point file as a dataset, returning the rejected rows alongside.
pub fn load_dataset<T: Scalar>(
    id: u64,
    name: impl Into<String>,
    path: &Path,
    dim: usize,
) -> Result<(Dataset<T>, Vec<RejectedRow>)> {
    let loaded = load_points(path, dim, Delimiter::Auto)?;
    Ok((Dataset::new(id, name, loaded.points)?, loaded.rejected))
}

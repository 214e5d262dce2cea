//! CSV input: samples in several layouts and single-column label files.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::density::Sample;
use crate::error::{Error, Result};
use crate::sphere::{lonlat_to_cartesian, normalize, spherical_to_cartesian, UnitVector};

const UNIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    /// Hyperspherical angles in radians, azimuth first; one column for the circle.
    AnglesRadians,
    /// Longitude and latitude in degrees.
    LonlatDegrees,
    /// Cartesian rows that already have unit norm.
    UnitRows,
    /// Arbitrary nonzero rows, projected onto the sphere.
    RawRows,
}

impl SampleFormat {
    pub const ALL: [SampleFormat; 4] =
        [SampleFormat::AnglesRadians, SampleFormat::LonlatDegrees, SampleFormat::UnitRows, SampleFormat::RawRows];

    pub fn id(&self) -> &'static str {
        match self {
            SampleFormat::AnglesRadians => "angles-radians",
            SampleFormat::LonlatDegrees => "lonlat-degrees",
            SampleFormat::UnitRows => "unit-rows",
            SampleFormat::RawRows => "raw-rows",
        }
    }
}

impl FromStr for SampleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SampleFormat::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sample format '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadOptions {
    pub format: SampleFormat,
    /// Zero-based columns replaced by their natural logarithm (raw rows only).
    pub log_cols: Vec<usize>,
}

impl LoadOptions {
    pub fn new(format: SampleFormat) -> Self {
        LoadOptions { format, log_cols: Vec::new() }
    }
}

/// Numeric records with their 1-based line numbers. A first line that does
/// not parse as numbers is taken as a header.
fn numeric_records<R: Read>(reader: R) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::Parse { line, message: e.to_string() }
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(idx + 1);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => out.push((line, v)),
            Err(_) if idx == 0 => continue,
            Err(e) => return Err(Error::Parse { line, message: e.to_string() }),
        }
    }
    Ok(out)
}

pub fn parse_sample<R: Read>(reader: R, options: &LoadOptions) -> Result<Sample> {
    let records = numeric_records(reader)?;
    if records.is_empty() {
        return Err(Error::EmptySample);
    }
    if !options.log_cols.is_empty() && options.format != SampleFormat::RawRows {
        return Err(Error::InvalidArgument("log columns apply to raw rows only".into()));
    }
    let mut points = Vec::with_capacity(records.len());
    let mut zero_rows = Vec::new();
    for (row, (line, mut v)) in records.into_iter().enumerate() {
        let bad = |message: String| Error::Parse { line, message };
        let p: UnitVector = match options.format {
            SampleFormat::AnglesRadians => spherical_to_cartesian(&v).map_err(|e| bad(e.to_string()))?,
            SampleFormat::LonlatDegrees => {
                if v.len() != 2 {
                    return Err(bad(format!("expected 2 columns, found {}", v.len())));
                }
                lonlat_to_cartesian(v[0], v[1]).map_err(|e| bad(e.to_string()))?
            }
            SampleFormat::UnitRows => {
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !((norm - 1.0).abs() <= UNIT_TOL) {
                    return Err(bad(format!("row norm {norm} is not 1")));
                }
                normalize(&v).map_err(|e| bad(e.to_string()))?
            }
            SampleFormat::RawRows => {
                for &c in &options.log_cols {
                    let x = v.get_mut(c).ok_or_else(|| bad(format!("no column {c} to log-transform")))?;
                    if !(*x > 0.0) {
                        return Err(bad(format!("cannot take the log of {x} in column {c}")));
                    }
                    *x = x.ln();
                }
                match normalize(&v) {
                    Ok(p) => p,
                    Err(Error::ZeroVector) => {
                        zero_rows.push(row);
                        continue;
                    }
                    Err(e) => return Err(bad(e.to_string())),
                }
            }
        };
        points.push(p);
    }
    if !zero_rows.is_empty() {
        return Err(Error::ZeroRows(zero_rows));
    }
    Sample::new(points)
}

pub fn load_sample(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Sample> {
    parse_sample(File::open(path)?, options)
}

/// Single column of positive integer labels.
pub fn parse_labels<R: Read>(reader: R) -> Result<Vec<usize>> {
    let records = numeric_records(reader)?;
    records
        .into_iter()
        .map(|(line, v)| match v.as_slice() {
            [x] if x.fract() == 0.0 && *x >= 1.0 && *x < usize::MAX as f64 => Ok(*x as usize),
            _ => Err(Error::Parse { line, message: "expected one positive integer label".into() }),
        })
        .collect()
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    parse_labels(File::open(path)?)
}

pub fn write_labels<W: Write>(mut w: W, labels: &[usize]) -> Result<()> {
    for l in labels {
        writeln!(w, "{l}")?;
    }
    Ok(())
}

//! Series files: CSV with header `t,re,im,abs` or a JSON array of records.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::closed_form::DecoherenceSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Record {
    t: f64,
    re: f64,
    im: f64,
    abs: f64,
}

/// 17 significant digits: enough for every `f64` to round-trip.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn records(series: &DecoherenceSeries) -> impl Iterator<Item = Record> + '_ {
    series.times.iter().zip(&series.values).map(|(&t, v)| Record {
        t,
        re: v.re,
        im: v.im,
        abs: v.norm(),
    })
}

pub fn write_csv<W: Write>(series: &DecoherenceSeries, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["t", "re", "im", "abs"])?;
    for r in records(series) {
        w.write_record([r.t, r.re, r.im, r.abs].map(format_number))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(series: &DecoherenceSeries, mut out: W) -> Result<()> {
    let rows: Vec<Record> = records(series).collect();
    serde_json::to_writer(&mut out, &rows)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_series<W: Write>(series: &DecoherenceSeries, format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(series, out),
        Format::Json => write_json(series, out),
    }
}

/// Write to `path`; a partially written file is removed on failure.
pub fn write_series_file(series: &DecoherenceSeries, format: Format, path: &Path) -> Result<()> {
    let result = File::create(path)
        .map_err(Error::from)
        .and_then(|f| {
            let mut w = BufWriter::new(f);
            write_series(series, format, &mut w)?;
            w.flush()?;
            Ok(())
        });
    if result.is_err() {
        let _ = std::fs::remove_file(path);
    }
    result
}

/// Read a CSV written by [`write_csv`].
pub fn read_csv(path: &Path, label: &str) -> Result<DecoherenceSeries> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "re", "im", "abs"] {
        return Err(Error::invalid(format!("unexpected CSV header {headers:?}")));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|e| Error::invalid(format!("bad number {:?}: {e}", &record[i])))
        };
        times.push(field(0)?);
        values.push(Complex64::new(field(1)?, field(2)?));
    }
    DecoherenceSeries::new(label, times, values)
}

/// Read a JSON file written by [`write_json`].
pub fn read_json(path: &Path, label: &str) -> Result<DecoherenceSeries> {
    let rows: Vec<Record> = serde_json::from_reader(File::open(path)?)?;
    DecoherenceSeries::new(
        label,
        rows.iter().map(|r| r.t).collect(),
        rows.iter().map(|r| Complex64::new(r.re, r.im)).collect(),
    )
}

//! CSV and JSON artifacts. Numbers are written in decimal scientific notation
//! with 12 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::scalar::{to_f64, Real};
use crate::wigner::WignerGrid;

pub fn format_number(v: f64) -> String {
    format!("{v:.11e}")
}

/// Writes `header` then one row per entry of `rows`.
pub fn write_csv<P: AsRef<Path>>(path: P, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| format_number(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV with a header row.
pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| crate::Error::Malformed(format!("row {}: {f:?}: {e}", line + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_marginal_csv<P: AsRef<Path>>(path: P, x: &[f64], density: &[f64]) -> Result<()> {
    write_csv(
        path,
        &["x [quadrature units]", "density [1/quadrature unit]"],
        x.iter().zip(density).map(|(&a, &b)| vec![a, b]),
    )
}

pub fn write_wigner_csv<T: Real, P: AsRef<Path>>(path: P, w: &WignerGrid<T>) -> Result<()> {
    let np = w.p_axis().len();
    write_csv(
        path,
        &["x [quadrature units]", "p [quadrature units]", "W [1/quadrature unit^2]"],
        (0..w.values().len()).map(|k| {
            vec![
                to_f64(w.x_axis().point(k / np)),
                to_f64(w.p_axis().point(k % np)),
                to_f64(w.values()[k]),
            ]
        }),
    )
}

pub fn write_json<P: AsRef<Path>, S: Serialize>(path: P, value: &S) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

//! Plain comma-separated formats: observation files, square matrices and
//! chain traces. Floats are written with Rust's shortest round-trip
//! formatting, so a write followed by a read is lossless.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::gibbs::ChainTrace;
use crate::matrix::Matrix;

/// Symmetry tolerance applied when reading a covariance matrix.
pub const MATRIX_SYMMETRY_TOLERANCE: f64 = 1e-9;

fn read_rows<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!("column {}: '{cell}' is not a finite number", col + 1),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads an `n × p` observation matrix: one observation per row, no header.
pub fn read_data_csv<R: Read>(reader: R) -> Result<Matrix> {
    let rows = read_rows(reader)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no observations".into(),
        });
    }
    Matrix::from_rows(&rows)
}

/// Reads a square symmetric matrix; asymmetry up to
/// [`MATRIX_SYMMETRY_TOLERANCE`] is averaged away.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<Matrix> {
    let m = read_data_csv(reader)?;
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    let asym = m.asymmetry();
    if asym > MATRIX_SYMMETRY_TOLERANCE * m.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(m.symmetrized())
}

pub fn write_matrix_csv<W: Write>(m: &Matrix, mut out: W) -> Result<()> {
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn trace_csv_header(p: usize) -> String {
    let mut h = String::from("iter,beta,accept");
    for j in 1..=p {
        h.push_str(&format!(",sigma_diag_{j}"));
    }
    h
}

/// One line per retained iteration: `iter,beta,accept,sigma_diag_1..p`.
pub fn write_trace_csv<W: Write>(trace: &ChainTrace, mut out: W) -> Result<()> {
    writeln!(out, "{}", trace_csv_header(trace.dim()))?;
    for r in &trace.records {
        write!(out, "{},{},{}", r.iter, r.beta, u8::from(r.accepted))?;
        for v in &r.sigma_diag {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

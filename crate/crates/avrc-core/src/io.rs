//! Matrix/vector CSV files.
//!
//! Format: a first line `rows,cols`, then one comma-separated line per row.
//! Floats are written with 17 significant digits so a write/read round trip
//! reproduces every `f64` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Format a float for CSV output; non-finite values use the literal tokens
/// `inf`, `-inf` and `nan`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

/// Parse a float, accepting the tokens produced by [`format_float`].
pub fn parse_float(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        t => t
            .parse::<f64>()
            .map_err(|_| Error::Data(format!("cannot parse '{t}' as a number"))),
    }
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{},{}", m.nrows(), m.ncols())?;
    let mut line = String::new();
    for i in 0..m.nrows() {
        line.clear();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format_float(m[(i, j)]));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty file", path.display())))??;
    let dims: Vec<&str> = header.trim().split(',').collect();
    if dims.len() != 2 {
        return Err(Error::Data(format!(
            "{}: header must be 'rows,cols', got '{header}'",
            path.display()
        )));
    }
    let rows: usize = dims[0]
        .parse()
        .map_err(|_| Error::Data(format!("{}: bad row count '{}'", path.display(), dims[0])))?;
    let cols: usize = dims[1]
        .parse()
        .map_err(|_| Error::Data(format!("{}: bad column count '{}'", path.display(), dims[1])))?;
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        let line = lines.next().ok_or_else(|| {
            Error::Data(format!("{}: expected {rows} data rows, found {i}", path.display()))
        })??;
        let mut fields = line.split(',');
        for j in 0..cols {
            let field = fields.next().ok_or_else(|| {
                Error::Data(format!("{}: row {} has fewer than {cols} columns", path.display(), i + 1))
            })?;
            m[(i, j)] = parse_float(field).map_err(|_| {
                Error::Data(format!(
                    "{}: row {}, column {}: cannot parse '{field}'",
                    path.display(),
                    i + 1,
                    j + 1
                ))
            })?;
        }
        if fields.next().is_some() {
            return Err(Error::Data(format!(
                "{}: row {} has more than {cols} columns",
                path.display(),
                i + 1
            )));
        }
    }
    Ok(m)
}

/// Vectors are stored as single-column matrices.
pub fn write_vector_csv(path: &Path, v: &DVector<f64>) -> Result<()> {
    write_matrix_csv(path, &DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
}

pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix_csv(path)?;
    if m.ncols() != 1 {
        return Err(Error::Data(format!(
            "{}: expected a single-column vector file, got {} columns",
            path.display(),
            m.ncols()
        )));
    }
    Ok(DVector::from_column_slice(m.column(0).as_slice()))
}

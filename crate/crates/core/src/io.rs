//! CSV ingestion.
//!
//! Point files have a header row and one observation per row; matrix files
//! are headerless, n rows of n comma-separated values.

use std::io::Read;
use std::path::Path;

use crate::distances::PointSet;
use crate::error::{Error, Result};

fn parse_cell(raw: &str, row: usize, col: usize) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        Error::Parse(format!(
            "row {}, column {}: '{}' is not a number",
            row + 1,
            col + 1,
            raw
        ))
    })
}

/// Reads a headerless square matrix. Squareness is checked later by
/// validation so that the error names the offending row.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, cell)| parse_cell(cell, i, j))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty("matrix file"));
    }
    Ok(rows)
}

pub fn read_matrix_file(path: &Path) -> Result<Vec<Vec<f64>>> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_matrix_csv(f)
}

/// Reads a point file with a header row, keeping `columns` (by name, in the
/// given order) or every column when `columns` is `None`.
pub fn read_points_csv<R: Read>(reader: R, columns: Option<&[String]>) -> Result<PointSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let selected: Vec<usize> = match columns {
        None => (0..header.len()).collect(),
        Some(names) => {
            if names.is_empty() {
                return Err(Error::InvalidConfig("at least one column must be selected".into()));
            }
            names
                .iter()
                .map(|name| {
                    header
                        .iter()
                        .position(|h| h == name)
                        .ok_or_else(|| Error::Parse(format!("column '{name}' not found in header")))
                })
                .collect::<Result<_>>()?
        }
    };
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = selected
            .iter()
            .map(|&j| {
                let cell = rec
                    .get(j)
                    .ok_or_else(|| Error::Parse(format!("row {} has no column {}", i + 1, j + 1)))?;
                parse_cell(cell, i, j)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    PointSet::new(rows)
}

pub fn read_points_file(path: &Path, columns: Option<&[String]>) -> Result<PointSet> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_points_csv(f, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip() {
        let rows = read_matrix_csv("0,1\n1, 0\n".as_bytes()).unwrap();
        assert_eq!(rows, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn matrix_bad_cell() {
        let err = read_matrix_csv("0,x\n1,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse(msg) if msg.contains("row 1, column 2")));
    }

    #[test]
    fn points_with_selection() {
        let csv = "a,b,c\n1,2,3\n4,5,6\n";
        let p = read_points_csv(csv.as_bytes(), None).unwrap();
        assert_eq!(p.dim(), 3);
        let cols = vec!["c".to_string(), "a".to_string()];
        let p = read_points_csv(csv.as_bytes(), Some(&cols)).unwrap();
        assert_eq!(p.point(1), &[6.0, 4.0]);
        let cols = vec!["z".to_string()];
        assert!(read_points_csv(csv.as_bytes(), Some(&cols)).is_err());
    }

    #[test]
    fn points_empty_body() {
        assert!(matches!(read_points_csv("a\n".as_bytes(), None), Err(Error::Empty(_))));
    }
}

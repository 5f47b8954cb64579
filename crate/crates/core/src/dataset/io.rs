//! Plain-text formats: dense matrices (CSV/TSV), label files and
//! constraint files.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Constraint, ConstraintKind, ConstraintSet, DataMatrix, Labels};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// One row per feature, one column per sample.
    #[default]
    RowsAreFeatures,
    /// One row per sample.
    RowsAreSamples,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn is_number(cell: &str) -> bool {
    cell.trim().parse::<f64>().is_ok()
}

/// Reads a numeric CSV or TSV file. The delimiter is a tab when the first
/// line contains one, otherwise a comma. A leading header row and/or
/// header column is detected when it is entirely non-numeric.
pub fn load_matrix<T: Real>(
    path: impl AsRef<Path>,
    orientation: Orientation,
) -> Result<DataMatrix<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let first_line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let delimiter = if first_line.contains('\t') {
        b'\t'
    } else {
        b','
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .delimiter(delimiter)
        .from_reader(text.as_bytes());

    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        rows.push(rec.iter().map(str::to_owned).collect());
    }
    if rows.is_empty() {
        return Err(Error::InvalidData(format!("{}: no data", path.display())));
    }

    let header_row = {
        let r = &rows[0];
        let tail = if r.len() > 1 { &r[1..] } else { &r[..] };
        tail.iter().all(|c| !is_number(c))
    };
    let body_start = usize::from(header_row);
    let header_col = rows.len() > body_start
        && rows[body_start..]
            .iter()
            .all(|r| !r.is_empty() && !is_number(&r[0]))
        && rows[body_start].len() > 1;
    let col_start = usize::from(header_col);

    let body = &rows[body_start..];
    if body.is_empty() {
        return Err(Error::InvalidData(format!(
            "{}: header without data rows",
            path.display()
        )));
    }
    let width = body[0].len() - col_start;
    let mut cells = Vec::with_capacity(body.len() * width);
    for (r, row) in body.iter().enumerate() {
        let file_row = r + body_start + 1;
        if row.len() - col_start != width {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row: file_row,
                found: row.len(),
                expected: width + col_start,
            });
        }
        for (c, cell) in row[col_start..].iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::ParseCell {
                path: path.to_path_buf(),
                row: file_row,
                col: c + col_start + 1,
                cell: cell.clone(),
            })?;
            cells.push(T::lit(v));
        }
    }

    let row_names: Option<Vec<String>> =
        header_col.then(|| body.iter().map(|r| r[0].clone()).collect());
    let col_names: Option<Vec<String>> =
        header_row.then(|| rows[0][rows[0].len() - width..].to_vec());

    let file_matrix = DMatrix::from_row_slice(body.len(), width, &cells);
    let (values, features, samples) = match orientation {
        Orientation::RowsAreFeatures => (file_matrix, row_names, col_names),
        Orientation::RowsAreSamples => (file_matrix.transpose(), col_names, row_names),
    };
    DataMatrix::new(values)?.with_names(features, samples)
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp: PathBuf = path.with_file_name(format!(".{file_name}.tmp"));
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Dense CSV, no header, full precision.
pub fn write_matrix<T: Real>(path: impl AsRef<Path>, m: &DMatrix<T>) -> Result<()> {
    let mut out = String::with_capacity(m.len() * 12);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:e}", m[(r, c)]));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// One one-based cluster id per line.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Labels> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut ids = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let id: usize = line.parse().map_err(|_| Error::Format {
            path: path.to_path_buf(),
            line: k + 1,
            message: format!("expected a positive integer label, found {line:?}"),
        })?;
        if id == 0 {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line: k + 1,
                message: "labels are one-based".into(),
            });
        }
        ids.push(id);
    }
    Labels::from_one_based(&ids)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &Labels) -> Result<()> {
    let mut out = String::new();
    for id in labels.to_one_based() {
        out.push_str(&id.to_string());
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// `i j ML` or `i j CL` per line, zero-based indices. Blank lines and
/// `#` comments are ignored.
pub fn load_constraints(path: impl AsRef<Path>, n_points: usize) -> Result<ConstraintSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut pairs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            line: k + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected `i j ML|CL`, found {line:?}")));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad index {:?}", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| bad(format!("bad index {:?}", fields[1])))?;
        let kind = match fields[2].to_ascii_uppercase().as_str() {
            "ML" => ConstraintKind::MustLink,
            "CL" => ConstraintKind::CannotLink,
            other => return Err(bad(format!("unknown constraint kind {other:?}"))),
        };
        pairs.push(Constraint { i, j, kind });
    }
    ConstraintSet::new(n_points, pairs)
}

pub fn write_constraints(path: impl AsRef<Path>, cs: &ConstraintSet) -> Result<()> {
    let mut out = String::new();
    for c in cs.iter() {
        out.push_str(&format!("{} {} {}\n", c.i, c.j, c.kind.tag()));
    }
    write_atomic(path, out.as_bytes())
}

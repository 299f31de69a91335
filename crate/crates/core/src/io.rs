//! File formats: complex matrices as JSON pairs or CSV cells, point lists,
//! and atomic writes.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CohError, Result};
use crate::kernel::Point;
use crate::linalg::{c, CMat};

/// A complex matrix in JSON: rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JsonMatrix(pub Vec<Vec<[f64; 2]>>);

impl JsonMatrix {
    pub fn from_matrix(m: &CMat) -> Self {
        JsonMatrix(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        )
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, |r| r.len());
        if self.0.iter().any(|r| r.len() != cols) {
            return Err(CohError::Config("matrix rows have unequal lengths".into()));
        }
        Ok(CMat::from_fn(rows, cols, |i, j| c(self.0[i][j][0], self.0[i][j][1])))
    }
}

/// Shortest decimal form that reads back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // normalizes -0.0 so payloads do not depend on the sign of zero
        "0".to_string()
    } else {
        format!("{x:?}")
    }
}

/// Row-major CSV, one `re,im` pair of columns per entry.
pub fn matrix_to_csv(m: &CMat) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols())
            .map(|j| format!("{},{}", fmt_f64(m[(i, j)].re), fmt_f64(m[(i, j)].im)))
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<CMat> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CohError::Config(format!("csv line {}: {e}", k + 1)))?;
        if vals.len() % 2 != 0 {
            return Err(CohError::Config(format!("csv line {}: odd column count", k + 1)));
        }
        rows.push(vals);
    }
    let cols = rows.first().map_or(0, |r| r.len() / 2);
    if rows.iter().any(|r| r.len() != 2 * cols) {
        return Err(CohError::Config("csv rows have unequal lengths".into()));
    }
    Ok(CMat::from_fn(rows.len(), cols, |i, j| c(rows[i][2 * j], rows[i][2 * j + 1])))
}

/// Table with a header row; numbers formatted by [`fmt_f64`].
pub fn table_to_csv(header: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&x| fmt_f64(x)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn read_points(path: &Path) -> Result<Vec<Point>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CohError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CohError::Config(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| CohError::Io(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes).map_err(|e| CohError::Io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CohError::Io(format!("{}: {e}", path.display()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cr;

    #[test]
    fn csv_round_trip() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, -0.5), cr(0.1), c(1e-300, 3.0), c(-2.0, 0.0)]);
        let text = matrix_to_csv(&m);
        assert_eq!(text.lines().next().unwrap(), "1.0,-0.5,0.1,0");
        assert_eq!(matrix_from_csv(&text).unwrap(), m);
    }

    #[test]
    fn json_round_trip() {
        let m = CMat::from_row_slice(1, 2, &[c(1.0, 2.0), c(3.0, 4.0)]);
        let j = serde_json::to_string(&JsonMatrix::from_matrix(&m)).unwrap();
        assert_eq!(j, "[[[1.0,2.0],[3.0,4.0]]]");
        let back: JsonMatrix = serde_json::from_str(&j).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"a").unwrap();
        write_atomic(&p, b"b").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"b");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

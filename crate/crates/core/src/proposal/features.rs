use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RAFEAT01";

/// Dense row-major feature matrix, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::Argument(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Argument(format!("row {i} has {} columns, expected {cols}", rows[i].len())));
        }
        let n = rows.len();
        FeatureMatrix::new(n, cols, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|x| !x.is_finite()) {
            Some(p) => Err(Error::validation(
                format!("features[{}][{}]", p / self.cols.max(1), p % self.cols.max(1)),
                "non-finite value",
            )),
            None => Ok(()),
        }
    }

    /// Binary layout: 8-byte magic `RAFEAT01`, row count and column count as
    /// little-endian u64, then `rows * cols` little-endian f64 values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::schema("binary features", 1, 0, msg);
        if bytes.len() < 24 || &bytes[..8] != MAGIC {
            return Err(bad("missing RAFEAT01 header"));
        }
        let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
        let rows = usize::try_from(word(8)).map_err(|_| bad("row count overflow"))?;
        let cols = usize::try_from(word(16)).map_err(|_| bad("column count overflow"))?;
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| bad("matrix size overflow"))?;
        let body = &bytes[24..];
        if body.len() != expected {
            return Err(bad(&format!("expected {expected} data bytes, found {}", body.len())));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        FeatureMatrix::new(rows, cols, data)
    }

    /// Parses headerless comma-separated rows.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::schema("csv features", i + 1, 0, e.to_string()))?;
            let row = record
                .iter()
                .enumerate()
                .map(|(j, field)| {
                    field
                        .parse::<f64>()
                        .map_err(|e| Error::schema("csv features", i + 1, j + 1, format!("{field:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        FeatureMatrix::from_rows(rows)
    }
}

/// Loads a feature matrix, choosing the binary layout when the file starts
/// with the magic header and CSV otherwise.
pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        FeatureMatrix::from_bytes(&bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::schema(path.display().to_string(), 1, 0, "not UTF-8 CSV"))?;
        FeatureMatrix::from_csv_str(&text)
    }
}

//! Dense row-major feature matrices and their two file encodings.
//!
//! Binary layout (`EMB1`), all little-endian:
//!
//! ```text
//! magic   4 bytes  "EMB1"
//! version u32      1
//! rows    u64
//! dim     u32
//! values  rows × dim f32, row-major
//! ```
//!
//! The CSV form has one row per molecule and an optional header line.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";
pub const EMB_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row} has {got} values, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("row {row}, column {col}: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        col: usize,
        value: String,
    },
    #[error("row {row}, column {col}: non-finite value")]
    NonFinite { row: usize, col: usize },
    #[error("not an EMB1 file (bad magic)")]
    BadMagic,
    #[error("unsupported EMB version {0}")]
    UnsupportedVersion(u32),
    #[error("file ends after {got} of {expected} values")]
    Truncated { expected: u64, got: u64 },
    #[error("matrix has no rows")]
    Empty,
    #[error("matrix has zero columns")]
    ZeroWidth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "data length must equal rows × cols"
        );
        FeatureMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        FeatureMatrix {
            rows: rows.len(),
            cols,
            data,
        }
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

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// First offending (row, col) holding NaN or ±∞.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| (p / self.cols.max(1), p % self.cols.max(1)))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), MatrixError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((0..self.cols).map(|j| format!("f{j}")))?;
        for i in 0..self.rows {
            w.write_record(self.row(i).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads numeric CSV. A first line that does not parse as numbers is
    /// treated as a header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, MatrixError> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut data = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for (line, record) in r.records().enumerate() {
            let record = record?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let parsed: Vec<Result<f64, _>> = record.iter().map(str::parse::<f64>).collect();
            if line == 0 && parsed.iter().any(Result::is_err) {
                continue;
            }
            let expected = *cols.get_or_insert(record.len());
            if record.len() != expected {
                return Err(MatrixError::RaggedRows {
                    row: rows,
                    expected,
                    got: record.len(),
                });
            }
            for (col, (value, raw)) in parsed.into_iter().zip(record.iter()).enumerate() {
                let v = value.map_err(|_| MatrixError::Parse {
                    row: rows,
                    col,
                    value: raw.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(MatrixError::NonFinite { row: rows, col });
                }
                data.push(v);
            }
            rows += 1;
        }
        let cols = cols.ok_or(MatrixError::Empty)?;
        if cols == 0 {
            return Err(MatrixError::ZeroWidth);
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    pub fn write_emb<W: Write>(&self, mut writer: W) -> Result<(), MatrixError> {
        writer.write_all(EMB_MAGIC)?;
        writer.write_all(&EMB_VERSION.to_le_bytes())?;
        writer.write_all(&(self.rows as u64).to_le_bytes())?;
        writer.write_all(&(self.cols as u32).to_le_bytes())?;
        for &v in &self.data {
            writer.write_all(&(v as f32).to_le_bytes())?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_emb<R: Read>(mut reader: R) -> Result<Self, MatrixError> {
        let mut magic = [0u8; 4];
        reader
            .read_exact(&mut magic)
            .map_err(|_| MatrixError::BadMagic)?;
        if &magic != EMB_MAGIC {
            return Err(MatrixError::BadMagic);
        }
        let mut u32buf = [0u8; 4];
        let mut u64buf = [0u8; 8];
        reader.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != EMB_VERSION {
            return Err(MatrixError::UnsupportedVersion(version));
        }
        reader.read_exact(&mut u64buf)?;
        let rows = u64::from_le_bytes(u64buf);
        reader.read_exact(&mut u32buf)?;
        let cols = u32::from_le_bytes(u32buf) as usize;
        if rows == 0 {
            return Err(MatrixError::Empty);
        }
        if cols == 0 {
            return Err(MatrixError::ZeroWidth);
        }
        let expected = rows * cols as u64;
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        let got = (bytes.len() / 4) as u64;
        if got < expected {
            return Err(MatrixError::Truncated { expected, got });
        }
        let data: Vec<f64> = bytes
            .chunks_exact(4)
            .take(expected as usize)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        let m = FeatureMatrix {
            rows: rows as usize,
            cols,
            data,
        };
        if let Some((row, col)) = m.first_non_finite() {
            return Err(MatrixError::NonFinite { row, col });
        }
        Ok(m)
    }

    /// Reads either encoding, sniffing the `EMB1` magic.
    pub fn read_path(path: &Path) -> Result<Self, MatrixError> {
        let mut file = BufReader::new(File::open(path)?);
        let mut head = [0u8; 4];
        let n = file.read(&mut head)?;
        let rest = std::io::Cursor::new(head[..n].to_vec()).chain(file);
        if n == 4 && &head == EMB_MAGIC {
            Self::read_emb(rest)
        } else {
            Self::read_csv(rest)
        }
    }

    /// Writes `EMB1` for `.emb`/`.bin` extensions and CSV otherwise.
    pub fn write_path(&self, path: &Path) -> Result<(), MatrixError> {
        let file = BufWriter::new(File::create(path)?);
        match path.extension().and_then(|e| e.to_str()) {
            Some("emb" | "bin") => self.write_emb(file),
            _ => self.write_csv(file),
        }
    }
}

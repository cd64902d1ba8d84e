//! Plain-text matrix files.
//!
//! ```text
//! # optional comments
//! dims 2 2
//! 0 0 0.25 0
//! 0 1 0 0
//! ...
//! ```
//!
//! After the `dims m n` header every entry of the `mn × mn` matrix appears
//! exactly once as `row col re im` with 0-based indices. Values are written
//! with 17 significant digits so that a write/read cycle is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use entwit::linalg::{c, BipartiteDims, ComplexMatrix};
use entwit::witness::{Witness, WitnessOrigin};
use entwit::DensityMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing entry ({row}, {col}); {missing} of {total} entries absent")]
    Incomplete {
        row: usize,
        col: usize,
        missing: usize,
        total: usize,
    },
    #[error("not a valid {kind}: {source}")]
    Invalid {
        kind: MatrixKind,
        source: entwit::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MatrixKind {
    Density,
    Witness,
}

impl std::fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatrixKind::Density => f.write_str("density matrix"),
            MatrixKind::Witness => f.write_str("witness"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub dims: BipartiteDims,
    pub matrix: ComplexMatrix,
    /// Comment lines, without the leading `#` and surrounding whitespace.
    pub comments: Vec<String>,
}

impl MatrixFile {
    pub fn new(dims: BipartiteDims, matrix: ComplexMatrix) -> Self {
        Self {
            dims,
            matrix,
            comments: Vec::new(),
        }
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comments.push(comment.into());
        self
    }

    pub fn parse(text: &str) -> Result<Self, FileError> {
        let mut comments = Vec::new();
        let mut dims: Option<BipartiteDims> = None;
        let mut entries: Vec<Option<(f64, f64)>> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                comments.push(rest.trim().to_string());
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let err = |msg: String| FileError::Parse { line, msg };
            let Some(d) = dims else {
                if fields.len() != 3 || fields[0] != "dims" {
                    return Err(err(format!("expected header `dims m n`, found `{trimmed}`")));
                }
                let m = parse_index(fields[1]).map_err(&err)?;
                let n = parse_index(fields[2]).map_err(&err)?;
                let d = BipartiteDims::new(m, n).map_err(|e| err(e.to_string()))?;
                entries = vec![None; d.total() * d.total()];
                dims = Some(d);
                continue;
            };
            if fields.len() != 4 {
                return Err(err(format!(
                    "expected `row col re im`, found {} fields",
                    fields.len()
                )));
            }
            let row = parse_index(fields[0]).map_err(&err)?;
            let col = parse_index(fields[1]).map_err(&err)?;
            let re = parse_float(fields[2]).map_err(&err)?;
            let im = parse_float(fields[3]).map_err(&err)?;
            let size = d.total();
            if row >= size || col >= size {
                return Err(err(format!(
                    "index ({row}, {col}) outside a {size}x{size} matrix"
                )));
            }
            let slot = &mut entries[row * size + col];
            if slot.is_some() {
                return Err(err(format!("entry ({row}, {col}) given twice")));
            }
            *slot = Some((re, im));
        }

        let dims = dims.ok_or(FileError::Parse {
            line: text.lines().count().max(1),
            msg: "no `dims m n` header".into(),
        })?;
        let size = dims.total();
        let missing = entries.iter().filter(|e| e.is_none()).count();
        if let Some(first) = entries.iter().position(|e| e.is_none()) {
            return Err(FileError::Incomplete {
                row: first / size,
                col: first % size,
                missing,
                total: size * size,
            });
        }
        let matrix = ComplexMatrix::from_fn(size, size, |r, col| {
            let (re, im) = entries[r * size + col].expect("checked complete");
            c(re, im)
        });
        Ok(Self {
            dims,
            matrix,
            comments,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for comment in &self.comments {
            let _ = writeln!(out, "# {comment}");
        }
        let _ = writeln!(out, "dims {} {}", self.dims.m, self.dims.n);
        let size = self.dims.total();
        for r in 0..size {
            for col in 0..size {
                let z = self.matrix[(r, col)];
                let _ = writeln!(out, "{r} {col} {} {}", fmt_f64(z.re), fmt_f64(z.im));
            }
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self, FileError> {
        let text = fs::read_to_string(path).map_err(|source| FileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), FileError> {
        fs::write(path, self.to_text()).map_err(|source| FileError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Checks the matrix against the requirements of `kind`.
    pub fn validate(&self, kind: MatrixKind) -> Result<(), FileError> {
        match kind {
            MatrixKind::Density => self.to_density().map(|_| ()),
            MatrixKind::Witness => self.to_witness().map(|_| ()),
        }
    }

    pub fn to_density(&self) -> Result<DensityMatrix, FileError> {
        DensityMatrix::new(self.matrix.clone(), self.dims).map_err(|source| FileError::Invalid {
            kind: MatrixKind::Density,
            source,
        })
    }

    pub fn to_witness(&self) -> Result<Witness, FileError> {
        Witness::new(self.matrix.clone(), self.dims, WitnessOrigin::External).map_err(|source| {
            FileError::Invalid {
                kind: MatrixKind::Witness,
                source,
            }
        })
    }

    /// Value of a `# key value` comment, if present.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|line| {
            let mut parts = line.splitn(2, char::is_whitespace);
            (parts.next() == Some(key)).then(|| parts.next().unwrap_or("").trim())
        })
    }
}

pub fn read_density(path: &Path) -> Result<DensityMatrix, FileError> {
    MatrixFile::read(path)?.to_density()
}

pub fn read_witness(path: &Path) -> Result<Witness, FileError> {
    MatrixFile::read(path)?.to_witness()
}

fn parse_index(s: &str) -> Result<usize, String> {
    s.parse::<usize>()
        .map_err(|_| format!("`{s}` is not a non-negative integer"))
}

fn parse_float(s: &str) -> Result<f64, String> {
    let v = s
        .parse::<f64>()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// 17 significant digits; exact zeros are written as `0`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

//! Matrix Market (`.mtx`) reading and writing.
//!
//! Supports the `coordinate` and `array` layouts with `real`, `integer` or
//! `pattern` fields and `general` or `symmetric` storage. Symmetric files
//! store only the lower triangle; readers mirror it back.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{DenseMatrix, DenseSymmetric, SparseCsr};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Pattern,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MarketMatrix {
    Dense(DenseMatrix),
    Sparse(SparseCsr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketFile {
    pub matrix: MarketMatrix,
    /// The header declared `symmetric` storage.
    pub symmetric: bool,
}

impl MarketFile {
    pub fn shape(&self) -> (usize, usize) {
        match &self.matrix {
            MarketMatrix::Dense(d) => d.shape(),
            MarketMatrix::Sparse(s) => (s.n_rows(), s.n_cols()),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match &self.matrix {
            MarketMatrix::Dense(d) => d.clone(),
            MarketMatrix::Sparse(s) => s.to_dense(),
        }
    }

    /// Converts to a [`DenseSymmetric`], failing unless the content is exactly symmetric.
    pub fn to_dense_symmetric(&self) -> Result<DenseSymmetric> {
        let d = self.to_dense();
        let (r, c) = d.shape();
        if r != c {
            return Err(Error::ShapeMismatch {
                expected: (r, r),
                found: (r, c),
            });
        }
        DenseSymmetric::new(r, d.into_vec())
    }

    pub fn to_sparse(&self) -> SparseCsr {
        match &self.matrix {
            MarketMatrix::Dense(d) => SparseCsr::from_dense(d),
            MarketMatrix::Sparse(s) => s.clone(),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_path(path: impl AsRef<Path>) -> Result<MarketFile> {
    read(BufReader::new(File::open(path)?))
}

pub fn read<R: BufRead>(reader: R) -> Result<MarketFile> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(parse_err(1, "empty file")),
    };
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(hline, "expected '%%MatrixMarket matrix <layout> <field> <symmetry>'"));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(hline, format!("unsupported layout '{other}'"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "pattern" if layout == Layout::Coordinate => Field::Pattern,
        other => return Err(parse_err(hline, format!("unsupported field '{other}'"))),
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(hline, format!("unsupported symmetry '{other}'"))),
    };

    let mut body = Vec::new();
    for (n, l) in lines {
        let l = l?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        body.push((n, t.to_string()));
    }
    let mut body = body.into_iter();
    let (size_line, size) = body
        .next()
        .ok_or_else(|| parse_err(hline + 1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(size_line, format!("bad size '{t}'"))))
        .collect::<Result<_>>()?;

    let parse_f = |line: usize, t: &str| -> Result<f64> {
        t.parse::<f64>()
            .map_err(|_| parse_err(line, format!("bad value '{t}'")))
    };

    match layout {
        Layout::Coordinate => {
            let [rows, cols, nnz] = dims[..] else {
                return Err(parse_err(size_line, "coordinate size line needs rows cols nnz"));
            };
            if symmetric && rows != cols {
                return Err(parse_err(size_line, "symmetric matrix must be square"));
            }
            let mut triplets = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
            let mut seen = 0;
            for (line, text) in body {
                let parts: Vec<&str> = text.split_whitespace().collect();
                let want = if field == Field::Pattern { 2 } else { 3 };
                if parts.len() != want {
                    return Err(parse_err(line, format!("expected {want} fields")));
                }
                let i: usize = parts[0]
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad row '{}'", parts[0])))?;
                let j: usize = parts[1]
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad column '{}'", parts[1])))?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(parse_err(line, format!("index ({i}, {j}) out of range")));
                }
                let v = if field == Field::Pattern {
                    1.0
                } else {
                    parse_f(line, parts[2])?
                };
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(size_line, format!("declared {nnz} entries, found {seen}")));
            }
            Ok(MarketFile {
                matrix: MarketMatrix::Sparse(SparseCsr::from_triplets(rows, cols, triplets)?),
                symmetric,
            })
        }
        Layout::Array => {
            let [rows, cols] = dims[..] else {
                return Err(parse_err(size_line, "array size line needs rows cols"));
            };
            if symmetric && rows != cols {
                return Err(parse_err(size_line, "symmetric matrix must be square"));
            }
            let mut values = Vec::new();
            let mut last_line = size_line;
            for (line, text) in body {
                for t in text.split_whitespace() {
                    values.push(parse_f(line, t)?);
                }
                last_line = line;
            }
            let expected = if symmetric {
                rows * (rows + 1) / 2
            } else {
                rows * cols
            };
            if values.len() != expected {
                return Err(parse_err(
                    last_line,
                    format!("expected {expected} values, found {}", values.len()),
                ));
            }
            let mut m = DenseMatrix::zeros(rows, cols);
            let mut it = values.into_iter();
            // Column-major; symmetric files list the lower triangle only.
            for j in 0..cols {
                let start = if symmetric { j } else { 0 };
                for i in start..rows {
                    let v = it.next().expect("count checked above");
                    m.set(i, j, v);
                    if symmetric {
                        m.set(j, i, v);
                    }
                }
            }
            Ok(MarketFile {
                matrix: MarketMatrix::Dense(m),
                symmetric,
            })
        }
    }
}

/// Writes a dense symmetric matrix in `array real symmetric` layout.
pub fn write_dense_symmetric<W: Write>(mut w: W, m: &DenseSymmetric) -> Result<()> {
    let n = m.n();
    writeln!(w, "%%MatrixMarket matrix array real symmetric")?;
    writeln!(w, "{n} {n}")?;
    for j in 0..n {
        for i in j..n {
            writeln!(w, "{}", m.get(i, j))?;
        }
    }
    Ok(())
}

/// Writes a general dense matrix in `array real general` layout.
pub fn write_dense<W: Write>(mut w: W, m: &DenseMatrix) -> Result<()> {
    let (r, c) = m.shape();
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{r} {c}")?;
    for j in 0..c {
        for i in 0..r {
            writeln!(w, "{}", m.get(i, j))?;
        }
    }
    Ok(())
}

/// Writes a sparse matrix in `coordinate real` layout. With `symmetric` set
/// only the lower triangle is written (the matrix must be symmetric).
pub fn write_sparse<W: Write>(mut w: W, m: &SparseCsr, symmetric: bool) -> Result<()> {
    if symmetric && !m.is_symmetric() {
        return Err(Error::NotSymmetric { row: 0, col: 0 });
    }
    let entries: Vec<(usize, usize, f64)> = (0..m.n_rows())
        .flat_map(|i| m.row(i).map(move |(j, v)| (i, j, v)))
        .filter(|&(i, j, _)| !symmetric || i >= j)
        .collect();
    writeln!(
        w,
        "%%MatrixMarket matrix coordinate real {}",
        if symmetric { "symmetric" } else { "general" }
    )?;
    writeln!(w, "{} {} {}", m.n_rows(), m.n_cols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn write_dense_symmetric_path(path: impl AsRef<Path>, m: &DenseSymmetric) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dense_symmetric(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn write_dense_path(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dense(&mut w, m)?;
    w.flush()?;
    Ok(())
}

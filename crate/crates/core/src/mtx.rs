//! Matrix Market reader and writer.
//!
//! Supports the `matrix` object in `coordinate` and `array` formats with
//! `real`, `integer`, `complex` and `pattern` fields, and the `general`,
//! `symmetric`, `skew-symmetric` and `hermitian` symmetry qualifiers.
//! Real data is promoted to complex on load.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use faer::Mat;

use crate::c64;
use crate::error::{Error, Result};
use crate::linalg::{CooMatrix, Operator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Complex,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

/// A matrix as stored on disk: coordinate files stay sparse, array files dense.
#[derive(Clone, Debug, PartialEq)]
pub enum MtxMatrix {
    Coordinate(CooMatrix),
    Array(Mat<c64>),
}

impl MtxMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            MtxMatrix::Coordinate(c) => c.nrows(),
            MtxMatrix::Array(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            MtxMatrix::Coordinate(c) => c.ncols(),
            MtxMatrix::Array(m) => m.ncols(),
        }
    }

    pub fn into_dense(self) -> Mat<c64> {
        match self {
            MtxMatrix::Coordinate(c) => c.to_dense(),
            MtxMatrix::Array(m) => m,
        }
    }

    pub fn into_operator(self) -> Operator {
        match self {
            MtxMatrix::Coordinate(c) => Operator::Sparse(c),
            MtxMatrix::Array(m) => Operator::Dense(m),
        }
    }
}

pub fn read_mtx(path: &Path) -> Result<MtxMatrix> {
    let text = fs::read_to_string(path)?;
    parse_mtx(&text, path)
}

pub fn parse_mtx(text: &str, path: &Path) -> Result<MtxMatrix> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, banner) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let tokens: Vec<String> = banner
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(1, format!("unsupported header `{banner}`")));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(err(1, format!("unknown format `{other}`"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "complex" => Field::Complex,
        "pattern" => Field::Pattern,
        other => return Err(err(1, format!("unknown field `{other}`"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => Symmetry::Hermitian,
        other => return Err(err(1, format!("unknown symmetry `{other}`"))),
    };
    if field == Field::Pattern && !coordinate {
        return Err(err(1, "pattern field requires coordinate format".into()));
    }

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (size_line, size) = data
        .next()
        .ok_or_else(|| err(1, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(size_line, format!("bad size line: {e}")))?;
    let expected_dims = if coordinate { 3 } else { 2 };
    if dims.len() != expected_dims {
        return Err(err(
            size_line,
            format!("expected {expected_dims} integers on size line"),
        ));
    }
    let (nrows, ncols) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && nrows != ncols {
        return Err(err(
            size_line,
            "symmetric storage requires a square matrix".into(),
        ));
    }

    let parse_value = |line: usize, toks: &[&str]| -> Result<c64> {
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|e| err(line, format!("bad number `{t}`: {e}")))
        };
        match field {
            Field::Pattern => {
                if !toks.is_empty() {
                    return Err(err(line, "pattern entries carry no value".into()));
                }
                Ok(c64::new(1.0, 0.0))
            }
            Field::Real | Field::Integer => {
                if toks.len() != 1 {
                    return Err(err(line, format!("expected 1 value, found {}", toks.len())));
                }
                Ok(c64::new(num(toks[0])?, 0.0))
            }
            Field::Complex => {
                if toks.len() != 2 {
                    return Err(err(
                        line,
                        format!("expected 2 values, found {}", toks.len()),
                    ));
                }
                Ok(c64::new(num(toks[0])?, num(toks[1])?))
            }
        }
    };
    let mirror = |v: c64| match symmetry {
        Symmetry::General => None,
        Symmetry::Symmetric => Some(v),
        Symmetry::SkewSymmetric => Some(-v),
        Symmetry::Hermitian => Some(v.conj()),
    };

    if coordinate {
        let nnz = dims[2];
        let mut entries = Vec::with_capacity(nnz);
        let mut count = 0;
        for (line, text) in data {
            let toks: Vec<&str> = text.split_whitespace().collect();
            if toks.len() < 2 {
                return Err(err(line, "expected `row col [value]`".into()));
            }
            let idx = |t: &str, bound: usize| -> Result<usize> {
                let k: usize = t
                    .parse()
                    .map_err(|e| err(line, format!("bad index `{t}`: {e}")))?;
                if k == 0 || k > bound {
                    return Err(err(line, format!("index {k} out of range 1..={bound}")));
                }
                Ok(k - 1)
            };
            let i = idx(toks[0], nrows)?;
            let j = idx(toks[1], ncols)?;
            let v = parse_value(line, &toks[2..])?;
            entries.push((i, j, v));
            if i != j {
                if let Some(w) = mirror(v) {
                    entries.push((j, i, w));
                }
            }
            count += 1;
        }
        if count != nnz {
            return Err(err(
                size_line,
                format!("declared {nnz} entries, found {count}"),
            ));
        }
        Ok(MtxMatrix::Coordinate(CooMatrix::new(
            nrows, ncols, entries,
        )?))
    } else {
        let mut values = Vec::new();
        let mut last_line = size_line;
        for (line, text) in data {
            let toks: Vec<&str> = text.split_whitespace().collect();
            values.push(parse_value(line, &toks)?);
            last_line = line;
        }
        // column-major; symmetric variants list only the lower triangle
        let positions: Vec<(usize, usize)> = match symmetry {
            Symmetry::General => (0..ncols)
                .flat_map(|j| (0..nrows).map(move |i| (i, j)))
                .collect(),
            Symmetry::SkewSymmetric => (0..ncols)
                .flat_map(|j| (j + 1..nrows).map(move |i| (i, j)))
                .collect(),
            Symmetry::Symmetric | Symmetry::Hermitian => (0..ncols)
                .flat_map(|j| (j..nrows).map(move |i| (i, j)))
                .collect(),
        };
        if values.len() != positions.len() {
            return Err(err(
                last_line,
                format!(
                    "expected {} values, found {}",
                    positions.len(),
                    values.len()
                ),
            ));
        }
        let mut m = Mat::zeros(nrows, ncols);
        for ((i, j), v) in positions.into_iter().zip(values) {
            m[(i, j)] = v;
            if i != j {
                if let Some(w) = mirror(v) {
                    m[(j, i)] = w;
                }
            }
        }
        Ok(MtxMatrix::Array(m))
    }
}

fn is_real(values: impl IntoIterator<Item = c64>) -> bool {
    values
        .into_iter()
        .all(|v| v.im == 0.0 && v.im.is_sign_positive())
}

fn push_value(out: &mut String, v: c64, real: bool) {
    if real {
        let _ = write!(out, "{:e}", v.re);
    } else {
        let _ = write!(out, "{:e} {:e}", v.re, v.im);
    }
}

/// Writes `m` in general coordinate format. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_coordinate(path: &Path, m: &CooMatrix) -> Result<()> {
    let real = is_real(m.entries().iter().map(|e| e.2));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "%%MatrixMarket matrix coordinate {} general",
        if real { "real" } else { "complex" }
    );
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols(), m.entries().len());
    for &(i, j, v) in m.entries() {
        let _ = write!(out, "{} {} ", i + 1, j + 1);
        push_value(&mut out, v, real);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes `m` in general array (column-major) format.
pub fn write_array(path: &Path, m: &Mat<c64>) -> Result<()> {
    let all = (0..m.ncols()).flat_map(|j| (0..m.nrows()).map(move |i| (i, j)));
    let real = is_real(all.clone().map(|(i, j)| m[(i, j)]));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "%%MatrixMarket matrix array {} general",
        if real { "real" } else { "complex" }
    );
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for (i, j) in all {
        push_value(&mut out, m[(i, j)], real);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

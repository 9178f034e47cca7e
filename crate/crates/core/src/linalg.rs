//! Thin layer over `faer`: system operators in dense, coordinate or identity
//! storage, the shifted pencil `zE - A`, and its factorization with a
//! reciprocal condition estimate.

use faer::linalg::solvers::{PartialPivLu, SolveCore};
use faer::sparse::linalg::solvers::Lu as SparseLu;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, MatMut, MatRef};

use crate::c64;
use crate::error::{Error, Result};

/// Square or rectangular operator with the storage used by the loader.
#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Identity(usize),
    Dense(Mat<c64>),
    Sparse(CooMatrix),
}

/// Coordinate-format matrix. Entries are sorted column-major with duplicates
/// summed, so two equal matrices have equal representations.
#[derive(Clone, Debug, PartialEq)]
pub struct CooMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, c64)>,
}

impl CooMatrix {
    pub fn new(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, c64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = entries.iter().find(|(i, j, _)| *i >= nrows || *j >= ncols) {
            return Err(Error::DimensionMismatch(format!(
                "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
            )));
        }
        entries.sort_by_key(|&(i, j, _)| (j, i));
        let mut merged: Vec<(usize, usize, c64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        Ok(Self {
            nrows,
            ncols,
            entries: merged,
        })
    }

    pub fn diagonal(diag: &[c64]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            entries: diag.iter().enumerate().map(|(k, &v)| (k, k, v)).collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn entries(&self) -> &[(usize, usize, c64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let mut out = Mat::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            out[(i, j)] += v;
        }
        out
    }
}

impl Operator {
    pub fn nrows(&self) -> usize {
        match self {
            Operator::Identity(n) => *n,
            Operator::Dense(m) => m.nrows(),
            Operator::Sparse(s) => s.nrows,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Operator::Identity(n) => *n,
            Operator::Dense(m) => m.ncols(),
            Operator::Sparse(s) => s.ncols,
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, Operator::Dense(_))
    }

    pub fn to_dense(&self) -> Mat<c64> {
        match self {
            Operator::Identity(n) => {
                Mat::from_fn(*n, *n, |i, j| if i == j { one() } else { zero() })
            }
            Operator::Dense(m) => m.clone(),
            Operator::Sparse(s) => s.to_dense(),
        }
    }

    /// `self * x`.
    pub fn apply(&self, x: MatRef<'_, c64>) -> Mat<c64> {
        assert_eq!(self.ncols(), x.nrows());
        match self {
            Operator::Identity(_) => x.to_owned(),
            Operator::Dense(m) => m * x,
            Operator::Sparse(s) => {
                let mut out = Mat::zeros(s.nrows, x.ncols());
                for &(i, j, v) in &s.entries {
                    for c in 0..x.ncols() {
                        out[(i, c)] += v * x[(j, c)];
                    }
                }
                out
            }
        }
    }

    fn push_scaled(&self, scale: c64, out: &mut Vec<(usize, usize, c64)>) {
        match self {
            Operator::Identity(n) => out.extend((0..*n).map(|k| (k, k, scale))),
            Operator::Dense(m) => {
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        let v = m[(i, j)];
                        if v != zero() {
                            out.push((i, j, scale * v));
                        }
                    }
                }
            }
            Operator::Sparse(s) => out.extend(s.entries.iter().map(|&(i, j, v)| (i, j, scale * v))),
        }
    }
}

/// `z * e - a`, kept sparse unless one of the operands is dense.
pub fn shifted_pencil(z: c64, e: &Operator, a: &Operator) -> Operator {
    let n = a.nrows();
    if e.is_dense() || a.is_dense() {
        let ed = e.to_dense();
        let ad = a.to_dense();
        return Operator::Dense(Mat::from_fn(n, n, |i, j| z * ed[(i, j)] - ad[(i, j)]));
    }
    let mut entries = Vec::new();
    e.push_scaled(z, &mut entries);
    a.push_scaled(-one(), &mut entries);
    Operator::Sparse(CooMatrix::new(n, n, entries).expect("pencil entries are in range"))
}

enum Factor {
    Dense(PartialPivLu<c64>),
    Sparse(SparseLu<usize, c64>),
    /// Structurally singular; the backend produced no factors.
    Singular,
}

/// LU factorization of a square operator plus a 1-norm reciprocal condition
/// estimate.
pub struct Factorization {
    factor: Factor,
    n: usize,
    rcond: f64,
}

impl Factorization {
    /// Factors `k`. Fails only when the backend refuses the matrix; numerical
    /// singularity shows up as a tiny or NaN [`Factorization::rcond`].
    pub fn new(k: &Operator) -> Result<Self> {
        let n = k.nrows();
        let norm1 = one_norm(k);
        let factor = match k {
            Operator::Dense(m) => Factor::Dense(m.partial_piv_lu()),
            Operator::Identity(_) | Operator::Sparse(_) => {
                let mut triplets = Vec::new();
                k.push_scaled(one(), &mut triplets);
                let triplets: Vec<_> = triplets
                    .into_iter()
                    .map(|(i, j, v)| Triplet::new(i, j, v))
                    .collect();
                let csc = SparseColMat::<usize, c64>::try_new_from_triplets(n, n, &triplets)
                    .map_err(|e| Error::Backend(format!("{e:?}")))?;
                match csc.sp_lu() {
                    Ok(lu) => Factor::Sparse(lu),
                    Err(_) => {
                        return Ok(Self {
                            factor: Factor::Singular,
                            n,
                            rcond: 0.0,
                        })
                    }
                }
            }
        };
        let mut this = Self {
            factor,
            n,
            rcond: 0.0,
        };
        let inv_norm = this.inverse_one_norm_estimate();
        this.rcond = if n == 0 {
            1.0
        } else if inv_norm.is_finite() && norm1 > 0.0 {
            1.0 / (norm1 * inv_norm)
        } else {
            0.0
        };
        Ok(this)
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn solve_in_place(&self, rhs: MatMut<'_, c64>) {
        match &self.factor {
            Factor::Dense(lu) => lu.solve_in_place_with_conj(Conj::No, rhs),
            Factor::Sparse(lu) => lu.solve_in_place_with_conj(Conj::No, rhs),
            Factor::Singular => fill_nan(rhs),
        }
    }

    fn solve_adjoint_in_place(&self, rhs: MatMut<'_, c64>) {
        match &self.factor {
            Factor::Dense(lu) => lu.solve_transpose_in_place_with_conj(Conj::Yes, rhs),
            Factor::Sparse(lu) => lu.solve_transpose_in_place_with_conj(Conj::Yes, rhs),
            Factor::Singular => fill_nan(rhs),
        }
    }

    /// Hager-Higham estimate of `||K^-1||_1` (complex variant, as in LAPACK's
    /// `zlacn2`), followed by the alternating-sign safeguard vector.
    fn inverse_one_norm_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let col_norm1 = |x: &Mat<c64>| (0..n).map(|i| x[(i, 0)].norm()).sum::<f64>();
        let mut x = Mat::from_fn(n, 1, |_, _| c64::new(1.0 / n as f64, 0.0));
        let mut est = 0.0f64;
        let mut last_j = usize::MAX;
        for iter in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(y.as_mut());
            let y_norm = col_norm1(&y);
            if !y_norm.is_finite() {
                return f64::INFINITY;
            }
            if iter > 0 && y_norm <= est {
                est = est.max(y_norm);
                break;
            }
            est = y_norm;
            let mut w = Mat::from_fn(n, 1, |i, _| {
                let v = y[(i, 0)];
                let a = v.norm();
                if a > 0.0 {
                    v / a
                } else {
                    one()
                }
            });
            self.solve_adjoint_in_place(w.as_mut());
            let (j, wmax) = (0..n)
                .map(|i| (i, w[(i, 0)].norm()))
                .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            let wx: f64 = (0..n).map(|i| (w[(i, 0)].conj() * x[(i, 0)]).re).sum();
            if !wmax.is_finite() {
                return f64::INFINITY;
            }
            if wmax <= wx || j == last_j {
                break;
            }
            last_j = j;
            x = Mat::zeros(n, 1);
            x[(j, 0)] = one();
        }
        let mut alt = Mat::from_fn(n, 1, |i, _| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let scale = if n > 1 {
                1.0 + i as f64 / (n - 1) as f64
            } else {
                1.0
            };
            c64::new(sign * scale, 0.0)
        });
        self.solve_in_place(alt.as_mut());
        let alt_est = 2.0 * col_norm1(&alt) / (3.0 * n as f64);
        if alt_est.is_finite() {
            est.max(alt_est)
        } else {
            f64::INFINITY
        }
    }
}

fn fill_nan(mut rhs: MatMut<'_, c64>) {
    rhs.fill(c64::new(f64::NAN, f64::NAN));
}

pub fn one_norm(k: &Operator) -> f64 {
    match k {
        Operator::Identity(n) => {
            if *n > 0 {
                1.0
            } else {
                0.0
            }
        }
        Operator::Dense(m) => (0..m.ncols())
            .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max),
        Operator::Sparse(s) => {
            let mut sums = vec![0.0; s.ncols];
            for &(_, j, v) in &s.entries {
                sums[j] += v.norm();
            }
            sums.into_iter().fold(0.0, f64::max)
        }
    }
}

pub fn frobenius(m: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn all_finite(m: MatRef<'_, c64>) -> bool {
    (0..m.ncols())
        .all(|j| (0..m.nrows()).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
}

#[inline]
pub(crate) fn one() -> c64 {
    c64::new(1.0, 0.0)
}

#[inline]
pub(crate) fn zero() -> c64 {
    c64::new(0.0, 0.0)
}

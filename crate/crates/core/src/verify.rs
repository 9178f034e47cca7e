//! Intrusive checks that need the state-space matrices.
//!
//! For a surrogate with coefficients `q` the state residual satisfies
//! `Q(z) r(z) = sum_j q_j E G(z_j)`, so `rho(z) |Q(z)|` does not depend on
//! `z`, and the output error obeys `eps(z) |Q(z)| = Delta(z)`. The functions
//! here measure both numerically.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::barycentric::BarycentricSurrogate;
use crate::c64;
use crate::error::{Error, Result};
use crate::greedy::adjusted_relative_error;
use crate::linalg::frobenius;
use crate::system::DescriptorSystem;

/// Relative distance to a support node below which a random check point is
/// redrawn.
pub const SUPPORT_CLEARANCE: f64 = 1e-6;

/// Same support and coefficients as `sur`, with `G(z_j)` as values.
pub fn state_surrogate(
    sur: &BarycentricSurrogate,
    sys: &DescriptorSystem,
) -> Result<BarycentricSurrogate> {
    let values = sur
        .support()
        .iter()
        .map(|&z| sys.eval_state_transfer(z))
        .collect::<Result<Vec<_>>>()?;
    sur.with_values(values)
}

/// `(zE - A) X`.
fn apply_pencil(sys: &DescriptorSystem, z: c64, x: &Mat<c64>) -> Mat<c64> {
    let ex = sys.e().apply(x.as_ref());
    let ax = sys.a().apply(x.as_ref());
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| z * ex[(i, j)] - ax[(i, j)])
}

/// State residual `(zE - A) G~(z) - B`.
///
/// Expanded over the support as `sum_j w_j ((zE - A) G_j - B) / sum_j w_j`
/// with `w_j = q_j / (z - z_j)`, which is the same quantity but avoids
/// cancelling `(zE - A) G~(z)` against `B` as a whole.
pub fn state_residual(
    sys: &DescriptorSystem,
    gsur: &BarycentricSurrogate,
    z: c64,
) -> Result<Mat<c64>> {
    if let Some(index) = gsur.support_index(z) {
        return Err(Error::SupportCollision { z, index });
    }
    let b = sys.b();
    let mut acc = Mat::<c64>::zeros(b.nrows(), b.ncols());
    let mut den = c64::new(0.0, 0.0);
    for ((&zj, gj), &qj) in gsur.support().iter().zip(gsur.values()).zip(gsur.coeffs()) {
        let w = qj / (z - zj);
        den += w;
        let kg = apply_pencil(sys, z, gj);
        for j in 0..b.ncols() {
            for i in 0..b.nrows() {
                acc[(i, j)] += w * (kg[(i, j)] - b[(i, j)]);
            }
        }
    }
    if den == c64::new(0.0, 0.0) {
        return Err(Error::SurrogatePole { z });
    }
    let inv = c64::new(1.0, 0.0) / den;
    Ok(Mat::from_fn(acc.nrows(), acc.ncols(), |i, j| {
        acc[(i, j)] * inv
    }))
}

/// `rho = ||(zE - A) G~(z) - B||_F / ||B||_F`.
pub fn residual_norm(sys: &DescriptorSystem, gsur: &BarycentricSurrogate, z: c64) -> Result<f64> {
    Ok(frobenius(state_residual(sys, gsur, z)?.as_ref()) / frobenius(sys.b().as_ref()))
}

/// `sum_j q_j G(z_j)`, the state numerator without the poles.
fn weighted_state_sum(gsur: &BarycentricSurrogate) -> Mat<c64> {
    let (n, m) = gsur.shape();
    let mut s = Mat::<c64>::zeros(n, m);
    for (g, &q) in gsur.values().iter().zip(gsur.coeffs()) {
        for j in 0..m {
            for i in 0..n {
                s[(i, j)] += q * g[(i, j)];
            }
        }
    }
    s
}

/// `E sum_j q_j G(z_j)`.
pub fn residual_numerator(sys: &DescriptorSystem, gsur: &BarycentricSurrogate) -> Mat<c64> {
    sys.e().apply(weighted_state_sum(gsur).as_ref())
}

/// Log-uniform check points `i f` in the range, redrawn while they fall
/// within [`SUPPORT_CLEARANCE`] relative distance of a support node.
pub fn random_check_points(
    sur: &BarycentricSurrogate,
    f_min: f64,
    f_max: f64,
    count: usize,
    seed: u64,
) -> Vec<c64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (f_min.ln(), f_max.ln());
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = c64::new(0.0, rng.random_range(lo..=hi).exp());
        let clear = sur
            .support()
            .iter()
            .all(|s| (z - s).norm() > SUPPORT_CLEARANCE * s.norm().max(z.norm()));
        if clear {
            out.push(z);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualPoint {
    pub z: c64,
    pub rho: f64,
    pub q_abs: f64,
}

impl ResidualPoint {
    pub fn product(&self) -> f64 {
        self.rho * self.q_abs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub points: Vec<ResidualPoint>,
    /// Mean of `rho |Q|` over the points.
    pub gamma_estimate: f64,
    /// `||E sum_j q_j G(z_j)||_F / ||B||_F`.
    pub gamma_formula: f64,
    /// `max |rho |Q| - mean| / mean`.
    pub max_relative_spread: f64,
    /// Worst entrywise mismatch of `Q r = E sum_j q_j G(z_j)`, relative to the
    /// largest entry of the right-hand side.
    pub identity_error: f64,
}

impl ResidualReport {
    pub fn gamma_relative_error(&self) -> f64 {
        relative_gap(self.gamma_estimate, self.gamma_formula)
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn max_abs(m: &Mat<c64>) -> f64 {
    let mut v = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            v = v.max(m[(i, j)].norm());
        }
    }
    v
}

/// Measures how constant `rho(z) |Q(z)|` is over `zs`.
pub fn check_residual_scaling(
    sys: &DescriptorSystem,
    sur: &BarycentricSurrogate,
    zs: &[c64],
) -> Result<ResidualReport> {
    if zs.is_empty() {
        return Err(Error::Empty("no check points"));
    }
    let gsur = state_surrogate(sur, sys)?;
    let rhs = residual_numerator(sys, &gsur);
    let b_norm = frobenius(sys.b().as_ref());
    let rhs_max = max_abs(&rhs);

    let per_point = zs
        .par_iter()
        .map(|&z| -> Result<(ResidualPoint, f64)> {
            let r = state_residual(sys, &gsur, z)?;
            let q = gsur.eval_denominator(z)?;
            let lhs = Mat::from_fn(r.nrows(), r.ncols(), |i, j| q * r[(i, j)]);
            let mismatch = max_abs(&(&lhs - &rhs));
            let point = ResidualPoint {
                z,
                rho: frobenius(r.as_ref()) / b_norm,
                q_abs: q.norm(),
            };
            Ok((point, mismatch))
        })
        .collect::<Result<Vec<_>>>()?;

    let products: Vec<f64> = per_point.iter().map(|(p, _)| p.product()).collect();
    let mean = products.iter().sum::<f64>() / products.len() as f64;
    let spread = if mean == 0.0 {
        0.0
    } else {
        products
            .iter()
            .map(|v| (v - mean).abs())
            .fold(0.0, f64::max)
            / mean
    };
    let worst = per_point.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    Ok(ResidualReport {
        gamma_estimate: mean,
        gamma_formula: frobenius(rhs.as_ref()) / b_norm,
        max_relative_spread: spread,
        identity_error: if rhs_max == 0.0 {
            worst
        } else {
            worst / rhs_max
        },
        points: per_point.into_iter().map(|(p, _)| p).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorPoint {
    pub z: c64,
    /// Adjusted relative output error of the surrogate.
    pub eps: f64,
    pub q_abs: f64,
    /// `||C (zE - A)^-1 B~||_F / (||H(z)||_F + delta)`.
    pub delta_factor: f64,
    /// `|eps |Q| - Delta| / Delta`.
    pub violation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub points: Vec<ErrorPoint>,
    pub max_violation: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

/// `Delta(z)` for a numerator `B~ = E sum_j q_j G(z_j)`.
pub fn delta_factor(
    sys: &DescriptorSystem,
    b_tilde: &Mat<c64>,
    z: c64,
    h_norm: f64,
    delta: f64,
) -> Result<f64> {
    let x = sys.solve(z, b_tilde)?;
    Ok(frobenius((sys.c() * &x).as_ref()) / (h_norm + delta))
}

/// Compares `eps(z) |Q(z)|` with the independently computed `Delta(z)`.
pub fn check_error_identity(
    sys: &DescriptorSystem,
    sur: &BarycentricSurrogate,
    zs: &[c64],
    delta: f64,
) -> Result<ErrorReport> {
    if zs.is_empty() {
        return Err(Error::Empty("no check points"));
    }
    let gsur = state_surrogate(sur, sys)?;
    let b_tilde = residual_numerator(sys, &gsur);
    let points = zs
        .par_iter()
        .map(|&z| -> Result<ErrorPoint> {
            let h = sys.eval_transfer(z)?;
            let approx = sur.eval(z)?;
            let eps = adjusted_relative_error(&h, &approx, delta);
            let q_abs = sur.eval_denominator(z)?.norm();
            let d = delta_factor(sys, &b_tilde, z, frobenius(h.as_ref()), delta)?;
            let violation = if d == 0.0 {
                eps * q_abs
            } else {
                (eps * q_abs - d).abs() / d
            };
            Ok(ErrorPoint {
                z,
                eps,
                q_abs,
                delta_factor: d,
                violation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_violation = points.iter().map(|p| p.violation).fold(0.0, f64::max);
    let delta_min = points
        .iter()
        .map(|p| p.delta_factor)
        .fold(f64::INFINITY, f64::min);
    let delta_max = points.iter().map(|p| p.delta_factor).fold(0.0, f64::max);
    Ok(ErrorReport {
        points,
        max_violation,
        delta_min,
        delta_max,
    })
}

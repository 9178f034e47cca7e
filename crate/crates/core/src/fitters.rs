//! Barycentric coefficient fitting: least-squares Loewner and minimal
//! rational interpolation (MRI).

use std::cmp::Ordering;

use faer::Mat;

use crate::barycentric::BarycentricSurrogate;
use crate::c64;
use crate::error::{Error, Result};
use crate::linalg::{frobenius, zero};
use crate::system::FrequencySample;

/// Support/test split of the sampled data for the Loewner fit.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePartition {
    pub support: Vec<FrequencySample>,
    pub test: Vec<FrequencySample>,
}

/// Canonical frequency order: imaginary part, then real part.
pub fn canonical_order(a: &c64, b: &c64) -> Ordering {
    a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re))
}

/// Sorts the samples canonically and alternates them between support
/// (even positions) and test (odd positions), so `|support| = ceil(S / 2)`.
pub fn partition_samples(samples: &[FrequencySample]) -> Result<SamplePartition> {
    if samples.is_empty() {
        return Err(Error::Empty("no samples to partition"));
    }
    let mut sorted: Vec<&FrequencySample> = samples.iter().collect();
    sorted.sort_by(|a, b| canonical_order(&a.z, &b.z));
    if let Some(w) = sorted.windows(2).find(|w| w[0].z == w[1].z) {
        return Err(Error::DuplicateFrequency(w[0].z));
    }
    let mut part = SamplePartition {
        support: Vec::with_capacity(sorted.len().div_ceil(2)),
        test: Vec::with_capacity(sorted.len() / 2),
    };
    for (k, s) in sorted.into_iter().enumerate() {
        if k % 2 == 0 {
            part.support.push(s.clone());
        } else {
            part.test.push(s.clone());
        }
    }
    Ok(part)
}

/// Stacked Loewner matrix with rows `vec((H(z'_l) - H(z_j)) / (z'_l - z_j))`,
/// one block of `p*m` rows per test frequency and one column per support
/// point. Blocks are vectorized row-major.
pub fn loewner_matrix(part: &SamplePartition) -> Mat<c64> {
    let k = part.support.len();
    let Some(first) = part.support.first() else {
        return Mat::zeros(0, 0);
    };
    let (p, m) = (first.value.nrows(), first.value.ncols());
    let pm = p * m;
    let mut out = Mat::zeros(pm * part.test.len(), k);
    for (l, t) in part.test.iter().enumerate() {
        for (j, s) in part.support.iter().enumerate() {
            let inv = c64::new(1.0, 0.0) / (t.z - s.z);
            for r in 0..p {
                for c in 0..m {
                    out[(l * pm + r * m + c, j)] = (t.value[(r, c)] - s.value[(r, c)]) * inv;
                }
            }
        }
    }
    out
}

/// Matrix whose columns are `vec(H(z_j))`.
pub fn mri_matrix(samples: &[FrequencySample]) -> Mat<c64> {
    let Some(first) = samples.first() else {
        return Mat::zeros(0, 0);
    };
    let (p, m) = (first.value.nrows(), first.value.ncols());
    Mat::from_fn(p * m, samples.len(), |row, j| {
        samples[j].value[(row / m, row % m)]
    })
}

/// Euclidean norm of `mat * q`.
pub fn residual_norm(mat: &Mat<c64>, q: &[c64]) -> f64 {
    let qv = Mat::from_fn(q.len(), 1, |i, _| q[i]);
    frobenius((mat * &qv).as_ref())
}

/// Least-squares Loewner fit: `q` minimizes the Loewner residual over the
/// unit sphere.
pub fn fit_loewner(part: &SamplePartition) -> Result<BarycentricSurrogate> {
    if part.support.is_empty() {
        return Err(Error::Empty(
            "Loewner fit needs at least one support sample",
        ));
    }
    check_shapes(part.support.iter().chain(&part.test))?;
    let q = smallest_right_singular_vector(&loewner_matrix(part))?;
    BarycentricSurrogate::new(
        part.support.iter().map(|s| s.z).collect(),
        part.support.iter().map(|s| s.value.clone()).collect(),
        q,
    )
}

/// Minimal rational interpolation: every sample is a support point and `q`
/// minimizes `|| sum_j q_j H(z_j) ||_F` over the unit sphere.
pub fn fit_mri(samples: &[FrequencySample]) -> Result<BarycentricSurrogate> {
    if samples.is_empty() {
        return Err(Error::Empty("MRI fit needs at least one sample"));
    }
    check_shapes(samples.iter())?;
    let (p, m) = (samples[0].value.nrows(), samples[0].value.ncols());
    if p * m < samples.len() {
        log::warn!(
            "MRI with {} samples of size {p}x{m}: the fit may admit spurious exact solutions",
            samples.len()
        );
    }
    let q = smallest_right_singular_vector(&mri_matrix(samples))?;
    BarycentricSurrogate::new(
        samples.iter().map(|s| s.z).collect(),
        samples.iter().map(|s| s.value.clone()).collect(),
        q,
    )
}

fn check_shapes<'a>(mut samples: impl Iterator<Item = &'a FrequencySample>) -> Result<()> {
    let Some(first) = samples.next() else {
        return Ok(());
    };
    let shape = (first.value.nrows(), first.value.ncols());
    if samples.any(|s| (s.value.nrows(), s.value.ncols()) != shape) {
        return Err(Error::DimensionMismatch("samples differ in shape".into()));
    }
    Ok(())
}

/// Right singular vector of the smallest singular value, as the last column
/// of the full right-singular basis (singular values sorted descending).
/// With no rows the result is the last canonical basis vector. The phase is
/// fixed so that the largest-modulus entry is real and positive.
pub fn smallest_right_singular_vector(mat: &Mat<c64>) -> Result<Vec<c64>> {
    let k = mat.ncols();
    if k == 0 {
        return Err(Error::Empty("matrix has no columns"));
    }
    let mut q = vec![zero(); k];
    if mat.nrows() == 0 {
        q[k - 1] = c64::new(1.0, 0.0);
        return Ok(q);
    }
    let svd = mat
        .svd()
        .map_err(|e| Error::Backend(format!("SVD: {e:?}")))?;
    let v = svd.V();
    for (j, qj) in q.iter_mut().enumerate() {
        *qj = v[(j, k - 1)];
    }
    fix_phase(&mut q);
    Ok(q)
}

/// Rotates `q` so that its first largest-modulus entry is real positive.
pub fn fix_phase(q: &mut [c64]) {
    let Some((idx, _)) = q
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (j, v)| match best {
            Some((_, b)) if v.norm() <= b => best,
            _ => Some((j, v.norm())),
        })
    else {
        return;
    };
    let mag = q[idx].norm();
    if mag == 0.0 {
        return;
    }
    let rot = q[idx].conj() / mag;
    for v in q.iter_mut() {
        *v *= rot;
    }
    q[idx] = c64::new(mag, 0.0);
}

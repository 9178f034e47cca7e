//! Interpolatory barycentric rational surrogates
//!
//! ```text
//!            sum_j q_j H(z_j) / (z - z_j)
//!   H~(z) = ------------------------------
//!            sum_j q_j / (z - z_j)
//! ```
//!
//! The denominator `Q(z) = sum_j q_j / (z - z_j)` also drives the greedy
//! sampler: `1 / |Q(z)|` is the error indicator.

use std::fs;
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};
use crate::linalg::{one, zero};

/// Relative distance below which `z` is snapped onto a support point.
pub const SNAP_TOL: f64 = 1e-13;

/// Coefficients at or below this magnitude are reported as weak nodes.
pub const WEAK_COEFF: f64 = 1e-14;

/// Eigenvalues of the (scaled) arrowhead pencil beyond this magnitude are
/// treated as infinite.
const INFINITE_EIG: f64 = 1e13;

#[derive(Clone, Debug, PartialEq)]
pub struct BarycentricSurrogate {
    support: Vec<c64>,
    values: Vec<Mat<c64>>,
    coeffs: Vec<c64>,
    rows: usize,
    cols: usize,
}

impl BarycentricSurrogate {
    /// Builds a surrogate; `coeffs` are rescaled to unit 2-norm unless they
    /// already are.
    pub fn new(support: Vec<c64>, values: Vec<Mat<c64>>, coeffs: Vec<c64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Empty("surrogate needs at least one support point"));
        }
        if values.len() != support.len() || coeffs.len() != support.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} support points, {} values, {} coefficients",
                support.len(),
                values.len(),
                coeffs.len()
            )));
        }
        let (rows, cols) = (values[0].nrows(), values[0].ncols());
        if values
            .iter()
            .any(|v| v.nrows() != rows || v.ncols() != cols)
        {
            return Err(Error::DimensionMismatch(
                "support values differ in shape".into(),
            ));
        }
        for (k, z) in support.iter().enumerate() {
            if support[..k].contains(z) {
                return Err(Error::DuplicateFrequency(*z));
            }
        }
        let norm = coeffs.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Backend("barycentric coefficients vanish".into()));
        }
        // rescale only when needed so that stored coefficients round-trip exactly
        let coeffs: Vec<c64> = if (norm - 1.0).abs() > 1e-14 {
            coeffs.into_iter().map(|q| q / norm).collect()
        } else {
            coeffs
        };
        let this = Self {
            support,
            values,
            coeffs,
            rows,
            cols,
        };
        for j in this.weak_nodes() {
            log::warn!(
                "barycentric coefficient {j} is {:e}; the surrogate does not interpolate at that node in the limit sense",
                this.coeffs[j].norm()
            );
        }
        Ok(this)
    }

    pub fn support(&self) -> &[c64] {
        &self.support
    }

    pub fn values(&self) -> &[Mat<c64>] {
        &self.values
    }

    pub fn coeffs(&self) -> &[c64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `(rows, cols)` of the approximated transfer function.
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Indices of nodes whose coefficient is numerically zero.
    pub fn weak_nodes(&self) -> Vec<usize> {
        (0..self.coeffs.len())
            .filter(|&j| self.coeffs[j].norm() <= WEAK_COEFF)
            .collect()
    }

    /// Same support and coefficients, different node values.
    pub fn with_values(&self, values: Vec<Mat<c64>>) -> Result<Self> {
        Self::new(self.support.clone(), values, self.coeffs.clone())
    }

    /// Index of the support point `z` snaps onto, if any.
    pub fn support_index(&self, z: c64) -> Option<usize> {
        self.support
            .iter()
            .position(|&s| (z - s).norm() <= SNAP_TOL * (1.0 + s.norm()))
    }

    pub fn eval(&self, z: c64) -> Result<Mat<c64>> {
        if let Some(j) = self.support_index(z) {
            return Ok(self.values[j].clone());
        }
        let mut num = Mat::<c64>::zeros(self.rows, self.cols);
        let mut den = zero();
        for ((&s, &q), v) in self.support.iter().zip(&self.coeffs).zip(&self.values) {
            let w = q / (z - s);
            den += w;
            num += v * faer::Scale(w);
        }
        if den == zero() {
            return Err(Error::SurrogatePole { z });
        }
        let inv = one() / den;
        Ok(num * faer::Scale(inv))
    }

    /// The barycentric denominator `Q(z)`.
    pub fn eval_denominator(&self, z: c64) -> Result<c64> {
        if let Some(index) = self.support_index(z) {
            return Err(Error::SupportCollision { z, index });
        }
        Ok(self
            .support
            .iter()
            .zip(&self.coeffs)
            .map(|(&s, &q)| q / (z - s))
            .sum())
    }

    /// Greedy error indicator `1 / |Q(z)|`; zero on support points and
    /// infinite at roots of the denominator.
    pub fn indicator(&self, z: c64) -> f64 {
        match self.eval_denominator(z) {
            Ok(q) => 1.0 / q.norm(),
            Err(_) => 0.0,
        }
    }

    /// Finite roots of the Lagrange-form numerator of `Q`, i.e. the points
    /// where `|Q|` vanishes, from the generalized eigenvalues of the arrowhead
    /// pencil
    ///
    /// ```text
    ///   [ 0  q^T     ]       [ 0    ]
    ///   [ 1  diag(z) ] v = t [    I ] v.
    /// ```
    ///
    /// The nodes are centered and rescaled to the unit disk first; the pencil always
    /// has at least two infinite eigenvalues, which are discarded together
    /// with any eigenvalue snapping onto a node.
    pub fn denominator_roots(&self) -> Result<Vec<c64>> {
        let s = self.support.len();
        if s < 2 {
            return Err(Error::Empty(
                "root finding needs at least two support points",
            ));
        }
        let center = self.support.iter().sum::<c64>() / s as f64;
        let scale = self
            .support
            .iter()
            .map(|z| (z - center).norm())
            .fold(0.0, f64::max);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let mut arrow = Mat::<c64>::zeros(s + 1, s + 1);
        let mut mass = Mat::<c64>::zeros(s + 1, s + 1);
        for j in 0..s {
            arrow[(0, j + 1)] = self.coeffs[j];
            arrow[(j + 1, 0)] = one();
            arrow[(j + 1, j + 1)] = (self.support[j] - center) / scale;
            mass[(j + 1, j + 1)] = one();
        }
        let eig = arrow
            .generalized_eigen(&mass)
            .map_err(|e| Error::Backend(format!("generalized eigensolver: {e:?}")))?;
        let (alpha, beta) = (eig.S_a(), eig.S_b());
        let mut roots = Vec::new();
        for k in 0..s + 1 {
            let (a, b) = (alpha[k], beta[k]);
            if b == zero() {
                continue;
            }
            let t = a / b;
            if !(t.re.is_finite() && t.im.is_finite()) || t.norm() > INFINITE_EIG {
                continue;
            }
            let root = center + t * scale;
            if self.support_index(root).is_none() {
                roots.push(root);
            }
        }
        Ok(roots)
    }

    pub fn save_json(&self, path: &Path, estimator: Option<EstimatorAnchor>) -> Result<()> {
        let doc = SurrogateFile::from_surrogate(self, estimator);
        fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<(Self, Option<EstimatorAnchor>)> {
        let doc: SurrogateFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        doc.into_surrogate()
    }
}

/// The latest error estimate of a greedy run and the frequency it was
/// measured at, from which the estimator curve is rebuilt.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorAnchor {
    pub anchor: [f64; 2],
    pub value: f64,
}

impl EstimatorAnchor {
    pub fn new(anchor: c64, value: f64) -> Self {
        Self {
            anchor: [anchor.re, anchor.im],
            value,
        }
    }

    pub fn z(&self) -> c64 {
        c64::new(self.anchor[0], self.anchor[1])
    }
}

const FORMAT_TAG: &str = "barycentric-surrogate";

/// On-disk JSON layout. Complex numbers are `[re, im]` pairs; each value
/// matrix is flattened row-major.
#[derive(Debug, Serialize, Deserialize)]
struct SurrogateFile {
    format: String,
    version: u32,
    rows: usize,
    cols: usize,
    support: Vec<[f64; 2]>,
    coeffs: Vec<[f64; 2]>,
    values: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    estimator: Option<EstimatorAnchor>,
}

impl SurrogateFile {
    fn from_surrogate(s: &BarycentricSurrogate, estimator: Option<EstimatorAnchor>) -> Self {
        let pair = |z: &c64| [z.re, z.im];
        Self {
            format: FORMAT_TAG.into(),
            version: 1,
            rows: s.rows,
            cols: s.cols,
            support: s.support.iter().map(pair).collect(),
            coeffs: s.coeffs.iter().map(pair).collect(),
            values: s
                .values
                .iter()
                .map(|v| {
                    (0..s.rows)
                        .flat_map(|i| (0..s.cols).map(move |j| (i, j)))
                        .map(|(i, j)| pair(&v[(i, j)]))
                        .collect()
                })
                .collect(),
            estimator,
        }
    }

    fn into_surrogate(self) -> Result<(BarycentricSurrogate, Option<EstimatorAnchor>)> {
        if self.format != FORMAT_TAG || self.version != 1 {
            return Err(Error::Surrogate(format!(
                "unsupported format `{}` version {}",
                self.format, self.version
            )));
        }
        let (rows, cols) = (self.rows, self.cols);
        let cplx = |p: &[f64; 2]| c64::new(p[0], p[1]);
        let mut values = Vec::with_capacity(self.values.len());
        for (k, flat) in self.values.iter().enumerate() {
            if flat.len() != rows * cols {
                return Err(Error::Surrogate(format!(
                    "value {k} has {} entries, expected {}",
                    flat.len(),
                    rows * cols
                )));
            }
            values.push(Mat::from_fn(rows, cols, |i, j| cplx(&flat[i * cols + j])));
        }
        let sur = BarycentricSurrogate::new(
            self.support.iter().map(cplx).collect(),
            values,
            self.coeffs.iter().map(cplx).collect(),
        )?;
        Ok((sur, self.estimator))
    }
}

//! High-fidelity descriptor systems `z E x = A x + B u`, `y = C x`.

use std::path::{Path, PathBuf};

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::c64;
use crate::error::{Error, Result};
use crate::linalg::{all_finite, shifted_pencil, CooMatrix, Factorization, Operator};
use crate::mtx;

/// Reciprocal condition estimates of `zE - A` below this are treated as a
/// resonance.
pub const RCOND_THRESHOLD: f64 = 1e-14;

/// A frequency with its sampled transfer-function value.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencySample {
    pub z: c64,
    pub value: Mat<c64>,
}

impl FrequencySample {
    pub fn new(z: c64, value: Mat<c64>) -> Result<Self> {
        if !all_finite(value.as_ref()) {
            return Err(Error::Backend(format!(
                "non-finite sample value at z = {}{:+}i",
                z.re, z.im
            )));
        }
        Ok(Self { z, value })
    }
}

/// Anything that can produce transfer-function samples.
pub trait TransferOracle {
    /// `(p, m)`: output and input dimensions.
    fn shape(&self) -> (usize, usize);

    fn sample(&self, z: c64) -> Result<Mat<c64>>;
}

impl<T: TransferOracle + ?Sized> TransferOracle for &T {
    fn shape(&self) -> (usize, usize) {
        (**self).shape()
    }

    fn sample(&self, z: c64) -> Result<Mat<c64>> {
        (**self).sample(z)
    }
}

/// Adapts a closure into a [`TransferOracle`].
pub struct FnOracle<F> {
    shape: (usize, usize),
    f: F,
}

impl<F: Fn(c64) -> Result<Mat<c64>>> FnOracle<F> {
    pub fn new(p: usize, m: usize, f: F) -> Self {
        Self { shape: (p, m), f }
    }
}

impl<F: Fn(c64) -> Result<Mat<c64>>> TransferOracle for FnOracle<F> {
    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn sample(&self, z: c64) -> Result<Mat<c64>> {
        (self.f)(z)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorSystem {
    e: Operator,
    a: Operator,
    b: Mat<c64>,
    c: Mat<c64>,
}

impl DescriptorSystem {
    pub fn new(e: Operator, a: Operator, b: Mat<c64>, c: Mat<c64>) -> Result<Self> {
        let n = a.nrows();
        let check = |ok: bool, what: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(what))
            }
        };
        check(n > 0, "A is empty".into())?;
        check(
            a.ncols() == n,
            format!("A is {}x{}, expected square", n, a.ncols()),
        )?;
        check(
            e.nrows() == n && e.ncols() == n,
            format!("E is {}x{}, A is {n}x{n}", e.nrows(), e.ncols()),
        )?;
        check(
            b.nrows() == n && b.ncols() > 0,
            format!("B is {}x{}, expected {n} rows", b.nrows(), b.ncols()),
        )?;
        check(
            c.ncols() == n && c.nrows() > 0,
            format!("C is {}x{}, expected {n} columns", c.nrows(), c.ncols()),
        )?;
        Ok(Self { e, a, b, c })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn e(&self) -> &Operator {
        &self.e
    }

    pub fn a(&self) -> &Operator {
        &self.a
    }

    pub fn b(&self) -> &Mat<c64> {
        &self.b
    }

    pub fn c(&self) -> &Mat<c64> {
        &self.c
    }

    /// Factors `zE - A`, failing with [`Error::Resonance`] when the pencil is
    /// numerically singular at `z`.
    pub fn factor_at(&self, z: c64) -> Result<Factorization> {
        let k = shifted_pencil(z, &self.e, &self.a);
        let f = Factorization::new(&k)?;
        if !(f.rcond() >= RCOND_THRESHOLD) {
            return Err(Error::Resonance {
                z,
                rcond: f.rcond(),
            });
        }
        Ok(f)
    }

    /// Solves `(zE - A) X = rhs`.
    pub fn solve(&self, z: c64, rhs: &Mat<c64>) -> Result<Mat<c64>> {
        let f = self.factor_at(z)?;
        let mut x = rhs.clone();
        f.solve_in_place(x.as_mut());
        if !all_finite(x.as_ref()) {
            return Err(Error::Resonance {
                z,
                rcond: f.rcond(),
            });
        }
        Ok(x)
    }

    /// State transfer function `G(z) = (zE - A)^-1 B`.
    pub fn eval_state_transfer(&self, z: c64) -> Result<Mat<c64>> {
        self.solve(z, &self.b)
    }

    /// Transfer function `H(z) = C (zE - A)^-1 B`.
    pub fn eval_transfer(&self, z: c64) -> Result<Mat<c64>> {
        Ok(&self.c * self.eval_state_transfer(z)?)
    }

    /// Loads `E`, `A`, `B`, `C` from Matrix Market files. A missing `E` means
    /// the identity. `B` and `C` are always stored densely.
    pub fn load_matrix_market(e: Option<&Path>, a: &Path, b: &Path, c: &Path) -> Result<Self> {
        let a = mtx::read_mtx(a)?.into_operator();
        let e = match e {
            Some(p) => mtx::read_mtx(p)?.into_operator(),
            None => Operator::Identity(a.nrows()),
        };
        let b = mtx::read_mtx(b)?.into_dense();
        let c = mtx::read_mtx(c)?.into_dense();
        Self::new(e, a, b, c)
    }

    /// Loads `<prefix>.E.mtx`, `<prefix>.A.mtx`, `<prefix>.B.mtx` and
    /// `<prefix>.C.mtx`; the `E` file is optional.
    pub fn load_prefix(prefix: &Path) -> Result<Self> {
        let [e, a, b, c] = system_paths(prefix);
        let e = e.exists().then_some(e);
        for p in [&a, &b, &c] {
            if !p.exists() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("missing system file {}", p.display()),
                )));
            }
        }
        Self::load_matrix_market(e.as_deref(), &a, &b, &c)
    }

    /// Writes the system with the `<prefix>.X.mtx` naming convention. Sparse
    /// operators go to coordinate files, dense ones to array files, and an
    /// identity `E` is omitted.
    pub fn write_prefix(&self, prefix: &Path) -> Result<()> {
        let [e, a, b, c] = system_paths(prefix);
        let write_op = |path: &Path, op: &Operator| match op {
            Operator::Identity(_) => Ok(()),
            Operator::Dense(m) => mtx::write_array(path, m),
            Operator::Sparse(s) => mtx::write_coordinate(path, s),
        };
        write_op(&e, &self.e)?;
        write_op(&a, &self.a)?;
        mtx::write_array(&b, &self.b)?;
        mtx::write_array(&c, &self.c)
    }

    /// Synthetic system with `E = I`, `A = diag(poles)` and seeded random `B`,
    /// `C` whose entries have real and imaginary parts uniform in `[-1, 1)`.
    pub fn make_synthetic(poles: &[c64], seed: u64, m: usize, p: usize) -> Result<Self> {
        if poles.is_empty() {
            return Err(Error::Empty("synthetic system needs at least one pole"));
        }
        for (k, a) in poles.iter().enumerate() {
            if poles[..k].contains(a) {
                return Err(Error::DuplicatePole(*a));
            }
        }
        let n = poles.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let b = Mat::from_fn(n, m, |_, _| draw());
        let c = Mat::from_fn(p, n, |_, _| draw());
        Self::new(
            Operator::Identity(n),
            Operator::Sparse(CooMatrix::diagonal(poles)),
            b,
            c,
        )
    }
}

impl TransferOracle for DescriptorSystem {
    fn shape(&self) -> (usize, usize) {
        (self.outputs(), self.inputs())
    }

    fn sample(&self, z: c64) -> Result<Mat<c64>> {
        self.eval_transfer(z)
    }
}

pub fn system_paths(prefix: &Path) -> [PathBuf; 4] {
    let with = |tag: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(format!(".{tag}.mtx"));
        PathBuf::from(s)
    };
    [with("E"), with("A"), with("B"), with("C")]
}

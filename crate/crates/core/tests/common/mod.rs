#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use loewner_greedy::{c64, DescriptorSystem, Mat, Result, TransferOracle};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

/// `n` lightly damped poles with log-uniform frequencies in the range, plus
/// random `B` and `C`.
pub fn damped_system(n: usize, seed: u64, io: usize, f_min: f64, f_max: f64) -> DescriptorSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let poles: Vec<c64> = (0..n)
        .map(|_| {
            let f = rng.random_range(f_min.ln()..f_max.ln()).exp();
            let damping = rng.random_range(0.02..0.1);
            c(-damping * f, f)
        })
        .collect();
    DescriptorSystem::make_synthetic(&poles, seed, io, io).unwrap()
}

/// Counts every oracle call, including the ones that fail.
pub struct Counting<O> {
    pub inner: O,
    pub calls: AtomicUsize,
}

impl<O> Counting<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<O: TransferOracle> TransferOracle for Counting<O> {
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn sample(&self, z: c64) -> Result<Mat<c64>> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.sample(z)
    }
}

/// Benchmark directory: `$GREEDY_LOEWNER_DATA`, else `data/` at the
/// workspace root.
pub fn data_dir() -> PathBuf {
    std::env::var_os("GREEDY_LOEWNER_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

/// `<data>/<name>.{A,B,C}.mtx` (and optionally `E`), if present.
pub fn benchmark(name: &str) -> Option<DescriptorSystem> {
    let prefix = data_dir().join(name);
    let [_, a, b, cc] = loewner_greedy::system::system_paths(&prefix);
    if !(a.exists() && b.exists() && cc.exists()) {
        return None;
    }
    Some(DescriptorSystem::load_prefix(&prefix).expect("benchmark files present but unreadable"))
}

type NaC = nalgebra::Complex<f64>;

fn to_na(z: c64) -> NaC {
    NaC::new(z.re, z.im)
}

/// Coefficients (lowest degree first) of `prod_k (z - r_k)`.
fn poly_from_roots(roots: &[c64]) -> Vec<NaC> {
    let mut p = vec![NaC::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![NaC::new(0.0, 0.0); p.len() + 1];
        for (i, &a) in p.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= a * to_na(r);
        }
        p = next;
    }
    p
}

/// Roots of `sum_j q_j prod_{k != j} (z - z_k)` from the companion matrix of
/// the expanded polynomial. Leading coefficients below `tiny` relative to
/// the largest are dropped first.
pub fn numerator_roots(support: &[c64], q: &[c64], tiny: f64) -> Vec<c64> {
    let s = support.len();
    let mut coeffs = vec![NaC::new(0.0, 0.0); s];
    for (j, &qj) in q.iter().enumerate().take(s) {
        let others: Vec<c64> = (0..s).filter(|&k| k != j).map(|k| support[k]).collect();
        for (i, a) in poly_from_roots(&others).into_iter().enumerate() {
            coeffs[i] += to_na(qj) * a;
        }
    }
    let scale = coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
    while coeffs.len() > 1 && coeffs.last().unwrap().norm() <= tiny * scale {
        coeffs.pop();
    }
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let mut comp = DMatrix::<NaC>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = NaC::new(1.0, 0.0);
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let eig = if deg == 1 {
        vec![comp[(0, 0)]]
    } else {
        comp.eigenvalues()
            .expect("complex Schur form is triangular")
            .iter()
            .copied()
            .collect()
    };
    eig.into_iter().map(|e| c(e.re, e.im)).collect()
}

/// Largest distance in a greedy nearest-neighbor matching, or infinity when
/// the sizes differ.
pub fn multiset_distance(a: &[c64], b: &[c64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

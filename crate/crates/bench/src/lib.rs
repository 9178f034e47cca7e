//! Fixtures shared by the kernel benchmarks.

use loewner_greedy::greedy::build_test_grid;
use loewner_greedy::{
    c64, fit_loewner, partition_samples, BarycentricSurrogate, CooMatrix, DescriptorSystem,
    FrequencySample, GreedyConfig, Mat, Operator, TerminationRule, TransferOracle,
};

pub const F_MIN: f64 = 1.0;
pub const F_MAX: f64 = 100.0;

/// Diagonal system with `n` lightly damped poles spread log-uniformly over the band.
pub fn diagonal_system(n: usize) -> DescriptorSystem {
    let ratio = (F_MAX / F_MIN).ln();
    let poles: Vec<c64> = (0..n)
        .map(|k| {
            let w = F_MIN * (ratio * (k as f64 + 0.5) / n as f64).exp();
            c64::new(-0.03 * w, w)
        })
        .collect();
    DescriptorSystem::make_synthetic(&poles, 11, 2, 2).expect("distinct poles")
}

/// RLC ladder with `n` states: tridiagonal sparse `A`, one input at the first
/// node and one output at the last.
pub fn ladder(n: usize) -> DescriptorSystem {
    let mut entries = Vec::with_capacity(3 * n);
    for k in 0..n {
        entries.push((k, k, c64::new(-2.0, 0.0)));
        if k + 1 < n {
            entries.push((k, k + 1, c64::new(1.0, 0.0)));
            entries.push((k + 1, k, c64::new(-1.0, 0.0)));
        }
    }
    let a = CooMatrix::new(n, n, entries).expect("in range");
    let b = Mat::from_fn(n, 1, |i, _| c64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0));
    let c = Mat::from_fn(1, n, |_, j| {
        c64::new(if j + 1 == n { 1.0 } else { 0.0 }, 0.0)
    });
    DescriptorSystem::new(Operator::Identity(n), Operator::Sparse(a), b, c)
        .expect("consistent shapes")
}

/// `count` samples of `sys` on a log-uniform grid.
pub fn samples(sys: &DescriptorSystem, count: usize) -> Vec<FrequencySample> {
    let ratio = (F_MAX / F_MIN).ln();
    (0..count)
        .map(|k| {
            let f = F_MIN * (ratio * (k as f64 + 0.37) / count as f64).exp();
            let z = c64::new(0.0, f);
            FrequencySample::new(z, sys.sample(z).expect("off resonance")).expect("finite")
        })
        .collect()
}

/// Loewner surrogate built from `count` samples.
pub fn surrogate(sys: &DescriptorSystem, count: usize) -> BarycentricSurrogate {
    fit_loewner(&partition_samples(&samples(sys, count)).expect("distinct")).expect("fit")
}

/// The default-size test grid over the band.
pub fn grid() -> Vec<c64> {
    build_test_grid(&GreedyConfig::new(F_MIN, F_MAX, TerminationRule::Lookahead))
}

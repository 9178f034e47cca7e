//! Greedy sampling driver.
//!
//! Starting from one sample, each iteration fits a barycentric surrogate,
//! asks the termination rule whether the surrogate is good enough, and
//! otherwise samples the oracle where `1 / |Q|` is largest on a fixed
//! geometric test grid. With [`TerminationRule::LookaheadMemory`] the loop
//! only stops after the look-ahead check passed several times in a row.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::barycentric::BarycentricSurrogate;
use crate::c64;
use crate::error::{Error, Result};
use crate::fitters::{fit_loewner, fit_mri, partition_samples};
use crate::linalg::{all_finite, frobenius};
use crate::system::{FrequencySample, TransferOracle};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fitter {
    Loewner,
    Mri,
}

impl Fitter {
    pub fn fit(self, samples: &[FrequencySample]) -> Result<BarycentricSurrogate> {
        match self {
            Fitter::Loewner => fit_loewner(&partition_samples(samples)?),
            Fitter::Mri => fit_mri(samples),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TerminationRule {
    /// Stop once `max_samples` training samples are available.
    MaxCount,
    /// Stop when the next greedy point lies closer than `min_gap` (in
    /// `log10(f)`) to an existing sample.
    Density { min_gap: f64 },
    /// Single look-ahead error check at the next greedy point.
    Lookahead,
    /// Look-ahead check that must pass `memory` consecutive times.
    LookaheadMemory { memory: usize },
    /// Maximum error over the `size` largest local maxima of the indicator.
    Batch { size: usize },
    /// Maximum error over `count` log-uniform points drawn once up front.
    Randomized { count: usize },
}

impl TerminationRule {
    pub fn name(&self) -> &'static str {
        match self {
            TerminationRule::MaxCount => "max_count",
            TerminationRule::Density { .. } => "density",
            TerminationRule::Lookahead => "lookahead",
            TerminationRule::LookaheadMemory { .. } => "lookahead_memory",
            TerminationRule::Batch { .. } => "batch",
            TerminationRule::Randomized { .. } => "randomized",
        }
    }

    fn memory_depth(&self) -> usize {
        match self {
            TerminationRule::LookaheadMemory { memory } => *memory,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyConfig {
    /// Frequencies are `z = i f` with `f` in `[f_min, f_max]`.
    pub f_min: f64,
    pub f_max: f64,
    pub grid_size: usize,
    pub tol: f64,
    pub delta: f64,
    pub fitter: Fitter,
    pub termination: TerminationRule,
    /// Safety cap on training samples; the stopping point of `MaxCount`.
    pub max_samples: usize,
    pub seed: u64,
}

impl GreedyConfig {
    pub const DEFAULT_GRID_SIZE: usize = 10_000;
    pub const DEFAULT_TOL: f64 = 1e-3;
    pub const DEFAULT_DELTA: f64 = 1e-8;
    pub const DEFAULT_MAX_SAMPLES: usize = 500;

    pub fn new(f_min: f64, f_max: f64, termination: TerminationRule) -> Self {
        Self {
            f_min,
            f_max,
            grid_size: Self::DEFAULT_GRID_SIZE,
            tol: Self::DEFAULT_TOL,
            delta: Self::DEFAULT_DELTA,
            fitter: Fitter::Loewner,
            termination,
            max_samples: Self::DEFAULT_MAX_SAMPLES,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| {
            Err(Error::Config {
                line: 0,
                key: key.into(),
                msg,
            })
        };
        if !(self.f_min > 0.0 && self.f_min.is_finite()) {
            return bad("f_min", format!("must be positive, got {}", self.f_min));
        }
        if !(self.f_max > self.f_min && self.f_max.is_finite()) {
            return bad("f_max", format!("must exceed f_min = {}", self.f_min));
        }
        if self.grid_size < 2 {
            return bad("grid_size", "must be at least 2".into());
        }
        if !(self.tol > 0.0) {
            return bad("tol", "must be positive".into());
        }
        if !(self.delta >= 0.0) {
            return bad("delta", "must be nonnegative".into());
        }
        if self.max_samples < 1 {
            return bad("max_samples", "must be at least 1".into());
        }
        match self.termination {
            TerminationRule::Density { min_gap } if !(min_gap > 0.0) => {
                bad("min_gap", "must be positive".into())
            }
            TerminationRule::LookaheadMemory { memory: 0 } => {
                bad("memory", "must be at least 1".into())
            }
            TerminationRule::Batch { size: 0 } => bad("batch", "must be at least 1".into()),
            TerminationRule::Randomized { count: 0 } => bad("random", "must be at least 1".into()),
            _ => Ok(()),
        }
    }

    /// `i sqrt(f_min f_max)`.
    pub fn midpoint(&self) -> c64 {
        c64::new(0.0, (self.f_min * self.f_max).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// The error-based termination check passed.
    Converged,
    /// `MaxCount` reached its sample budget.
    MaxCount,
    /// `Density` found the next point too close to an existing sample.
    Density,
    /// The `max_samples` safety cap stopped an error-based rule.
    SafetyCap,
}

impl StopReason {
    /// Whether the run ended by its own criterion rather than the safety cap.
    pub fn is_criterion(self) -> bool {
        self != StopReason::SafetyCap
    }

    pub fn name(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxCount => "max_count",
            StopReason::Density => "density",
            StopReason::SafetyCap => "safety_cap",
        }
    }
}

/// One greedy iteration: the surrogate fitted to `samples` training samples
/// and what the termination rule made of it.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    /// Training samples used by this iteration's surrogate.
    pub samples: usize,
    /// The most recently added training frequency.
    pub latest: c64,
    /// Where the error estimate was taken (`z_{S+1}` for look-ahead, the
    /// worst test point otherwise).
    pub anchor: Option<c64>,
    pub estimate: Option<f64>,
    pub flag: Option<bool>,
    /// Consecutive passed checks after this iteration.
    pub memory: usize,
    /// Points evaluated for the error check.
    pub test_points: Vec<c64>,
    /// Successful oracle calls made in this iteration.
    pub oracle_calls: usize,
    /// Of those, the calls made to evaluate the error.
    pub test_calls: usize,
    /// Whether one of this iteration's test samples became a training sample.
    pub reused_test_sample: bool,
    /// Oracle calls that hit a resonance.
    pub failed_calls: usize,
    /// Successful oracle calls so far, including the initial ones.
    pub cumulative_calls: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct GreedyTrace {
    pub records: Vec<IterationRecord>,
    /// Training samples in the order they were added.
    pub samples: Vec<FrequencySample>,
    pub surrogate: BarycentricSurrogate,
    pub reason: StopReason,
    pub rule: TerminationRule,
    /// Fixed test points of the randomized rule that could be evaluated.
    pub random_points: Vec<c64>,
    /// Successful oracle calls spent before the first iteration on random
    /// test points.
    pub setup_calls: usize,
    /// Resonant oracle calls before the first iteration.
    pub setup_failed: usize,
    /// Frequencies skipped because the oracle reported a resonance.
    pub resonances: Vec<c64>,
}

impl GreedyTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Successful oracle calls over the whole run.
    pub fn oracle_calls(&self) -> usize {
        self.records.last().map_or(0, |r| r.cumulative_calls)
    }

    pub fn failed_calls(&self) -> usize {
        self.setup_failed + self.records.iter().map(|r| r.failed_calls).sum::<usize>()
    }

    /// The last error estimate and where it was taken.
    pub fn last_estimate(&self) -> Option<(c64, f64)> {
        self.records
            .iter()
            .rev()
            .find_map(|r| Some((r.anchor?, r.estimate?)))
    }
}

/// `grid_size` points `i f` with `f` geometrically spaced over the range,
/// endpoints included.
pub fn build_test_grid(cfg: &GreedyConfig) -> Vec<c64> {
    let n = cfg.grid_size;
    let ratio = cfg.f_max / cfg.f_min;
    (0..n)
        .map(|k| {
            let f = match k {
                0 => cfg.f_min,
                _ if k == n - 1 => cfg.f_max,
                _ => cfg.f_min * ratio.powf(k as f64 / (n - 1) as f64),
            };
            c64::new(0.0, f)
        })
        .collect()
}

/// `||approx - exact||_F / (||exact||_F + delta)`.
pub fn adjusted_relative_error(exact: &Mat<c64>, approx: &Mat<c64>, delta: f64) -> f64 {
    frobenius((approx - exact).as_ref()) / (frobenius(exact.as_ref()) + delta)
}

fn bits(z: c64) -> (u64, u64) {
    (z.re.to_bits(), z.im.to_bits())
}

/// Indicator values on the grid; `None` marks excluded points.
fn masked_indicator(
    sur: &BarycentricSurrogate,
    grid: &[c64],
    excluded: &[c64],
) -> Vec<Option<f64>> {
    let excluded: HashSet<(u64, u64)> = excluded.iter().copied().map(bits).collect();
    grid.iter()
        .map(|&z| (!excluded.contains(&bits(z))).then(|| sur.indicator(z)))
        .collect()
}

/// Grid point maximizing `1 / |Q|` among those not in `sampled` (exact
/// match); ties go to the lowest grid index.
pub fn next_point(sur: &BarycentricSurrogate, grid: &[c64], sampled: &[c64]) -> Result<c64> {
    if grid.is_empty() {
        return Err(Error::Empty("test grid is empty"));
    }
    let values = masked_indicator(sur, grid, sampled);
    argmax(&values).map(|k| grid[k]).ok_or(Error::GridExhausted)
}

fn argmax(values: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values.iter().enumerate() {
        if let Some(v) = *v {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
    }
    best.map(|(k, _)| k)
}

/// The `n` largest discrete local maxima of `1 / |Q|` on the grid, in
/// decreasing order. A point is a local maximum when it beats its left
/// neighbor and is not beaten by its right one; excluded or missing
/// neighbors do not count. The first entry always equals [`next_point`].
pub fn batch_test_points(
    sur: &BarycentricSurrogate,
    grid: &[c64],
    sampled: &[c64],
    n: usize,
) -> Result<Vec<c64>> {
    if grid.is_empty() {
        return Err(Error::Empty("test grid is empty"));
    }
    let values = masked_indicator(sur, grid, sampled);
    let mut maxima: Vec<(usize, f64)> = (0..grid.len())
        .filter_map(|k| {
            let v = values[k]?;
            let left = k.checked_sub(1).and_then(|l| values[l]);
            let right = values.get(k + 1).copied().flatten();
            let ok = left.is_none_or(|l| v > l) && right.is_none_or(|r| v >= r);
            ok.then_some((k, v))
        })
        .collect();
    if maxima.is_empty() {
        let k = argmax(&values).ok_or(Error::GridExhausted)?;
        return Ok(vec![grid[k]]);
    }
    maxima.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(maxima
        .into_iter()
        .take(n.max(1))
        .map(|(k, _)| grid[k])
        .collect())
}

/// `count` points `i f` with `log f` uniform over the configured range.
pub fn random_test_points(cfg: &GreedyConfig, count: usize) -> Vec<c64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = (cfg.f_min.ln(), cfg.f_max.ln());
    (0..count)
        .map(|_| {
            let f: f64 = rng.random_range(lo..=hi).exp();
            c64::new(0.0, f.clamp(cfg.f_min, cfg.f_max))
        })
        .collect()
}

/// Rescaled indicator `eta(z) = estimate * |Q(anchor)| / |Q(z)|`, which
/// equals `estimate` at the anchor. Zero on support points.
pub fn estimator_curve(
    sur: &BarycentricSurrogate,
    estimate: f64,
    anchor: c64,
    grid: &[c64],
) -> Result<Vec<(c64, f64)>> {
    let qa = sur.eval_denominator(anchor)?.norm();
    Ok(grid
        .iter()
        .map(|&z| {
            let eta = match sur.eval_denominator(z) {
                Ok(q) => estimate * (qa / q.norm()),
                Err(_) => 0.0,
            };
            (z, eta)
        })
        .collect())
}

struct Driver<'a, O> {
    oracle: &'a O,
    cfg: &'a GreedyConfig,
    grid: Vec<c64>,
    samples: Vec<FrequencySample>,
    resonances: Vec<c64>,
    calls: usize,
}

impl<O: TransferOracle> Driver<'_, O> {
    /// Samples the oracle. Resonances (including non-finite values) are
    /// recorded and reported as `Ok(None)`.
    fn try_sample(&mut self, z: c64, failed: &mut usize) -> Result<Option<FrequencySample>> {
        match self.oracle.sample(z) {
            Ok(v) if all_finite(v.as_ref()) => {
                self.calls += 1;
                Ok(Some(FrequencySample { z, value: v }))
            }
            Ok(_) | Err(Error::Resonance { .. }) => {
                log::warn!("oracle resonates at z = {}{:+}i; skipping", z.re, z.im);
                *failed += 1;
                self.resonances.push(z);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn excluded(&self) -> Vec<c64> {
        self.samples
            .iter()
            .map(|s| s.z)
            .chain(self.resonances.iter().copied())
            .collect()
    }

    /// Next greedy point that the oracle can evaluate.
    fn sample_next(
        &mut self,
        sur: &BarycentricSurrogate,
        failed: &mut usize,
    ) -> Result<FrequencySample> {
        loop {
            let z = next_point(sur, &self.grid, &self.excluded())?;
            if let Some(s) = self.try_sample(z, failed)? {
                return Ok(s);
            }
        }
    }

    fn first_sample(&mut self, failed: &mut usize) -> Result<FrequencySample> {
        let mid = self.cfg.midpoint();
        if let Some(s) = self.try_sample(mid, failed)? {
            return Ok(s);
        }
        // fall back to grid points by distance (in index) from the middle
        let n = self.grid.len();
        let centre = n / 2;
        for d in 0..n {
            for k in [centre.checked_sub(d), (d > 0).then_some(centre + d)]
                .into_iter()
                .flatten()
            {
                if k < n {
                    if let Some(s) = self.try_sample(self.grid[k], failed)? {
                        return Ok(s);
                    }
                }
            }
        }
        Err(Error::GridExhausted)
    }

    fn estimate(&self, sur: &BarycentricSurrogate, tests: &[FrequencySample]) -> (c64, f64) {
        let mut worst = (tests[0].z, f64::NEG_INFINITY);
        for t in tests {
            let err = match sur.eval(t.z) {
                Ok(approx) => adjusted_relative_error(&t.value, &approx, self.cfg.delta),
                Err(_) => f64::INFINITY,
            };
            // NaN compares false and would be lost, so fold it into infinity
            let err = if err.is_nan() { f64::INFINITY } else { err };
            if err > worst.1 {
                worst = (t.z, err);
            }
        }
        worst
    }
}

/// Runs the greedy loop against `oracle`.
pub fn run_greedy<O: TransferOracle>(oracle: &O, cfg: &GreedyConfig) -> Result<GreedyTrace> {
    cfg.validate()?;
    let mut d = Driver {
        oracle,
        cfg,
        grid: build_test_grid(cfg),
        samples: Vec::new(),
        resonances: Vec::new(),
        calls: 0,
    };
    let rule = cfg.termination;
    let memory_depth = rule.memory_depth();

    let mut setup_failed = 0;
    let first = d.first_sample(&mut setup_failed)?;
    d.samples.push(first);

    let mut random_tests = Vec::new();
    if let TerminationRule::Randomized { count } = rule {
        for z in random_test_points(cfg, count) {
            if let Some(s) = d.try_sample(z, &mut setup_failed)? {
                random_tests.push(s);
            }
        }
        if random_tests.is_empty() {
            return Err(Error::Empty("every random test point resonates"));
        }
    }
    let setup_calls = d.calls - 1;

    let mut records = Vec::new();
    let mut n_memory = 0usize;
    let (surrogate, reason) = loop {
        let started = Instant::now();
        let calls_before = d.calls;
        let mut failed = 0;
        let sur = cfg.fitter.fit(&d.samples)?;
        let s_count = d.samples.len();
        let mut rec = IterationRecord {
            iteration: records.len() + 1,
            samples: s_count,
            latest: d.samples[s_count - 1].z,
            anchor: None,
            estimate: None,
            flag: None,
            memory: n_memory,
            test_points: Vec::new(),
            oracle_calls: 0,
            test_calls: 0,
            reused_test_sample: false,
            failed_calls: 0,
            cumulative_calls: 0,
            elapsed: Duration::ZERO,
        };

        let mut stop = None;
        let mut addition = None;
        if s_count >= cfg.max_samples {
            stop = Some(if rule == TerminationRule::MaxCount {
                StopReason::MaxCount
            } else {
                StopReason::SafetyCap
            });
        } else {
            match rule {
                TerminationRule::MaxCount => addition = Some(d.sample_next(&sur, &mut failed)?),
                TerminationRule::Density { min_gap } => loop {
                    let z = next_point(&sur, &d.grid, &d.excluded())?;
                    let gap = d
                        .samples
                        .iter()
                        .map(|s| (z.im.log10() - s.z.im.log10()).abs())
                        .fold(f64::INFINITY, f64::min);
                    if gap < min_gap {
                        stop = Some(StopReason::Density);
                        break;
                    }
                    if let Some(s) = d.try_sample(z, &mut failed)? {
                        addition = Some(s);
                        break;
                    }
                },
                TerminationRule::Lookahead | TerminationRule::LookaheadMemory { .. } => {
                    let test = d.sample_next(&sur, &mut failed)?;
                    let (anchor, eps) = d.estimate(&sur, std::slice::from_ref(&test));
                    let flag = eps < cfg.tol;
                    n_memory = if flag { n_memory + 1 } else { 0 };
                    rec.anchor = Some(anchor);
                    rec.estimate = Some(eps);
                    rec.flag = Some(flag);
                    rec.test_points = vec![test.z];
                    rec.test_calls = 1;
                    if n_memory >= memory_depth {
                        stop = Some(StopReason::Converged);
                    } else {
                        rec.reused_test_sample = true;
                        addition = Some(test);
                    }
                }
                TerminationRule::Batch { size } => {
                    let points = batch_test_points(&sur, &d.grid, &d.excluded(), size)?;
                    let mut tests = Vec::with_capacity(points.len());
                    for &z in &points {
                        if let Some(s) = d.try_sample(z, &mut failed)? {
                            tests.push(s);
                        }
                    }
                    rec.test_points = tests.iter().map(|t| t.z).collect();
                    rec.test_calls = tests.len();
                    if tests.is_empty() {
                        // every candidate resonated, so there is nothing to test
                        addition = Some(d.sample_next(&sur, &mut failed)?);
                    } else {
                        let (anchor, eps) = d.estimate(&sur, &tests);
                        let flag = eps < cfg.tol;
                        n_memory = if flag { n_memory + 1 } else { 0 };
                        rec.anchor = Some(anchor);
                        rec.estimate = Some(eps);
                        rec.flag = Some(flag);
                        if n_memory >= memory_depth {
                            stop = Some(StopReason::Converged);
                        } else if tests[0].z == points[0] {
                            rec.reused_test_sample = true;
                            addition = Some(tests.swap_remove(0));
                        } else {
                            addition = Some(d.sample_next(&sur, &mut failed)?);
                        }
                    }
                }
                TerminationRule::Randomized { .. } => {
                    let (anchor, eps) = d.estimate(&sur, &random_tests);
                    let flag = eps < cfg.tol;
                    n_memory = if flag { n_memory + 1 } else { 0 };
                    rec.anchor = Some(anchor);
                    rec.estimate = Some(eps);
                    rec.flag = Some(flag);
                    if n_memory >= memory_depth {
                        stop = Some(StopReason::Converged);
                    } else {
                        addition = Some(d.sample_next(&sur, &mut failed)?);
                    }
                }
            }
        }

        rec.memory = n_memory;
        rec.oracle_calls = d.calls - calls_before;
        rec.failed_calls = failed;
        rec.cumulative_calls = d.calls;
        rec.elapsed = started.elapsed();
        log::debug!(
            "iteration {}: S = {}, estimate = {:?}, flag = {:?}",
            rec.iteration,
            rec.samples,
            rec.estimate,
            rec.flag
        );
        records.push(rec);

        if let Some(reason) = stop {
            break (sur, reason);
        }
        d.samples
            .push(addition.expect("a non-terminal iteration adds a sample"));
    };

    Ok(GreedyTrace {
        records,
        samples: d.samples,
        surrogate,
        reason,
        rule,
        random_points: random_tests.iter().map(|t| t.z).collect(),
        setup_calls,
        setup_failed,
        resonances: d.resonances,
    })
}

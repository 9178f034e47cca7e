//! Acceptance suite: one line per criterion. The benchmark criteria print
//! SKIP when their Matrix Market files are not in the data directory.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{benchmark, c, damped_system, multiset_distance, numerator_roots, Counting};
use loewner_greedy::fitters::{fit_loewner, partition_samples};
use loewner_greedy::greedy::build_test_grid;
use loewner_greedy::report::{
    ledger_csv, max_error, samples_csv, timestamp_line, validation_sweep,
};
use loewner_greedy::verify::{check_error_identity, check_residual_scaling, random_check_points};
use loewner_greedy::{
    c64, run_greedy, BarycentricSurrogate, DescriptorSystem, Fitter, FrequencySample, GreedyConfig,
    GreedyTrace, Mat, StopReason, TerminationRule,
};
use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

/// Surrogates fitted at every iteration of `trace`.
fn iteration_surrogates(trace: &GreedyTrace, fitter: Fitter) -> Vec<BarycentricSurrogate> {
    trace
        .records
        .iter()
        .map(|r| fitter.fit(&trace.samples[..r.samples]).unwrap())
        .collect()
}

const RANGE: (f64, f64) = (1.0, 100.0);

/// One seeded system with the surrogates of every greedy iteration.
struct VerifyCase {
    sys: DescriptorSystem,
    /// Loewner surrogates, one per iteration of a memory-2 run.
    loewner: Vec<BarycentricSurrogate>,
    /// MRI surrogates, one per iteration of a 12-sample run.
    mri: Vec<BarycentricSurrogate>,
}

/// Five seeded systems of orders 8, 20 and 50, sampled greedily with both
/// fitters.
fn verify_cases() -> Vec<VerifyCase> {
    let orders = [8, 20, 50, 8, 20];
    orders
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let sys = damped_system(n, k as u64 + 1, 2, RANGE.0, RANGE.1);
            let mut cfg = GreedyConfig::new(
                RANGE.0,
                RANGE.1,
                TerminationRule::LookaheadMemory { memory: 2 },
            );
            cfg.grid_size = 2000;
            cfg.max_samples = 80;
            let loewner = iteration_surrogates(&run_greedy(&sys, &cfg).unwrap(), Fitter::Loewner);

            cfg.fitter = Fitter::Mri;
            cfg.termination = TerminationRule::MaxCount;
            cfg.max_samples = 12;
            let mri = iteration_surrogates(&run_greedy(&sys, &cfg).unwrap(), Fitter::Mri);
            VerifyCase { sys, loewner, mri }
        })
        .collect()
}

/// Normalized residual constant below which a surrogate reproduces the
/// state exactly and `rho |Q|` is pure roundoff.
const EXACT_GAMMA: f64 = 1e-10;

fn criterion_1(cases: &[VerifyCase]) -> Outcome {
    let (mut spread, mut gamma, mut identity) = (0.0f64, 0.0f64, 0.0f64);
    let (mut count, mut exact, mut exact_residual) = (0, 0, 0.0f64);
    for (k, case) in cases.iter().enumerate() {
        for (i, sur) in case.loewner.iter().chain(&case.mri).enumerate() {
            let zs = random_check_points(sur, RANGE.0, RANGE.1, 100, (k * 1000 + i) as u64);
            let r = check_residual_scaling(&case.sys, sur, &zs).unwrap();
            count += 1;
            if r.gamma_formula <= EXACT_GAMMA {
                // the constant is zero, so only its size can be checked
                exact += 1;
                exact_residual = exact_residual.max(r.gamma_estimate);
                continue;
            }
            spread = spread.max(r.max_relative_spread);
            gamma = gamma.max(r.gamma_relative_error());
            identity = identity.max(r.identity_error);
        }
    }
    verdict(
        spread <= 1e-8 && gamma <= 1e-10 && exact_residual <= EXACT_GAMMA,
        format!(
            "{count} surrogates: max spread of rho*|Q| {spread:.2e} (<= 1e-8), gamma mismatch {gamma:.2e} \
             (<= 1e-10), identity residual {identity:.2e} (reported only); {exact} exact surrogates with rho*|Q| <= \
             {exact_residual:.1e}"
        ),
    )
}

/// Checked on the surrogate halfway through each Loewner run and on the
/// final MRI surrogate: once the surrogate is accurate to `eps`, the
/// computed error itself carries a relative rounding error of about
/// `1e-16 / eps`.
fn criterion_2(cases: &[VerifyCase]) -> Outcome {
    let (mut worst, mut count) = (0.0f64, 0);
    for (k, case) in cases.iter().enumerate() {
        let mid = &case.loewner[(case.loewner.len() - 1) / 2];
        for (i, sur) in [mid, case.mri.last().unwrap()].into_iter().enumerate() {
            let zs = random_check_points(sur, RANGE.0, RANGE.1, 100, (k * 10 + i) as u64 + 7);
            let r = check_error_identity(&case.sys, sur, &zs, 1e-8).unwrap();
            worst = worst.max(r.max_violation);
            count += 1;
        }
    }
    verdict(
        worst <= 1e-10,
        format!("{count} surrogates x 100 points: max |eps*|Q| - Delta| / Delta = {worst:.2e} (<= 1e-10)"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let s = 2 + trial % 9;
        let support: Vec<c64> = (0..s)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let q: Vec<c64> = (0..s)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let values = vec![Mat::from_fn(1, 1, |_, _| c(1.0, 0.0)); s];
        let sur = BarycentricSurrogate::new(support.clone(), values, q).unwrap();
        let roots = sur.denominator_roots().unwrap();
        let expected = numerator_roots(&support, sur.coeffs(), 1e-13);
        worst = worst.max(multiset_distance(&roots, &expected));
    }
    verdict(
        worst <= 1e-8,
        format!("50 random surrogates, S = 2..10: max root mismatch {worst:.2e} (<= 1e-8)"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let poles: Vec<c64> = (0..3)
        .map(|_| c(-rng.random_range(0.1..1.0), rng.random_range(0.5..5.0)))
        .collect();
    let residues: Vec<c64> = (0..3)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let d = c(rng.random_range(0.5..1.5), 0.0);
    let target = |z: c64| {
        poles
            .iter()
            .zip(&residues)
            .fold(d, |acc, (&p, &r)| acc + r / (z - p))
    };
    let samples: Vec<FrequencySample> = (0..8)
        .map(|k| {
            let z = c(0.0, 0.3 * 20f64.powf(k as f64 / 7.0));
            FrequencySample::new(z, Mat::from_fn(1, 1, |_, _| target(z))).unwrap()
        })
        .collect();
    let sur = fit_loewner(&partition_samples(&samples).unwrap()).unwrap();
    let worst = (0..1000)
        .map(|k| {
            let z = c(0.0, 0.1 * 100f64.powf(k as f64 / 999.0));
            let h = target(z);
            (sur.eval(z).unwrap()[(0, 0)] - h).norm() / h.norm()
        })
        .fold(0.0, f64::max);
    verdict(
        worst <= 1e-8,
        format!("type [3/3] target from 8 samples: max relative error {worst:.2e} on 1000 points (<= 1e-8)"),
    )
}

fn criterion_5() -> Outcome {
    let poles = [c(0.0, 2.3), c(0.0, 7.1), c(0.0, 13.7), c(0.0, 41.9)];
    let sys = DescriptorSystem::make_synthetic(&poles, 5, 2, 2).unwrap();
    let cfg = GreedyConfig::new(1.0, 100.0, TerminationRule::LookaheadMemory { memory: 2 });
    let trace = run_greedy(&sys, &cfg).unwrap();
    let grid = build_test_grid(&cfg);
    let rows = validation_sweep(&sys, &trace.surrogate, None, &grid, cfg.delta);
    let err = max_error(&rows);
    let s = trace.samples.len();
    verdict(
        trace.reason == StopReason::Converged && s <= 20 && err <= 1e-3,
        format!(
            "{s} samples (<= 20), reason {}, dense max eps {err:.2e} (<= 1e-3)",
            trace.reason.name()
        ),
    )
}

fn benchmark_run(
    sys: &DescriptorSystem,
    range: (f64, f64),
    rule: TerminationRule,
) -> (GreedyTrace, f64) {
    let mut cfg = GreedyConfig::new(range.0, range.1, rule);
    cfg.tol = 1e-3;
    cfg.delta = 1e-8;
    let trace = run_greedy(sys, &cfg).unwrap();
    let grid = build_test_grid(&cfg);
    let err = max_error(&validation_sweep(
        sys,
        &trace.surrogate,
        None,
        &grid,
        cfg.delta,
    ));
    (trace, err)
}

fn criterion_6() -> Outcome {
    let Some(sys) = benchmark("mna4") else {
        return Outcome::Skip("mna4.*.mtx not found in the data directory".into());
    };
    let range = (3e4, 3e9);
    let (la, la_err) = benchmark_run(&sys, range, TerminationRule::Lookahead);
    let (rnd, rnd_err) = benchmark_run(&sys, range, TerminationRule::Randomized { count: 100 });
    let ok = (6..=15).contains(&la.iterations())
        && (6..=15).contains(&rnd.iterations())
        && la.reason == StopReason::Converged
        && rnd.reason == StopReason::Converged
        && la_err <= 1e-2
        && rnd_err <= 1e-2;
    verdict(
        ok,
        format!(
            "lookahead {} iterations (max eps {la_err:.2e}), randomized {} iterations (max eps {rnd_err:.2e}); \
             want 6..15 and <= 1e-2",
            la.iterations(),
            rnd.iterations()
        ),
    )
}

fn criterion_7() -> Outcome {
    let Some(sys) = benchmark("tline") else {
        return Outcome::Skip("tline.*.mtx not found in the data directory".into());
    };
    let range = (1e7, 1e15);
    let (la, la_err) = benchmark_run(&sys, range, TerminationRule::Lookahead);
    let (mem, mem_err) = benchmark_run(&sys, range, TerminationRule::LookaheadMemory { memory: 3 });
    let ok = (14..=30).contains(&la.iterations())
        && la_err > 1e-3
        && (28..=55).contains(&mem.iterations())
        && mem.reason == StopReason::Converged
        && mem_err <= 1e-2;
    verdict(
        ok,
        format!(
            "lookahead {} iterations (max eps {la_err:.2e}, want 14..30 and > 1e-3), memory 3: {} iterations \
             (max eps {mem_err:.2e}, want 28..55 and <= 1e-2)",
            la.iterations(),
            mem.iterations()
        ),
    )
}

fn criterion_8() -> Outcome {
    let Some(sys) = benchmark("iss") else {
        return Outcome::Skip("iss.*.mtx not found in the data directory".into());
    };
    let range = (0.1, 50.0);
    let (mem, mem_err) = benchmark_run(&sys, range, TerminationRule::LookaheadMemory { memory: 3 });
    let (batch, batch_err) = benchmark_run(&sys, range, TerminationRule::Batch { size: 5 });
    let ok = (70..=130).contains(&mem.iterations())
        && mem.reason == StopReason::Converged
        && batch.iterations() > mem.iterations()
        && batch_err <= mem_err;
    verdict(
        ok,
        format!(
            "memory 3: {} iterations (max eps {mem_err:.2e}); batch 5: {} iterations (max eps {batch_err:.2e})",
            mem.iterations(),
            batch.iterations()
        ),
    )
}

/// Discrete local maxima of the indicator on the grid outside `sampled`,
/// counted by a direct rescan.
fn count_local_maxima(sur: &BarycentricSurrogate, grid: &[c64], sampled: &[c64]) -> usize {
    let v: Vec<Option<f64>> = grid
        .iter()
        .map(|z| {
            (!sampled.contains(z)).then(|| 1.0 / sur.eval_denominator(*z).map_or(0.0, |q| q.norm()))
        })
        .collect();
    (0..v.len())
        .filter(|&k| {
            let Some(x) = v[k] else { return false };
            let left_ok = k == 0 || v[k - 1].is_none_or(|l| x > l);
            let right_ok = k + 1 == v.len() || v[k + 1].is_none_or(|r| x >= r);
            left_ok && right_ok
        })
        .count()
}

/// Oracle calls the rule should have spent, from the trace's samples, flags
/// and batch sizes.
fn expected_calls(
    trace: &GreedyTrace,
    grid: &[c64],
    fitter: Fitter,
) -> std::result::Result<usize, String> {
    let s_final = trace.samples.len();
    let converged = trace.reason == StopReason::Converged;
    match trace.rule {
        TerminationRule::MaxCount | TerminationRule::Density { .. } => Ok(s_final),
        TerminationRule::Lookahead | TerminationRule::LookaheadMemory { .. } => {
            Ok(s_final + usize::from(converged))
        }
        TerminationRule::Randomized { count } => Ok(s_final + count),
        TerminationRule::Batch { size } => {
            let mut wasted = 0;
            for r in &trace.records {
                if r.flag.is_none() {
                    continue;
                }
                let sur = fitter
                    .fit(&trace.samples[..r.samples])
                    .map_err(|e| e.to_string())?;
                let sampled: Vec<c64> = trace.samples[..r.samples].iter().map(|s| s.z).collect();
                let want = size.min(count_local_maxima(&sur, grid, &sampled).max(1));
                if r.test_calls != want {
                    return Err(format!(
                        "iteration {}: {} test calls, want {want}",
                        r.iteration, r.test_calls
                    ));
                }
                wasted += if r.flag == Some(true) {
                    r.test_calls
                } else {
                    r.test_calls - 1
                };
            }
            Ok(s_final + wasted)
        }
    }
}

fn criterion_9() -> Outcome {
    let rules = prop_oneof![
        Just(TerminationRule::MaxCount),
        (0.02f64..0.2).prop_map(|g| TerminationRule::Density { min_gap: g }),
        Just(TerminationRule::Lookahead),
        (1usize..=3).prop_map(|m| TerminationRule::LookaheadMemory { memory: m }),
        (1usize..=5).prop_map(|n| TerminationRule::Batch { size: n }),
        (5usize..=40).prop_map(|n| TerminationRule::Randomized { count: n }),
    ];
    let strategy = (
        rules,
        2usize..=6,
        any::<u64>(),
        prop_oneof![Just(1e-2), Just(1e-4)],
        8usize..=25,
    );
    let mut runner = TestRunner::new(PtConfig {
        cases: 48,
        failure_persistence: None,
        ..PtConfig::default()
    });
    let per_rule = std::cell::RefCell::new(std::collections::BTreeMap::<&str, usize>::new());
    let result = runner.run(&strategy, |(rule, n, seed, tol, cap)| {
        let sys = damped_system(n, seed, 1, RANGE.0, RANGE.1);
        let counting = Counting::new(&sys);
        let mut cfg = GreedyConfig::new(RANGE.0, RANGE.1, rule);
        cfg.grid_size = 400;
        cfg.tol = tol;
        cfg.max_samples = cap;
        cfg.seed = seed;
        let trace = run_greedy(&counting, &cfg).unwrap();
        let expected = expected_calls(&trace, &build_test_grid(&cfg), cfg.fitter)
            .map_err(TestCaseError::fail)?;
        prop_assert_eq!(
            counting.count(),
            trace.oracle_calls() + trace.failed_calls()
        );
        prop_assert_eq!(trace.oracle_calls(), expected, "rule {:?}", rule);
        let ledger = ledger_csv(&trace, "# t");
        let last = ledger
            .lines()
            .last()
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .to_string();
        prop_assert_eq!(last, expected.to_string());
        *per_rule.borrow_mut().entry(rule.name()).or_default() += 1;
        Ok(())
    });
    match result {
        Ok(()) => Outcome::Pass(format!(
            "48 random cases, recorded = counted = analytic; per rule {:?}",
            per_rule.borrow()
        )),
        Err(e) => Outcome::Fail(e.to_string()),
    }
}

fn criterion_10() -> Outcome {
    let sys = damped_system(10, 10, 2, RANGE.0, RANGE.1);
    let strip = |s: String| {
        s.lines()
            .enumerate()
            .filter(|(i, _)| *i != 1)
            .map(|(_, l)| l)
            .collect::<Vec<_>>()
            .join("\n")
    };
    let mut checked = Vec::new();
    for rule in [
        TerminationRule::Randomized { count: 50 },
        TerminationRule::Batch { size: 4 },
        TerminationRule::LookaheadMemory { memory: 2 },
    ] {
        let mut cfg = GreedyConfig::new(RANGE.0, RANGE.1, rule);
        cfg.grid_size = 3000;
        cfg.seed = 99;
        let runs: Vec<(String, String)> = (0..2)
            .map(|_| {
                let t = run_greedy(&sys, &cfg).unwrap();
                (
                    strip(samples_csv(&t, &timestamp_line())),
                    strip(ledger_csv(&t, &timestamp_line())),
                )
            })
            .collect();
        if runs[0] != runs[1] {
            return Outcome::Fail(format!("{} runs differ", rule.name()));
        }
        checked.push(rule.name());
    }
    Outcome::Pass(format!(
        "samples.csv and ledger.csv identical across reruns for {checked:?}"
    ))
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let started = Instant::now();
    let cases = std::cell::OnceCell::new();
    let cases = || cases.get_or_init(verify_cases);
    let criteria: Vec<(&str, Criterion<'_>)> = vec![
        (
            "indicator-residual proportionality",
            Box::new(|| criterion_1(cases())),
        ),
        ("output error identity", Box::new(|| criterion_2(cases()))),
        (
            "denominator roots vs companion matrix",
            Box::new(criterion_3),
        ),
        (
            "exact recovery of a type [3/3] function",
            Box::new(criterion_4),
        ),
        (
            "greedy convergence, synthetic order 4",
            Box::new(criterion_5),
        ),
        ("MNA_4 benchmark", Box::new(criterion_6)),
        ("tline benchmark", Box::new(criterion_7)),
        ("iss benchmark", Box::new(criterion_8)),
        ("oracle-call ledger", Box::new(criterion_9)),
        ("determinism", Box::new(criterion_10)),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failures += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!(
            "criterion {:>2} {tag} {name}: {detail} [{:.1}s]",
            k + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {failures} failed, {:.1}s",
        started.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}

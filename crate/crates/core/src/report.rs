//! CSV artifacts and the dense validation sweep.
//!
//! Frequencies are written as the positive real `f` of `z = i f`. Floats use
//! Rust's shortest round-trip exponent format, so identical runs give
//! identical files apart from the timestamp comment.

use std::fmt::Write as _;
use std::path::Path;

use faer::Mat;
use rayon::prelude::*;

use crate::barycentric::{BarycentricSurrogate, EstimatorAnchor};
use crate::c64;
use crate::error::Result;
use crate::greedy::{adjusted_relative_error, GreedyTrace};
use crate::linalg::frobenius;
use crate::system::TransferOracle;
use crate::verify::{ErrorReport, ResidualReport};

pub const FREQUENCY_NOTE: &str = "# frequencies are z = i*f";

/// `# generated <unix seconds>`; the only line allowed to differ between
/// identical runs.
pub fn timestamp_line() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!("# generated {secs}")
}

fn header(out: &mut String, timestamp: &str) {
    out.push_str(FREQUENCY_NOTE);
    out.push('\n');
    out.push_str(timestamp);
    out.push('\n');
}

fn opt<T: std::fmt::LowerExp>(v: Option<T>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// One row per iteration: the newest training frequency, the estimator
/// anchor, the estimate and the flag.
pub fn samples_csv(trace: &GreedyTrace, timestamp: &str) -> String {
    let mut out = String::new();
    header(&mut out, timestamp);
    out.push_str("iteration,f,anchor_re,anchor_im,estimator,flag\n");
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{:e},{},{},{},{}",
            r.iteration,
            r.latest.im,
            opt(r.anchor.map(|a| a.re)),
            opt(r.anchor.map(|a| a.im)),
            opt(r.estimate),
            r.flag.map(|f| f.to_string()).unwrap_or_default(),
        );
    }
    out
}

/// Oracle-call accounting. Row 0 covers the start sample and any random
/// test points. `training` is the training set size after the iteration.
pub fn ledger_csv(trace: &GreedyTrace, timestamp: &str) -> String {
    let mut out = String::new();
    header(&mut out, timestamp);
    out.push_str("iteration,training,test_calls,reused,failed,cumulative\n");
    let _ = writeln!(
        out,
        "0,1,{},0,{},{}",
        trace.setup_calls,
        trace.setup_failed,
        1 + trace.setup_calls
    );
    let last = trace.records.len();
    for r in &trace.records {
        let training = if r.iteration == last {
            r.samples
        } else {
            r.samples + 1
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iteration,
            training,
            r.test_calls,
            u8::from(r.reused_test_sample),
            r.failed_calls,
            r.cumulative_calls
        );
    }
    out
}

#[derive(Clone, Debug)]
pub struct ValidationRow {
    pub z: c64,
    /// `None` when the oracle resonates.
    pub exact: Option<Mat<c64>>,
    /// `None` when the surrogate has a pole at `z`.
    pub approx: Option<Mat<c64>>,
    pub eps: f64,
    pub eta: Option<f64>,
}

impl ValidationRow {
    pub fn resonant(&self) -> bool {
        self.exact.is_none()
    }
}

/// Exact and surrogate responses over `grid`, the adjusted error and, given
/// an anchor, the estimator curve. Resonant points get `eps = inf`.
pub fn validation_sweep<O: TransferOracle + Sync>(
    oracle: &O,
    sur: &BarycentricSurrogate,
    anchor: Option<EstimatorAnchor>,
    grid: &[c64],
    delta: f64,
) -> Vec<ValidationRow> {
    let q_anchor = anchor.and_then(|a| {
        sur.eval_denominator(a.z())
            .ok()
            .map(|q| (a.value, q.norm()))
    });
    grid.par_iter()
        .map(|&z| {
            let exact = oracle.sample(z).ok();
            let approx = sur.eval(z).ok();
            let eps = match (&exact, &approx) {
                (Some(h), Some(ht)) => adjusted_relative_error(h, ht, delta),
                _ => f64::INFINITY,
            };
            let eta = q_anchor.map(|(value, qa)| match sur.eval_denominator(z) {
                Ok(q) => value * (qa / q.norm()),
                Err(_) => 0.0,
            });
            ValidationRow {
                z,
                exact,
                approx,
                eps,
                eta,
            }
        })
        .collect()
}

pub fn max_error(rows: &[ValidationRow]) -> f64 {
    rows.iter()
        .filter(|r| !r.resonant())
        .map(|r| r.eps)
        .fold(0.0, f64::max)
}

/// `f, eps, eta, h_norm, surrogate_norm, resonant`, then every entry of `H`
/// and of the surrogate as `re, im` pairs (row-major).
pub fn validation_csv(rows: &[ValidationRow], shape: (usize, usize), timestamp: &str) -> String {
    let (p, m) = shape;
    let mut out = String::new();
    header(&mut out, timestamp);
    out.push_str("f,eps,eta,h_norm,surrogate_norm,resonant");
    for tag in ["h", "s"] {
        for i in 0..p {
            for j in 0..m {
                let _ = write!(out, ",{tag}_{i}_{j}_re,{tag}_{i}_{j}_im");
            }
        }
    }
    out.push('\n');
    let entries = |out: &mut String, m_opt: &Option<Mat<c64>>| {
        for i in 0..p {
            for j in 0..m {
                match m_opt {
                    Some(v) => {
                        let _ = write!(out, ",{:e},{:e}", v[(i, j)].re, v[(i, j)].im);
                    }
                    None => out.push_str(",inf,inf"),
                }
            }
        }
    };
    for r in rows {
        let norm =
            |m: &Option<Mat<c64>>| m.as_ref().map_or(f64::INFINITY, |m| frobenius(m.as_ref()));
        let _ = write!(
            out,
            "{:e},{:e},{},{:e},{:e},{}",
            r.z.im,
            r.eps,
            opt(r.eta),
            norm(&r.exact),
            norm(&r.approx),
            u8::from(r.resonant())
        );
        entries(&mut out, &r.exact);
        entries(&mut out, &r.approx);
        out.push('\n');
    }
    out
}

/// Per-point table of both checks: `f, rho, q_abs, rho_q, eps, delta`.
/// The reports must share their check points.
pub fn verify_csv(p1: &ResidualReport, p2: &ErrorReport, timestamp: &str) -> String {
    let mut out = String::new();
    header(&mut out, timestamp);
    out.push_str("f,rho,q_abs,rho_q,eps,delta\n");
    for (a, b) in p1.points.iter().zip(&p2.points) {
        debug_assert_eq!(a.z, b.z);
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            a.z.im,
            a.rho,
            a.q_abs,
            a.product(),
            b.eps,
            b.delta_factor
        );
    }
    out
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

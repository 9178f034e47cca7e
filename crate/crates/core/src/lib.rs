//! Greedy adaptive sampling for rational surrogates of frequency responses.
//!
//! A surrogate `H~` of the transfer function `H(z) = C (zE - A)^-1 B` is kept
//! in interpolatory barycentric form. New samples are placed where the
//! reciprocal magnitude of the barycentric denominator peaks, and several
//! termination rules decide when to stop asking the expensive oracle for
//! more samples.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barycentric;
pub mod config;
pub mod error;
pub mod fitters;
pub mod greedy;
pub mod linalg;
pub mod mtx;
pub mod report;
pub mod system;
pub mod verify;

pub use faer::Mat;

/// Double-precision complex scalar used throughout.
#[allow(non_camel_case_types)]
pub type c64 = faer::c64;

pub use barycentric::{BarycentricSurrogate, EstimatorAnchor};

pub use config::RunConfig;
pub use error::{Error, Result};
pub use fitters::{fit_loewner, fit_mri, partition_samples, SamplePartition};
pub use greedy::{
    run_greedy, Fitter, GreedyConfig, GreedyTrace, IterationRecord, StopReason, TerminationRule,
};
pub use linalg::{CooMatrix, Operator};
pub use system::{DescriptorSystem, FnOracle, FrequencySample, TransferOracle};

use std::path::PathBuf;

use crate::c64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// `zE - A` is singular (or numerically singular) at `z`.
    #[error("pencil is singular at z = {}{:+}i (rcond = {rcond:e})", z.re, z.im)]
    Resonance { z: c64, rcond: f64 },

    /// The barycentric denominator vanishes at a point that is not a support node.
    #[error("surrogate has a pole at z = {}{:+}i", z.re, z.im)]
    SurrogatePole { z: c64 },

    #[error("z = {}{:+}i coincides with support point {index}", z.re, z.im)]
    SupportCollision { z: c64, index: usize },

    #[error("duplicate pole at {}{:+}i", .0.re, .0.im)]
    DuplicatePole(c64),

    #[error("duplicate frequency at {}{:+}i", .0.re, .0.im)]
    DuplicateFrequency(c64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("all grid points have been sampled")]
    GridExhausted,

    #[error("linear algebra backend failed: {0}")]
    Backend(String),

    #[error("invalid configuration (line {line}, key `{key}`): {msg}")]
    Config {
        line: usize,
        key: String,
        msg: String,
    },

    #[error("invalid surrogate file: {0}")]
    Surrogate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! system = data/mna4        # prefix of <prefix>.{E,A,B,C}.mtx
//! f_min = 3e4
//! f_max = 3e9
//! termination = lookahead
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::greedy::{Fitter, GreedyConfig, TerminationRule};

/// Every key the parser accepts.
pub const KEYS: &[&str] = &[
    "system",
    "f_min",
    "f_max",
    "grid_size",
    "tol",
    "delta",
    "fitter",
    "termination",
    "memory",
    "batch",
    "random",
    "min_gap",
    "max_samples",
    "seed",
    "output",
    "verify_points",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub greedy: GreedyConfig,
    /// Prefix of the Matrix Market files.
    pub system: PathBuf,
    /// Directory receiving the artifacts.
    pub output: PathBuf,
    /// Random check points used by `verify`.
    pub verify_points: usize,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn err(&self, key: &str, msg: impl Into<String>) -> Error {
        Error::Config {
            line: self.line(key),
            key: key.into(),
            msg: msg.into(),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |(l, _)| *l)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| self.err(key, "missing required key"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| self.err(key, format!("cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    fn parse_required<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.required(key)?;
        Ok(self.parse(key)?.expect("checked above"))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config {
                    line,
                    key: content.into(),
                    msg: "expected `key = value`".into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config {
                    line,
                    key: key.into(),
                    msg: "unknown key".into(),
                });
            }
            if value.is_empty() {
                return Err(Error::Config {
                    line,
                    key: key.into(),
                    msg: "empty value".into(),
                });
            }
            if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
                return Err(Error::Config {
                    line,
                    key: key.into(),
                    msg: format!("duplicate key, first set on line {first}"),
                });
            }
        }
        let e = Entries { map };

        let termination = match e.raw("termination").unwrap_or("lookahead") {
            "max_count" => TerminationRule::MaxCount,
            "density" => TerminationRule::Density {
                min_gap: e.parse_required("min_gap")?,
            },
            "lookahead" => TerminationRule::Lookahead,
            "lookahead_memory" => TerminationRule::LookaheadMemory {
                memory: e.parse_required("memory")?,
            },
            "batch" => TerminationRule::Batch {
                size: e.parse_required("batch")?,
            },
            "randomized" => TerminationRule::Randomized {
                count: e.parse_required("random")?,
            },
            other => {
                return Err(e.err(
                    "termination",
                    format!(
                        "unknown rule `{other}` (expected max_count, density, lookahead, \
                         lookahead_memory, batch or randomized)"
                    ),
                ))
            }
        };
        let fitter = match e.raw("fitter").unwrap_or("loewner") {
            "loewner" => Fitter::Loewner,
            "mri" => Fitter::Mri,
            other => {
                return Err(e.err(
                    "fitter",
                    format!("unknown fitter `{other}` (expected loewner or mri)"),
                ))
            }
        };

        let mut greedy = GreedyConfig::new(
            e.parse_required("f_min")?,
            e.parse_required("f_max")?,
            termination,
        );
        greedy.fitter = fitter;
        if let Some(v) = e.parse("grid_size")? {
            greedy.grid_size = v;
        }
        if let Some(v) = e.parse("tol")? {
            greedy.tol = v;
        }
        if let Some(v) = e.parse("delta")? {
            greedy.delta = v;
        }
        if let Some(v) = e.parse("max_samples")? {
            greedy.max_samples = v;
        }
        if let Some(v) = e.parse("seed")? {
            greedy.seed = v;
        }
        if let Err(Error::Config { key, msg, .. }) = greedy.validate() {
            return Err(e.err(&key, msg));
        }

        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let verify_points = e.parse("verify_points")?.unwrap_or(100);
        if verify_points == 0 {
            return Err(e.err("verify_points", "must be at least 1"));
        }
        Ok(Self {
            greedy,
            system: resolve(e.required("system")?),
            output: resolve(e.raw("output").unwrap_or("output")),
            verify_points,
        })
    }
}

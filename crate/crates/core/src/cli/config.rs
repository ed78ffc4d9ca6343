//! Flat `key=value` run configuration.
//!
//! ```text
//! # reference pool
//! I=3
//! mu=1
//! B=0.1
//! epsilon=0.5
//! r=0.05
//! alpha=0.25,0.25,0.25
//! n_paths=100000
//! seed=42
//! u0=auto
//! shirk=0,0,0
//! ```
//!
//! `alpha` lists `alpha_1..alpha_I`. `shirk` lists `k_I, ..., k_1`, that is
//! from the full pool down to the last loan. Blank lines and lines starting
//! with `#` are ignored.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hjbsolve::SolverSettings;
use crate::params::PoolParams;

pub const DEFAULT_N_PATHS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 42;

const REQUIRED: [&str; 6] = ["I", "mu", "B", "epsilon", "r", "alpha"];
const OPTIONAL: [&str; 7] = [
    "grid_points",
    "quad_tol",
    "bisect_tol",
    "n_paths",
    "seed",
    "u0",
    "shirk",
];

/// Initial promised utility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum U0 {
    /// The top cap `gamma_I`, known once the value functions are built.
    Auto,
    Value(f64),
}

impl U0 {
    pub fn resolve(self, gamma_top: f64) -> f64 {
        match self {
            U0::Auto => gamma_top,
            U0::Value(x) => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PoolParams,
    pub settings: SolverSettings,
    pub n_paths: usize,
    pub seed: u64,
    pub u0: U0,
    /// `shirk[j - 1] = k_j`.
    pub shirk: Vec<u32>,
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("{key}: cannot parse {raw:?}"),
    })
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',').map(|x| parse_num(line, key, x)).collect()
}

impl RunConfig {
    pub fn reference() -> Self {
        RunConfig {
            params: PoolParams::reference(),
            settings: SolverSettings::default(),
            n_paths: DEFAULT_N_PATHS,
            seed: DEFAULT_SEED,
            u0: U0::Auto,
            shirk: vec![0; 3],
        }
    }

    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected key=value, found {trimmed:?}"),
            })?;
            let key = key.trim();
            if !REQUIRED.contains(&key) && !OPTIONAL.contains(&key) {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key {key:?}"),
                });
            }
            if entries.insert(key, (line, value.trim())).is_some() {
                return Err(Error::Parse {
                    line,
                    msg: format!("duplicate key {key:?}"),
                });
            }
        }
        for key in REQUIRED {
            if !entries.contains_key(key) {
                return Err(Error::Config(format!("missing required key {key:?}")));
            }
        }
        let get = |k: &str| entries.get(k).copied();
        let req = |k: &str| entries[k];

        let (line, raw) = req("I");
        let loans: usize = parse_num(line, "I", raw)?;
        let num = |k: &str| -> Result<f64> {
            let (line, raw) = req(k);
            parse_num(line, k, raw)
        };
        let (mu, benefit, epsilon, r) = (num("mu")?, num("B")?, num("epsilon")?, num("r")?);

        let (line, raw) = req("alpha");
        let alpha: Vec<f64> = parse_list(line, "alpha", raw)?;
        if alpha.len() != loans {
            return Err(Error::Parse {
                line,
                msg: format!("alpha has {} entries, expected I = {loans}", alpha.len()),
            });
        }

        let mut settings = SolverSettings::default();
        if let Some((line, raw)) = get("grid_points") {
            settings.grid_points = parse_num(line, "grid_points", raw)?;
        }
        if let Some((line, raw)) = get("quad_tol") {
            settings.quad_tol = parse_num(line, "quad_tol", raw)?;
        }
        if let Some((line, raw)) = get("bisect_tol") {
            settings.bisect_tol = parse_num(line, "bisect_tol", raw)?;
        }
        let n_paths = match get("n_paths") {
            Some((line, raw)) => parse_num(line, "n_paths", raw)?,
            None => DEFAULT_N_PATHS,
        };
        let seed = match get("seed") {
            Some((line, raw)) => parse_num(line, "seed", raw)?,
            None => DEFAULT_SEED,
        };
        let u0 = match get("u0") {
            None => U0::Auto,
            Some((_, "auto")) => U0::Auto,
            Some((line, raw)) => U0::Value(parse_num(line, "u0", raw)?),
        };
        let shirk = match get("shirk") {
            None => vec![0; loans],
            Some((line, raw)) => {
                let mut ks: Vec<u32> = parse_list(line, "shirk", raw)?;
                if ks.len() != loans {
                    return Err(Error::Parse {
                        line,
                        msg: format!("shirk has {} entries, expected I = {loans}", ks.len()),
                    });
                }
                ks.reverse();
                ks
            }
        };

        Ok(RunConfig {
            params: PoolParams {
                loans,
                mu,
                benefit,
                epsilon,
                r,
                alpha,
            },
            settings,
            n_paths,
            seed,
            u0,
            shirk,
        })
    }

    /// Canonical text form; `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    /// Keys in the documented order with their canonical values.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let join = |xs: Vec<String>| xs.join(",");
        let p = &self.params;
        vec![
            ("I", p.loans.to_string()),
            ("mu", p.mu.to_string()),
            ("B", p.benefit.to_string()),
            ("epsilon", p.epsilon.to_string()),
            ("r", p.r.to_string()),
            ("alpha", join(p.alpha.iter().map(f64::to_string).collect())),
            ("grid_points", self.settings.grid_points.to_string()),
            ("quad_tol", self.settings.quad_tol.to_string()),
            ("bisect_tol", self.settings.bisect_tol.to_string()),
            ("n_paths", self.n_paths.to_string()),
            ("seed", self.seed.to_string()),
            (
                "u0",
                match self.u0 {
                    U0::Auto => "auto".to_string(),
                    U0::Value(x) => x.to_string(),
                },
            ),
            (
                "shirk",
                join(self.shirk.iter().rev().map(u32::to_string).collect()),
            ),
        ]
    }
}

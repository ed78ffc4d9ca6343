//! `key=value` run manifest. The `config.*` entries reproduce the run;
//! the final `sha256` line is the digest of the value-function table.

use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::Result;
use crate::hjbsolve::ValueFunctions;
use crate::params::AssumptionReport;

pub const MANIFEST_FILE: &str = "manifest.txt";
const CONFIG_PREFIX: &str = "config.";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
    sha256: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        cfg: &RunConfig,
        vf: &ValueFunctions,
        report: &AssumptionReport,
        values_csv: &str,
    ) -> Self {
        let mut m = RunManifest::default();
        m.push("tool", env!("CARGO_PKG_NAME"));
        m.push("version", env!("CARGO_PKG_VERSION"));
        m.push("command", command);
        for (k, v) in cfg.entries() {
            m.push(format!("{CONFIG_PREFIX}{k}"), v);
        }
        let s = &vf.meta.settings;
        m.push("solver.grid_points", s.grid_points);
        m.push("solver.quad_tol", s.quad_tol);
        m.push("solver.bisect_tol", s.bisect_tol);
        m.push(
            "solver.regime",
            format!("{:?}", vf.meta.regime).to_lowercase(),
        );
        for l in &vf.levels {
            m.push(format!("gamma.{}", l.j), l.gamma);
        }
        for l in &vf.levels {
            m.push(format!("vbar.{}", l.j), l.vbar);
        }
        for h in &vf.meta.hyp_lambda {
            m.push(
                format!("hyp_lambda.{}", h.j),
                format!("{},{}", h.lhs, h.rhs),
            );
        }
        for (i, c) in report.conditions.iter().enumerate() {
            m.push(
                format!("assumption.{}", i + 1),
                format!(
                    "{}|{}|{}",
                    c.name,
                    if c.holds { "holds" } else { "fails" },
                    c.margin
                ),
            );
        }
        m.push("assumptions.overall", report.overall);
        m.sha256 = sha256_hex(values_csv.as_bytes());
        m
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn sha256(&self) -> &str {
        &self.sha256
    }

    pub fn render(&self) -> String {
        let mut out: String = self
            .entries
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        out.push_str(&format!("sha256={}\n", self.sha256));
        out
    }
}

/// Recovers the run configuration embedded in a manifest.
pub fn config_from_manifest(text: &str) -> Result<RunConfig> {
    let body: String = text
        .lines()
        .filter_map(|l| l.strip_prefix(CONFIG_PREFIX))
        .map(|l| format!("{l}\n"))
        .collect();
    RunConfig::parse(&body)
}

/// Digest recorded on the `sha256=` line, if any.
pub fn recorded_sha256(text: &str) -> Option<&str> {
    text.lines().find_map(|l| l.strip_prefix("sha256="))
}

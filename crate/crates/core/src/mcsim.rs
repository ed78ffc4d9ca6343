//! Exact event-driven Monte Carlo of the contract.
//!
//! Only default times and liquidation draws are random. Between defaults the
//! bank's utility follows the deterministic flow of [`ContractPolicy`], so fee
//! and benefit integrals are accumulated in closed form.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::PoolParams;
use crate::policy::{ContractPolicy, PostDefault};

pub const DEFAULT_HORIZON_CAP: f64 = 1e4;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub master_seed: u64,
    /// Promised utility at time 0. Values above `gamma_I` are paid out as an
    /// immediate lump transfer.
    pub u0: f64,
    /// `shirk[j - 1] = k_j`, loans left unmonitored while `j` perform.
    pub shirk: Vec<u32>,
    /// Paths whose liquidation time exceeds this are flagged and excluded.
    pub horizon_cap: f64,
    /// Hazard sensitivity of unmonitored loans used by the simulator. `None`
    /// means the contract's own `epsilon`.
    pub shirk_epsilon: Option<f64>,
    pub record_events: bool,
}

impl SimConfig {
    pub fn new(n_paths: usize, master_seed: u64, u0: f64, loans: usize) -> Self {
        SimConfig {
            n_paths,
            master_seed,
            u0,
            shirk: vec![0; loans],
            horizon_cap: DEFAULT_HORIZON_CAP,
            shirk_epsilon: None,
            record_events: false,
        }
    }

    pub fn is_monitoring(&self) -> bool {
        self.shirk.iter().all(|&k| k == 0)
    }

    pub fn validate(&self, pol: &ContractPolicy) -> Result<()> {
        let n = pol.levels();
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        if self.shirk.len() != n {
            return Err(Error::Config(format!(
                "shirk profile has {} entries, expected I = {n}",
                self.shirk.len()
            )));
        }
        if let Some((i, k)) = self
            .shirk
            .iter()
            .enumerate()
            .find(|(i, k)| **k as usize > i + 1)
        {
            return Err(Error::Config(format!(
                "k_{} = {k} exceeds {}",
                i + 1,
                i + 1
            )));
        }
        if !(self.horizon_cap > 0.0) {
            return Err(Error::Config("horizon_cap must be positive".into()));
        }
        if let Some(e) = self.shirk_epsilon {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::Config(format!("shirk_epsilon must be > 0, got {e}")));
            }
        }
        let b = pol.derived().b(n);
        if !(self.u0.is_finite() && self.u0 >= b - pol.u_tol()) {
            return Err(Error::domain(
                "u0",
                self.u0,
                format!("[b_I, inf) = [{b}, inf)"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    DefaultMaintained,
    DefaultLiquidated,
    CapReached,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::DefaultMaintained => "default-maintained",
            EventKind::DefaultLiquidated => "default-liquidated",
            EventKind::CapReached => "cap-reached",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub level_before: usize,
    pub kind: EventKind,
    pub u_before: f64,
    pub u_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefaultRecord {
    pub time: f64,
    pub level: usize,
    pub maintained: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub path_index: u64,
    pub liquidation_time: f64,
    pub defaults: Vec<DefaultRecord>,
    /// Filled only when `record_events` is set.
    pub events: Vec<Event>,
    /// Lump transfer plus discounted fees plus discounted private benefit.
    pub bank_payoff: f64,
    /// Cash flow minus fees and lump transfer, undiscounted.
    pub investor_payoff: f64,
    pub fees_discounted: f64,
    pub fees_undiscounted: f64,
    pub private_benefit: f64,
    /// `int (I - N_t) mu dt`.
    pub cash_flow: f64,
    pub lump_transfer: f64,
    pub flagged: bool,
}

/// `int_0^len e^{-r s} ds`.
fn discounted_length(r: f64, len: f64) -> f64 {
    if r == 0.0 {
        len
    } else {
        -(-r * len).exp_m1() / r
    }
}

/// One path of the contract. The RNG stream depends only on the master seed
/// and `path_index`.
pub fn simulate_path(
    params: &PoolParams,
    pol: &ContractPolicy,
    cfg: &SimConfig,
    path_index: u64,
) -> Result<PathRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(path_index);

    let r = pol.r();
    let eps = cfg.shirk_epsilon.unwrap_or(params.epsilon);
    let mut j = pol.levels();
    let lump = (cfg.u0 - pol.gamma(j)).max(0.0);
    let mut u = cfg.u0.min(pol.gamma(j)).max(pol.derived().b(j));

    let mut rec = PathRecord {
        path_index,
        liquidation_time: f64::NAN,
        defaults: Vec::with_capacity(j),
        events: Vec::new(),
        bank_payoff: 0.0,
        investor_payoff: 0.0,
        fees_discounted: 0.0,
        fees_undiscounted: 0.0,
        private_benefit: 0.0,
        cash_flow: 0.0,
        lump_transfer: lump,
        flagged: false,
    };
    let mut t = 0.0;

    loop {
        let k = cfg.shirk[j - 1] as f64;
        let rate = params.alpha(j) * (j as f64 + eps * k);
        let unif_wait: f64 = rng.random();
        let unif_coin: f64 = rng.random();
        let wait = -(-unif_wait).ln_1p() / rate;
        if t + wait > cfg.horizon_cap {
            rec.flagged = true;
            rec.liquidation_time = f64::INFINITY;
            break;
        }

        let disc = (-r * t).exp();
        rec.cash_flow += j as f64 * params.mu * wait;
        if k > 0.0 {
            rec.private_benefit += params.benefit * k * disc * discounted_length(r, wait);
        }
        let to_cap = pol.time_to_cap(j, u)?;
        let u_before = if wait >= to_cap {
            let pinned = wait - to_cap;
            let fee = pol.cap_fee(j);
            rec.fees_undiscounted += fee * pinned;
            rec.fees_discounted += fee * disc * (-r * to_cap).exp() * discounted_length(r, pinned);
            if cfg.record_events && to_cap > 0.0 {
                rec.events.push(Event {
                    time: t + to_cap,
                    level_before: j,
                    kind: EventKind::CapReached,
                    u_before: pol.gamma(j),
                    u_after: pol.gamma(j),
                });
            }
            pol.gamma(j)
        } else {
            pol.drift_position(j, u, wait)?
        };
        t += wait;

        let outcome = pol.post_default(j, u_before, unif_coin)?;
        let maintained = matches!(outcome, PostDefault::Maintained { .. });
        rec.defaults.push(DefaultRecord {
            time: t,
            level: j,
            maintained,
        });
        let u_after = match outcome {
            PostDefault::Maintained { new_u } => new_u,
            PostDefault::Liquidated => 0.0,
        };
        if cfg.record_events {
            rec.events.push(Event {
                time: t,
                level_before: j,
                kind: if maintained {
                    EventKind::DefaultMaintained
                } else {
                    EventKind::DefaultLiquidated
                },
                u_before,
                u_after,
            });
        }
        if !maintained {
            rec.liquidation_time = t;
            break;
        }
        j -= 1;
        u = u_after;
    }

    rec.bank_payoff = rec.lump_transfer + rec.fees_discounted + rec.private_benefit;
    rec.investor_payoff = rec.cash_flow - rec.fees_undiscounted - rec.lump_transfer;
    Ok(rec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub mean_bank: f64,
    pub se_bank: f64,
    pub mean_investor: f64,
    pub se_investor: f64,
    /// Paths entering the statistics.
    pub n_paths: usize,
    /// Paths excluded because they hit the horizon cap.
    pub flagged: usize,
    pub config: SimConfig,
}

impl SimResult {
    /// `|mean_bank - target| <= k se_bank`.
    pub fn bank_within(&self, target: f64, k: f64) -> bool {
        (self.mean_bank - target).abs() <= k * self.se_bank
    }

    pub fn investor_within(&self, target: f64, k: f64) -> bool {
        (self.mean_investor - target).abs() <= k * self.se_investor
    }

    /// `mean_bank <= target + k se_bank`.
    pub fn bank_at_most(&self, target: f64, k: f64) -> bool {
        self.mean_bank <= target + k * self.se_bank
    }

    pub fn investor_at_most(&self, target: f64, k: f64) -> bool {
        self.mean_investor <= target + k * self.se_investor
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

/// All paths of a run, in path order. Runs on the current rayon pool.
pub fn simulate_paths(
    params: &PoolParams,
    pol: &ContractPolicy,
    cfg: &SimConfig,
) -> Result<Vec<PathRecord>> {
    cfg.validate(pol)?;
    (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(params, pol, cfg, i))
        .collect()
}

impl SimResult {
    /// Statistics of already simulated paths; flagged paths are excluded.
    pub fn from_paths(paths: &[PathRecord], cfg: &SimConfig) -> Result<Self> {
        let outcomes: Vec<(f64, f64, bool)> = paths
            .iter()
            .map(|p| (p.bank_payoff, p.investor_payoff, p.flagged))
            .collect();
        Self::from_outcomes(&outcomes, cfg)
    }

    fn from_outcomes(outcomes: &[(f64, f64, bool)], cfg: &SimConfig) -> Result<Self> {
        let kept: Vec<&(f64, f64, bool)> = outcomes.iter().filter(|o| !o.2).collect();
        if kept.is_empty() {
            return Err(Error::Config("every path exceeded the horizon cap".into()));
        }
        let bank: Vec<f64> = kept.iter().map(|o| o.0).collect();
        let investor: Vec<f64> = kept.iter().map(|o| o.1).collect();
        let (mean_bank, se_bank) = mean_se(&bank);
        let (mean_investor, se_investor) = mean_se(&investor);
        Ok(SimResult {
            mean_bank,
            se_bank,
            mean_investor,
            se_investor,
            n_paths: kept.len(),
            flagged: outcomes.len() - kept.len(),
            config: cfg.clone(),
        })
    }
}

fn summarize(params: &PoolParams, pol: &ContractPolicy, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate(pol)?;
    let lean = SimConfig {
        record_events: false,
        ..cfg.clone()
    };
    let outcomes: Vec<(f64, f64, bool)> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            simulate_path(params, pol, &lean, i)
                .map(|p| (p.bank_payoff, p.investor_payoff, p.flagged))
        })
        .collect::<Result<_>>()?;
    SimResult::from_outcomes(&outcomes, cfg)
}

/// Bank and investor values of the contract under full monitoring.
pub fn estimate(params: &PoolParams, pol: &ContractPolicy, cfg: &SimConfig) -> Result<SimResult> {
    if !cfg.is_monitoring() {
        return Err(Error::Config(
            "estimate requires the all-zero shirk profile".into(),
        ));
    }
    summarize(params, pol, cfg)
}

/// Bank's payoff when it follows the shirking profile of `cfg` while the
/// contract keeps running as if it monitored. An all-zero profile gives the
/// same law as [`estimate`].
pub fn deviation_utility(
    params: &PoolParams,
    pol: &ContractPolicy,
    cfg: &SimConfig,
) -> Result<SimResult> {
    summarize(params, pol, cfg)
}

pub const EVENTS_HEADER: &str = "path_index,event_time,level_before,event,u_before,u_after";

pub fn write_events_csv<W: Write>(mut out: W, paths: &[PathRecord]) -> std::io::Result<()> {
    writeln!(out, "{EVENTS_HEADER}")?;
    for p in paths {
        for e in &p.events {
            writeln!(
                out,
                "{},{:.16e},{},{},{:.16e},{:.16e}",
                p.path_index, e.time, e.level_before, e.kind, e.u_before, e.u_after
            )?;
        }
    }
    Ok(())
}

//! Feedback form of the optimal contract and the deterministic flow of the
//! bank's continuation utility between defaults.

use crate::error::{Error, Result};
use crate::hjbsolve::{Regime, ValueFunctions};
use crate::params::DerivedQuantities;

/// Contract terms at one state `(j, u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyAction {
    /// Fee rate paid to the bank, positive only at the cap.
    pub delta: f64,
    /// Probability that the pool survives a default.
    pub theta: f64,
    /// Utility drop on a default followed by continuation.
    pub h1: f64,
    /// Additional drop on liquidation, `h1 + h2 = u`.
    pub h2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PostDefault {
    Maintained { new_u: f64 },
    Liquidated,
}

/// The optimal contract (or a variant with other caps) as a function of the
/// number of performing loans `j` and the bank's continuation utility `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractPolicy {
    derived: DerivedQuantities,
    r: f64,
    gammas: Vec<f64>,
    regime: Regime,
    u_tol: f64,
}

impl ContractPolicy {
    pub fn new(vf: &ValueFunctions) -> Self {
        let gammas = vf.gammas();
        let u_tol = 1e-9 * gammas.last().copied().unwrap_or(1.0).max(1.0);
        ContractPolicy {
            derived: vf.derived.clone(),
            r: vf.params.r,
            gammas,
            regime: vf.meta.regime,
            u_tol,
        }
    }

    /// Same feedback rules with caps `caps[j - 1]` in place of the optimal
    /// ones. Caps must satisfy `G_1 = b_1` and
    /// `b_j + b_{j-1} <= G_j <= b_j + G_{j-1}` so that the state stays in
    /// the contract's domain after every default.
    pub fn with_caps(derived: &DerivedQuantities, r: f64, caps: Vec<f64>) -> Result<Self> {
        let n = derived.levels();
        if caps.len() != n {
            return Err(Error::InvalidCaps(format!(
                "{} caps given for a pool of {n} loans",
                caps.len()
            )));
        }
        let u_tol = 1e-9 * caps[n - 1].max(1.0);
        if (caps[0] - derived.b(1)).abs() > u_tol {
            return Err(Error::InvalidCaps(format!(
                "G_1 = {} must equal b_1 = {}",
                caps[0],
                derived.b(1)
            )));
        }
        for j in 2..=n {
            let lo = derived.b(j) + derived.b(j - 1);
            let hi = derived.b(j) + caps[j - 2];
            let g = caps[j - 1];
            if g < lo - u_tol || g > hi + u_tol {
                return Err(Error::InvalidCaps(format!(
                    "G_{j} = {g} outside [b_j + b_(j-1), b_j + G_(j-1)] = [{lo}, {hi}]"
                )));
            }
        }
        Ok(ContractPolicy {
            derived: derived.clone(),
            r,
            gammas: caps,
            regime: Regime::of(r),
            u_tol,
        })
    }

    pub fn levels(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn gamma(&self, j: usize) -> f64 {
        self.gammas[j - 1]
    }

    pub fn derived(&self) -> &DerivedQuantities {
        &self.derived
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn u_tol(&self) -> f64 {
        self.u_tol
    }

    /// Fee rate that keeps the state pinned at the cap.
    pub fn cap_fee(&self, j: usize) -> f64 {
        self.derived.lambda(j) * self.derived.b(j) + self.r * self.gamma(j)
    }

    fn check(&self, j: usize, u: f64) -> Result<()> {
        if j == 0 || j > self.levels() {
            return Err(Error::UnknownLevel {
                level: j,
                max: self.levels(),
            });
        }
        let (b, g) = (self.derived.b(j), self.gamma(j));
        if !(u >= b - self.u_tol && u <= g + self.u_tol) {
            return Err(Error::domain(
                "u",
                u,
                format!("[b_{j}, gamma_{j}] = [{b}, {g}]"),
            ));
        }
        Ok(())
    }

    pub fn policy_eval(&self, j: usize, u: f64) -> Result<PolicyAction> {
        self.check(j, u)?;
        let b = self.derived.b(j);
        let b_prev = self.derived.b(j - 1);
        let g = self.gamma(j);
        let delta = if (u - g).abs() <= self.u_tol {
            self.cap_fee(j)
        } else {
            0.0
        };
        let (theta, h1) = if j >= 2 && u < b + b_prev {
            (((u - b) / b_prev).clamp(0.0, 1.0), u - b_prev)
        } else {
            (1.0, b)
        };
        Ok(PolicyAction {
            delta,
            theta,
            h1,
            h2: u - h1,
        })
    }

    fn drift_coeff(&self, j: usize) -> f64 {
        self.derived.lambda(j) * self.derived.b(j)
    }

    /// State reached after `dt` without defaults, starting from `u0`.
    pub fn drift_position(&self, j: usize, u0: f64, dt: f64) -> Result<f64> {
        self.check(j, u0)?;
        if !(dt >= 0.0) {
            return Err(Error::domain("dt", dt, "[0, inf)"));
        }
        let g = self.gamma(j);
        let lb = self.drift_coeff(j);
        let moved = if self.r == 0.0 {
            u0 + lb * dt
        } else {
            u0 + (u0 + lb / self.r) * (self.r * dt).exp_m1()
        };
        Ok(moved.min(g))
    }

    /// Time the state needs to drift from `u0` up to the cap.
    pub fn time_to_cap(&self, j: usize, u0: f64) -> Result<f64> {
        self.check(j, u0)?;
        let gap = (self.gamma(j) - u0).max(0.0);
        let lb = self.drift_coeff(j);
        Ok(if self.r == 0.0 {
            gap / lb
        } else {
            (self.r * gap / (self.r * u0 + lb)).ln_1p() / self.r
        })
    }

    /// Resolution of a default at state `(j, u)` given a uniform draw.
    pub fn post_default(&self, j: usize, u: f64, unif: f64) -> Result<PostDefault> {
        let action = self.policy_eval(j, u)?;
        if !(0.0..1.0).contains(&unif) {
            return Err(Error::domain("unif", unif, "[0, 1)"));
        }
        if j == 1 || unif >= action.theta {
            return Ok(PostDefault::Liquidated);
        }
        let new_u = (u - action.h1).clamp(self.derived.b(j - 1), self.gamma(j - 1));
        Ok(PostDefault::Maintained { new_u })
    }
}

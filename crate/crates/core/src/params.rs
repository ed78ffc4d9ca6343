//! Model primitives of the loan pool and the per-level constants derived from them.
//!
//! Levels are indexed by the number of loans still performing, `j = 1..=I`.
//! All per-level vectors are stored 0-based (`vec[j - 1]`), the accessors
//! below take the level itself.

use crate::error::{Error, Result};

/// Exogenous primitives of the pool.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolParams {
    /// Number of loans initially in the pool.
    pub loans: usize,
    /// Cash flow per performing loan per unit time.
    pub mu: f64,
    /// Private benefit per unmonitored loan per unit time.
    pub benefit: f64,
    /// Proportional increase of the hazard rate of an unmonitored loan.
    pub epsilon: f64,
    /// Internal discount rate of the bank.
    pub r: f64,
    /// Baseline hazard rates under monitoring, `alpha[j - 1]` applies when
    /// `j` loans are performing.
    pub alpha: Vec<f64>,
}

impl PoolParams {
    /// Reference pool used throughout the tests and the README.
    pub fn reference() -> Self {
        PoolParams {
            loans: 3,
            mu: 1.0,
            benefit: 0.1,
            epsilon: 0.5,
            r: 0.05,
            alpha: vec![0.25; 3],
        }
    }

    /// Checks the structural invariants. The economic assumptions are
    /// reported by [`check_assumptions`] instead.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.loans == 0 {
            return bad("I must be at least 1".into());
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return bad(format!("mu must be > 0, got {}", self.mu));
        }
        if !(self.benefit.is_finite() && self.benefit > 0.0) {
            return bad(format!("B must be > 0, got {}", self.benefit));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        if !(self.r.is_finite() && self.r >= 0.0) {
            return bad(format!("r must be >= 0, got {}", self.r));
        }
        if self.alpha.len() != self.loans {
            return bad(format!(
                "alpha has {} entries, expected I = {}",
                self.alpha.len(),
                self.loans
            ));
        }
        if let Some((i, a)) = self
            .alpha
            .iter()
            .enumerate()
            .find(|(_, a)| !(a.is_finite() && **a > 0.0))
        {
            return bad(format!("alpha_{} must be > 0, got {}", i + 1, a));
        }
        Ok(())
    }

    pub fn alpha(&self, j: usize) -> f64 {
        self.alpha[j - 1]
    }
}

/// Per-level constants implied by [`PoolParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedQuantities {
    /// Minimal post-default utility drop `b_j = B / (epsilon alpha_j)`.
    pub b: Vec<f64>,
    /// Aggregate default intensity under full monitoring, `lambda_j = j alpha_j`.
    pub lambda: Vec<f64>,
    /// Harmonic means of `alpha_1..alpha_j`.
    pub alpha_bar: Vec<f64>,
    /// Value of the pool when bank and investors cooperate, `I mu / alpha_bar_I`.
    pub first_best: f64,
}

impl DerivedQuantities {
    pub fn levels(&self) -> usize {
        self.b.len()
    }

    /// `b_j`, with the convention `b_0 = 0`.
    pub fn b(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.b[j - 1]
        }
    }

    pub fn lambda(&self, j: usize) -> f64 {
        self.lambda[j - 1]
    }

    pub fn alpha_bar(&self, j: usize) -> f64 {
        self.alpha_bar[j - 1]
    }

    /// `b_1 + ... + b_j`.
    pub fn cumulative_b(&self, j: usize) -> f64 {
        self.b[..j].iter().sum()
    }
}

pub fn derive(params: &PoolParams) -> Result<DerivedQuantities> {
    params.validate()?;
    let b: Vec<f64> = params
        .alpha
        .iter()
        .map(|a| params.benefit / (params.epsilon * a))
        .collect();
    let lambda: Vec<f64> = params
        .alpha
        .iter()
        .enumerate()
        .map(|(i, a)| (i + 1) as f64 * a)
        .collect();
    let mut inv_sum = 0.0;
    let alpha_bar: Vec<f64> = params
        .alpha
        .iter()
        .enumerate()
        .map(|(i, a)| {
            inv_sum += 1.0 / a;
            (i + 1) as f64 / inv_sum
        })
        .collect();
    let first_best = params.loans as f64 * params.mu / alpha_bar[params.loans - 1];
    Ok(DerivedQuantities {
        b,
        lambda,
        alpha_bar,
        first_best,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: String,
    pub holds: bool,
    /// Signed slack; non-negative means the condition holds.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub conditions: Vec<ConditionCheck>,
    pub overall: bool,
}

impl AssumptionReport {
    pub fn failures(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.conditions.iter().filter(|c| !c.holds)
    }
}

/// Evaluates profitability, monitoring efficiency and contagion monotonicity.
pub fn check_assumptions(params: &PoolParams, derived: &DerivedQuantities) -> AssumptionReport {
    let levels = params.loans;
    let mut conditions = Vec::with_capacity(2 * levels + 1);
    let mut push = |name: String, margin: f64| {
        conditions.push(ConditionCheck {
            name,
            holds: margin >= 0.0,
            margin,
        })
    };

    push(
        "A1 profitability: mu >= alpha_bar_I".into(),
        params.mu - derived.alpha_bar(levels),
    );

    let efficiency = (params.mu * params.epsilon - params.benefit) / params.benefit
        * (params.epsilon / (1.0 + params.epsilon));
    for j in 1..=levels {
        push(
            format!(
                "A2 monitoring efficiency j={j}: r/alpha_bar_j <= (mu eps - B)/B * eps/(1+eps)"
            ),
            efficiency - params.r / derived.alpha_bar(j),
        );
    }
    for j in 2..=levels {
        push(
            format!("A3 contagion j={j}: alpha_j <= alpha_(j-1)"),
            params.alpha(j - 1) - params.alpha(j),
        );
    }

    let overall = conditions.iter().all(|c| c.holds);
    AssumptionReport {
        conditions,
        overall,
    }
}

const X_ZERO: f64 = 1e-10;
const X_ONE: f64 = 1e-7;

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain("beta", beta, "(0, 1]"))
    }
}

/// `ln phi_beta(x) = (1/x - 1) ln((1+x)/(1+(1+beta)x))`, finite on `x >= 0`.
fn ln_phi(x: f64, beta: f64) -> f64 {
    if x < X_ZERO {
        return -beta;
    }
    // (1+x)/(1+(1+beta)x) = 1 - beta x/(1+(1+beta)x)
    let ln_ratio = (-beta * x / (1.0 + (1.0 + beta) * x)).ln_1p();
    (1.0 / x - 1.0) * ln_ratio
}

pub fn phi_beta(x: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("x", x, "(0, inf)"));
    }
    Ok(ln_phi(x, beta).exp())
}

/// Continuous extension of `(phi_beta(x) - x) / ((1 - x) phi_beta(x))` on `x >= 0`.
pub fn psi_beta(x: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain("x", x, "[0, inf)"));
    }
    if x < X_ZERO {
        return Ok(1.0);
    }
    if (x - 1.0).abs() < X_ONE {
        return Ok(1.0 - ((2.0 + beta) / 2.0).ln());
    }
    // (phi - x)/((1-x) phi) = (1 - x e^{-ln phi}) / (1 - x)
    let lp = ln_phi(x, beta);
    Ok((1.0 - x * (-lp).exp()) / (1.0 - x))
}

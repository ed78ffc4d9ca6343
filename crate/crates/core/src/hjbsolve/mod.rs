//! Recursive construction of the investors' value functions `v_1..v_I`.
//!
//! `v_1` is affine above `b_1`. For `j >= 2` the cap `gamma_j` is read off the
//! slope of `v_{j-1}`, then `v_j` solves a linear ODE on `(b_j, gamma_j]`
//! driven by `v_{j-1}(u - b_j)`, is extended linearly through the origin
//! below `b_j` and with slope `-1` above `gamma_j`.

mod level;
mod ode;
mod shape;

pub use level::{Region, Side, ValueFunctionLevel};
pub use shape::{check_shape, LevelShape, ShapeReport};

use crate::error::{Error, Result};
use crate::params::{self, DerivedQuantities, PoolParams};
use crate::quadrature::GaussLegendre;
use ode::LevelOde;

const GAUSS_ORDER: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Grid nodes per level on `(b_j, gamma_j]`.
    pub grid_points: usize,
    /// Absolute quadrature tolerance for one level.
    pub quad_tol: f64,
    /// Width of the final bracket when locating `gamma_j`.
    pub bisect_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            grid_points: 2048,
            quad_tol: 1e-10,
            bisect_tol: 1e-12,
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<()> {
        if self.grid_points < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid_points must be at least 8, got {}",
                self.grid_points
            )));
        }
        if !(self.quad_tol > 0.0) || !(self.bisect_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "quad_tol and bisect_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Whether the bank discounts the future.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Impatient,
    /// `r = 0`: caps are cumulative sums of the `b_j` and the contract reaches first best.
    Patient,
}

impl Regime {
    pub fn of(r: f64) -> Self {
        if r == 0.0 {
            Regime::Patient
        } else {
            Regime::Impatient
        }
    }
}

/// Both sides of the hyp-lambda inequality at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypLambda {
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverMeta {
    pub settings: SolverSettings,
    pub regime: Regime,
    pub hyp_lambda: Vec<HypLambda>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunctions {
    pub params: PoolParams,
    pub derived: DerivedQuantities,
    pub levels: Vec<ValueFunctionLevel>,
    pub meta: SolverMeta,
}

pub fn solve_v1(derived: &DerivedQuantities, mu: f64, r: f64) -> ValueFunctionLevel {
    ode::solve_v1(derived, mu, r)
}

pub fn find_gamma(
    j: usize,
    prev: &ValueFunctionLevel,
    derived: &DerivedQuantities,
    r: f64,
    bisect_tol: f64,
) -> Result<f64> {
    ode::find_gamma(derived, r, j, prev, bisect_tol)
}

/// `v~_j(u, gamma)`: the ODE solution on `(b_j, gamma]` whose slope reaches
/// `-1` exactly at `gamma`.
pub fn eval_candidate(
    params: &PoolParams,
    derived: &DerivedQuantities,
    j: usize,
    u: f64,
    gamma: f64,
    prev: &ValueFunctionLevel,
    quad_tol: f64,
) -> Result<f64> {
    let b = derived.b(j);
    if !(u > b && u <= gamma) {
        return Err(Error::domain(
            "u",
            u,
            format!("(b_j, gamma] = ({b}, {gamma}]"),
        ));
    }
    let gl = GaussLegendre::new(GAUSS_ORDER);
    let ode = LevelOde::new(derived, params.mu, params.r, j, prev);
    Ok(ode.candidate(&gl, u, gamma, quad_tol))
}

/// Builds `v_1..v_I`. Fails if the standing assumptions, the continuation
/// condition or hyp-lambda fail at any level.
pub fn build_all(params: &PoolParams, settings: &SolverSettings) -> Result<ValueFunctions> {
    settings.validate()?;
    let derived = params::derive(params)?;
    let report = params::check_assumptions(params, &derived);
    if !report.overall {
        let names: Vec<_> = report
            .failures()
            .map(|c| format!("{} (margin {:.6e})", c.name, c.margin))
            .collect();
        return Err(Error::AssumptionsViolated(names.join("; ")));
    }

    let gl = GaussLegendre::new(GAUSS_ORDER);
    let r = params.r;
    let mut levels = Vec::with_capacity(params.loans);
    let mut hyp_lambda = Vec::new();
    levels.push(ode::solve_v1(&derived, params.mu, r));

    for j in 2..=params.loans {
        let prev = &levels[j - 2];
        let rhs = params::psi_beta(r / derived.lambda(j), 1.0)?;
        let lhs = prev.deriv(prev.b, Side::Right).max(0.0) * prev.b / prev.vbar;
        if !(lhs <= rhs) {
            return Err(Error::HypLambdaViolated { level: j, lhs, rhs });
        }
        hyp_lambda.push(HypLambda { j, lhs, rhs });

        let gamma = ode::find_gamma(&derived, r, j, prev, settings.bisect_tol)?;
        let level = build_level(&derived, params.mu, r, j, prev, gamma, settings, &gl);
        levels.push(level);
    }

    Ok(ValueFunctions {
        params: params.clone(),
        derived,
        levels,
        meta: SolverMeta {
            settings: settings.clone(),
            regime: Regime::of(r),
            hyp_lambda,
        },
    })
}

#[allow(clippy::too_many_arguments)]
fn build_level(
    derived: &DerivedQuantities,
    mu: f64,
    r: f64,
    j: usize,
    prev: &ValueFunctionLevel,
    gamma: f64,
    settings: &SolverSettings,
    gl: &GaussLegendre,
) -> ValueFunctionLevel {
    let b = derived.b(j);
    let b_prev = derived.b(j - 1);
    let ode = LevelOde::new(derived, mu, r, j, prev);

    let kinks = kink_points(derived, j, gamma);
    let nodes = cluster_grid(&kinks, settings.grid_points);
    let values = ode.solve_on(gl, &nodes, settings.quad_tol);
    let vbar = values[0];

    let mut deriv_left: Vec<f64> = nodes
        .iter()
        .zip(&values)
        .map(|(&u, &v)| ode.slope(u, v))
        .collect();
    let mut deriv_right = deriv_left.clone();
    let last = nodes.len() - 1;
    deriv_left[last] = -1.0;
    deriv_right[last] = -1.0;
    deriv_left[0] = vbar / b;

    let mut grid = Vec::with_capacity(nodes.len() + 1);
    grid.push(0.0);
    grid.extend_from_slice(&nodes);
    let mut all_values = vec![0.0];
    all_values.extend(values);
    let slope_low = vbar / b;
    deriv_left.insert(0, slope_low);
    deriv_right.insert(0, slope_low);

    let mut breakpoints = vec![0.0, b];
    for x in [b + b_prev, gamma] {
        if x > *breakpoints.last().unwrap() + MERGE_TOL * gamma {
            breakpoints.push(x);
        }
    }

    ValueFunctionLevel {
        j,
        b,
        b_prev,
        gamma,
        breakpoints,
        grid,
        values: all_values,
        deriv_left,
        deriv_right,
        vbar,
    }
}

const MERGE_TOL: f64 = 1e-12;

/// `b_j`, the partial sums `b_j + b_{j-1} + ... ` lying strictly below the
/// cap, and the cap itself.
fn kink_points(derived: &DerivedQuantities, j: usize, gamma: f64) -> Vec<f64> {
    let mut pts = vec![derived.b(j)];
    let mut acc = derived.b(j);
    for i in (1..j).rev() {
        acc += derived.b(i);
        if acc < gamma * (1.0 - 1e-9) {
            pts.push(acc);
        } else {
            break;
        }
    }
    pts.push(gamma);
    pts
}

/// Distributes about `total` nodes over the segments between consecutive
/// kinks, half uniformly and half on a cosine map that crowds both ends.
fn cluster_grid(kinks: &[f64], total: usize) -> Vec<f64> {
    let span = kinks[kinks.len() - 1] - kinks[0];
    let mut nodes = vec![kinks[0]];
    for w in kinks.windows(2) {
        let (a, c) = (w[0], w[1]);
        let n = ((total as f64 * (c - a) / span).round() as usize).max(8);
        for k in 1..=n {
            let t = k as f64 / n as f64;
            let s = 0.5 * t + 0.25 * (1.0 - (std::f64::consts::PI * t).cos());
            nodes.push(if k == n { c } else { a + (c - a) * s });
        }
    }
    nodes
}

impl ValueFunctions {
    pub fn loans(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, j: usize) -> Result<&ValueFunctionLevel> {
        if j == 0 || j > self.levels.len() {
            return Err(Error::UnknownLevel {
                level: j,
                max: self.levels.len(),
            });
        }
        Ok(&self.levels[j - 1])
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.gamma).collect()
    }

    pub fn vbars(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.vbar).collect()
    }

    /// `v_j(u)` without level checks. Level 0 is the empty pool: nothing is
    /// left to collect and any utility still promised to the bank is owed
    /// outright, `v_0(u) = -u`.
    pub(crate) fn value(&self, j: usize, u: f64) -> f64 {
        if j == 0 {
            -u.max(0.0)
        } else {
            self.levels[j - 1].value(u)
        }
    }

    pub(crate) fn deriv(&self, j: usize, u: f64, side: Side) -> f64 {
        if j == 0 {
            if u < 0.0 || (u == 0.0 && side == Side::Left) {
                0.0
            } else {
                -1.0
            }
        } else {
            self.levels[j - 1].deriv(u, side)
        }
    }

    fn check_level(&self, j: usize) -> Result<()> {
        if j > self.levels.len() {
            Err(Error::UnknownLevel {
                level: j,
                max: self.levels.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn eval(&self, j: usize, u: f64) -> Result<f64> {
        self.check_level(j)?;
        if !(u >= 0.0) {
            return Err(Error::domain("u", u, "[0, inf)"));
        }
        Ok(self.value(j, u))
    }

    pub fn eval_deriv(&self, j: usize, u: f64, side: Side) -> Result<f64> {
        self.check_level(j)?;
        if !(u >= 0.0) {
            return Err(Error::domain("u", u, "[0, inf)"));
        }
        Ok(self.deriv(j, u, side))
    }

    /// `(r u + lambda_j b_j) v_j'(u) + j mu - lambda_j (v_j(u) - v_{j-1}(u - b_j))`.
    ///
    /// Zero on `(b_j, gamma_j]`, non-positive above the cap.
    pub fn hjb_residual(&self, j: usize, u: f64) -> Result<f64> {
        let level = self.level(j)?;
        if !(u > level.b) {
            return Err(Error::domain(
                "u",
                u,
                format!("(b_j, inf) = ({}, inf)", level.b),
            ));
        }
        let lambda = self.derived.lambda(j);
        let r = self.params.r;
        let dv = if u <= level.gamma {
            level.deriv(u, Side::Left)
        } else {
            -1.0
        };
        let drift = r * u + lambda * level.b;
        Ok(drift * dv + j as f64 * self.params.mu
            - lambda * (level.value(u) - self.value(j - 1, u - level.b)))
    }

    /// Grid search over `(theta, z)` of the reparametrised HJB bracket at `(j, u)`
    /// with zero fees. Serves as an optimality oracle for the contract.
    pub fn brute_force_sup(
        &self,
        j: usize,
        u: f64,
        n_theta: usize,
        n_z: usize,
    ) -> Result<BruteForceSup> {
        let level = self.level(j)?;
        if !(u > level.b && u <= level.gamma) {
            return Err(Error::domain(
                "u",
                u,
                format!("(b_j, gamma_j] = ({}, {}]", level.b, level.gamma),
            ));
        }
        let n_theta = n_theta.max(2);
        let n_z = n_z.max(2);
        let b = level.b;
        let b_prev = level.b_prev;
        let lambda = self.derived.lambda(j);
        let r = self.params.r;
        let jmu = j as f64 * self.params.mu;
        let v = level.value(u);
        let dv = level.deriv(u, Side::Left);

        let theta_max = if b_prev > 0.0 {
            ((u - b) / b_prev).min(1.0)
        } else {
            1.0
        };
        let d_theta = theta_max / (n_theta - 1) as f64;
        let mut best = BruteForceSup {
            sup: f64::NEG_INFINITY,
            theta: 0.0,
            z: 0.0,
            d_theta,
            d_z: 0.0,
        };
        for it in 0..n_theta {
            let theta = if it == n_theta - 1 {
                theta_max
            } else {
                d_theta * it as f64
            };
            let z_lo = b_prev * theta;
            let z_hi = u - b;
            let d_z = (z_hi - z_lo).max(0.0) / (n_z - 1) as f64;
            for iz in 0..n_z {
                let z = if iz == n_z - 1 {
                    z_hi
                } else {
                    z_lo + d_z * iz as f64
                };
                // perspective of v_{j-1}; slope at infinity is -1
                let continuation = if theta > 0.0 {
                    theta * self.value(j - 1, z / theta)
                } else {
                    -z
                };
                let bracket = (r * u + lambda * (u - z)) * dv + jmu - lambda * (v - continuation);
                if bracket > best.sup {
                    best = BruteForceSup {
                        sup: bracket,
                        theta,
                        z,
                        d_theta,
                        d_z,
                    };
                }
            }
        }
        Ok(best)
    }
}

/// Result of [`ValueFunctions::brute_force_sup`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceSup {
    pub sup: f64,
    pub theta: f64,
    pub z: f64,
    /// Grid spacing in `theta`.
    pub d_theta: f64,
    /// Grid spacing in `z` along the row of the argmax.
    pub d_z: f64,
}

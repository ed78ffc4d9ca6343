//! Linear first-order ODE satisfied by `v_j` on `(b_j, gamma_j]`:
//!
//! `(r u + lambda_j b_j) v'(u) + j mu - lambda_j (v(u) - v_{j-1}(u - b_j)) = 0`,
//!
//! with terminal slope `v'(gamma) = -1`. Its solution for a given cap `gamma`
//! is written with the integrating kernel
//! `K(u, x) = ((r u + lambda b) / (r x + lambda b))^(lambda / r)`, which tends to
//! `exp((u - x) / b)` as `r -> 0`.

use super::level::{Side, ValueFunctionLevel};
use crate::error::{Error, Result};
use crate::params::DerivedQuantities;
use crate::quadrature::GaussLegendre;

/// Below this rate the power kernel is replaced by its exponential limit.
pub(crate) const EXP_KERNEL_RATE: f64 = 1e-8;

pub(crate) struct LevelOde<'a> {
    pub b: f64,
    pub lambda: f64,
    pub jmu: f64,
    pub r: f64,
    pub prev: &'a ValueFunctionLevel,
}

impl<'a> LevelOde<'a> {
    pub fn new(
        derived: &DerivedQuantities,
        mu: f64,
        r: f64,
        j: usize,
        prev: &'a ValueFunctionLevel,
    ) -> Self {
        LevelOde {
            b: derived.b(j),
            lambda: derived.lambda(j),
            jmu: j as f64 * mu,
            r,
            prev,
        }
    }

    fn drift(&self, x: f64) -> f64 {
        self.r * x + self.lambda * self.b
    }

    /// `ln K(u, x)`, non-positive for `x >= u`.
    fn log_kernel(&self, u: f64, x: f64) -> f64 {
        if self.r < EXP_KERNEL_RATE {
            (u - x) / self.b
        } else {
            self.lambda / self.r * (self.r * (u - x) / self.drift(x)).ln_1p()
        }
    }

    fn source(&self, x: f64) -> f64 {
        let a = if self.r < EXP_KERNEL_RATE {
            self.lambda * self.b
        } else {
            self.drift(x)
        };
        (self.jmu + self.lambda * self.prev.value(x - self.b)) / a
    }

    /// Value at the cap, where `v'(gamma) = -1` pins `v` through the ODE.
    pub fn terminal_value(&self, gamma: f64) -> f64 {
        self.prev.value(gamma - self.b) + (self.jmu - self.drift(gamma)) / self.lambda
    }

    /// `v'(u)` implied by the ODE once `v(u)` is known.
    pub fn slope(&self, u: f64, v: f64) -> f64 {
        (self.lambda * (v - self.prev.value(u - self.b)) - self.jmu) / self.drift(u)
    }

    /// Points where `x -> v_{j-1}(x - b_j)` loses smoothness, including the
    /// joins of the interpolant of `v_{j-1}`.
    fn integrand_splits(&self, lo: f64, hi: f64) -> Vec<f64> {
        let shift = self.b;
        let first = self.prev.grid.partition_point(|&x| x + shift <= lo);
        self.prev.grid[first..]
            .iter()
            .map(|x| x + shift)
            .take_while(|&x| x < hi)
            .collect()
    }

    /// `int_u^x1 source(x) K(u, x) dx`.
    fn kernel_integral(&self, gl: &GaussLegendre, u: f64, x1: f64, tol: f64) -> f64 {
        let f = |x: f64| self.source(x) * self.log_kernel(u, x).exp();
        let splits = self.integrand_splits(u, x1);
        gl.integrate_split(&f, u, x1, &splits, tol)
    }

    /// Candidate solution `v~_j(u, gamma)` for an arbitrary cap.
    pub fn candidate(&self, gl: &GaussLegendre, u: f64, gamma: f64, tol: f64) -> f64 {
        self.kernel_integral(gl, u, gamma, tol)
            + self.terminal_value(gamma) * self.log_kernel(u, gamma).exp()
    }

    /// Values on `nodes` (ascending, last node is the cap) by backward
    /// recursion `V(x_i) = int_{x_i}^{x_{i+1}} ... + K(x_i, x_{i+1}) V(x_{i+1})`.
    pub fn solve_on(&self, gl: &GaussLegendre, nodes: &[f64], tol: f64) -> Vec<f64> {
        let n = nodes.len();
        let gamma = nodes[n - 1];
        let span = gamma - nodes[0];
        let mut values = vec![0.0; n];
        values[n - 1] = self.terminal_value(gamma);
        for i in (0..n - 1).rev() {
            let (x0, x1) = (nodes[i], nodes[i + 1]);
            let cell_tol = tol * (x1 - x0) / span;
            values[i] = self.kernel_integral(gl, x0, x1, cell_tol)
                + self.log_kernel(x0, x1).exp() * values[i + 1];
        }
        values
    }
}

/// Closed form of the single-loan value function.
pub(crate) fn solve_v1(derived: &DerivedQuantities, mu: f64, r: f64) -> ValueFunctionLevel {
    let b = derived.b(1);
    let lambda = derived.lambda(1);
    let vbar = (mu - b * (r + lambda)) / lambda;
    let slope = vbar / b;
    ValueFunctionLevel {
        j: 1,
        b,
        b_prev: 0.0,
        gamma: b,
        breakpoints: vec![0.0, b],
        grid: vec![0.0, b],
        values: vec![0.0, vbar],
        deriv_left: vec![slope, slope],
        deriv_right: vec![slope, -1.0],
        vbar,
    }
}

/// Cap of level `j`: the point where `r / lambda_j - 1` enters the
/// subdifferential of `v_{j-1}(. - b_j)`.
pub(crate) fn find_gamma(
    derived: &DerivedQuantities,
    r: f64,
    j: usize,
    prev: &ValueFunctionLevel,
    bisect_tol: f64,
) -> Result<f64> {
    let b = derived.b(j);
    let target = r / derived.lambda(j) - 1.0;
    let ceiling = prev.slope_low();
    if target > ceiling {
        return Err(Error::ContinuationViolated {
            level: j,
            lhs: target,
            rhs: ceiling,
        });
    }
    let lo_slope = prev.deriv(prev.b, Side::Right);
    if target >= lo_slope {
        return Ok(b + prev.b);
    }
    if r == 0.0 {
        return Ok(b + prev.gamma);
    }
    // prev' decreases continuously from lo_slope to -1 on (b_{j-1}, gamma_{j-1}]
    let (mut lo, mut hi) = (prev.b, prev.gamma);
    for _ in 0..200 {
        if hi - lo <= bisect_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if prev.deriv(mid, Side::Right) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(b + 0.5 * (lo + hi))
}

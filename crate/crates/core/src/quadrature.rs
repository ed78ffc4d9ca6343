//! Adaptive composite Gauss-Legendre quadrature.

use std::f64::consts::PI;

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule with Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn apply<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum();
        s * half
    }

    /// Integrates `f` over `[a, b]` to absolute tolerance `tol` by recursive bisection.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, tol: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let whole = self.apply(f, a, b);
        self.refine(f, a, b, whole, tol, 0)
    }

    /// Integrates over `[a, b]`, splitting at every point of `splits` strictly inside.
    pub fn integrate_split<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        splits: &[f64],
        tol: f64,
    ) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut edges = Vec::with_capacity(splits.len() + 2);
        edges.push(a);
        edges.extend(splits.iter().copied().filter(|&s| s > a && s < b));
        edges.push(b);
        edges.sort_by(f64::total_cmp);
        let len = b - a;
        edges
            .windows(2)
            .map(|w| self.integrate(f, w[0], w[1], tol * (w[1] - w[0]) / len))
            .sum()
    }

    fn refine<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = self.apply(f, a, m);
        let right = self.apply(f, m, b);
        let split = left + right;
        let err = (split - whole).abs();
        let floor = 64.0 * f64::EPSILON * split.abs();
        if err <= tol.max(floor) || depth >= MAX_DEPTH {
            return split;
        }
        self.refine(f, a, m, left, 0.5 * tol, depth + 1)
            + self.refine(f, m, b, right, 0.5 * tol, depth + 1)
    }
}

const MAX_DEPTH: u32 = 40;

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

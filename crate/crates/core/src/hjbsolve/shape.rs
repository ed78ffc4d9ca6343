use super::{Side, ValueFunctions};

/// Largest violation of each structural property at one level. All entries
/// are non-negative; zero means the property holds exactly on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelShape {
    pub j: usize,
    /// Slopes must not increase along the grid, kinks included.
    pub concavity: f64,
    /// `v_j' >= -1` below the cap.
    pub slope_floor: f64,
    /// `|v_j'(gamma_j) + 1|` with the slope recomputed from the ODE.
    pub cap_slope: f64,
    /// `v_j'(u) <= v_{j-1}'(u - b_j)` for `u >= b_j`, matching sides.
    pub propz: f64,
    /// Mismatch between the stored `v_j'(b_j+)` and `(lambda vbar - j mu)/(b (r + lambda))`.
    pub boundary_identity: f64,
    /// `v_j'(b_j-) - v_j'(b_j+)`, strictly positive for a concave kink.
    pub kink_jump: f64,
}

impl LevelShape {
    pub fn worst(&self) -> f64 {
        self.concavity
            .max(self.slope_floor)
            .max(self.cap_slope)
            .max(self.propz)
            .max(self.boundary_identity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeReport {
    pub tolerance: f64,
    pub levels: Vec<LevelShape>,
}

impl ShapeReport {
    pub fn passed(&self) -> bool {
        self.levels
            .iter()
            .all(|l| l.worst() <= self.tolerance && l.kink_jump > 0.0)
    }
}

const SHAPE_TOL: f64 = 1e-8;

pub fn check_shape(vf: &ValueFunctions) -> ShapeReport {
    let r = vf.params.r;
    let mu = vf.params.mu;
    let levels = vf
        .levels
        .iter()
        .map(|level| {
            let j = level.j;
            let b = level.b;
            let lambda = vf.derived.lambda(j);
            let n = level.grid.len();

            let mut concavity: f64 = 0.0;
            for i in 0..n {
                concavity = concavity.max(level.deriv_right[i] - level.deriv_left[i]);
                if i + 1 < n {
                    concavity = concavity.max(level.deriv_left[i + 1] - level.deriv_right[i]);
                }
            }

            let mut slope_floor: f64 = 0.0;
            for (u, d) in level.grid.iter().zip(&level.deriv_right) {
                if *u < level.gamma {
                    slope_floor = slope_floor.max(-1.0 - d);
                }
            }

            let g = level.gamma;
            let ode_slope = ((lambda * (level.value(g) - vf.value(j - 1, g - b))) - j as f64 * mu)
                / (r * g + lambda * b);
            let cap_slope = (ode_slope + 1.0).abs();

            let mut propz: f64 = 0.0;
            let beyond = (1..=8).map(|k| g + 0.25 * b * k as f64);
            let points: Vec<f64> = level
                .grid
                .iter()
                .copied()
                .filter(|&u| u >= b)
                .chain(beyond)
                .collect();
            for &u in &points {
                let x = u - b;
                propz = propz.max(level.deriv(u, Side::Right) - vf.deriv(j - 1, x, Side::Right));
                if u > b {
                    propz = propz.max(level.deriv(u, Side::Left) - vf.deriv(j - 1, x, Side::Left));
                }
            }

            let right_at_b = level.deriv(b, Side::Right);
            let identity = (lambda * level.vbar - j as f64 * mu) / (b * (r + lambda));
            LevelShape {
                j,
                concavity,
                slope_floor,
                cap_slope,
                propz,
                boundary_identity: (right_at_b - identity).abs(),
                kink_jump: level.deriv(b, Side::Left) - right_at_b,
            }
        })
        .collect();
    ShapeReport {
        tolerance: SHAPE_TOL,
        levels,
    }
}

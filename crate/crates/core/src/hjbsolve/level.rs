use std::fmt;

/// Which one-sided derivative to report at a kink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Part of the utility axis a point belongs to at a given level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `[0, b_j)`, linear through the origin.
    LinearLow,
    /// `[b_j, b_j + b_{j-1})`, default triggers stochastic liquidation.
    Probation,
    /// `[b_j + b_{j-1}, gamma_j)`.
    Interior,
    /// `[gamma_j, inf)`, slope -1.
    LinearHigh,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::LinearLow => "linear-low",
            Region::Probation => "probation",
            Region::Interior => "interior",
            Region::LinearHigh => "linear-high",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear-low" => Some(Region::LinearLow),
            "probation" => Some(Region::Probation),
            "interior" => Some(Region::Interior),
            "linear-high" => Some(Region::LinearHigh),
            _ => None,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Solved value function `v_j` for one pool size.
///
/// Grid nodes cover `[0, gamma_j]`; node `0` and node `b_j` bound the linear
/// part, the remaining nodes sample `(b_j, gamma_j]`. Between nodes the
/// function is a cubic Hermite interpolant whose slopes are adjusted so that
/// each cell stays concave. Outside `[b_j, gamma_j]` the exact linear forms
/// are used.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunctionLevel {
    pub j: usize,
    pub b: f64,
    /// `b_{j-1}`, zero for the last loan.
    pub b_prev: f64,
    pub gamma: f64,
    /// `{0, b_j, b_j + b_{j-1}, gamma_j}` without duplicates.
    pub breakpoints: Vec<f64>,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub deriv_left: Vec<f64>,
    pub deriv_right: Vec<f64>,
    /// `v_j(b_j)`.
    pub vbar: f64,
}

impl ValueFunctionLevel {
    pub fn slope_low(&self) -> f64 {
        self.vbar / self.b
    }

    pub fn value_at_gamma(&self) -> f64 {
        *self.values.last().expect("non-empty grid")
    }

    pub fn region(&self, u: f64) -> Region {
        if u < self.b {
            Region::LinearLow
        } else if u >= self.gamma {
            Region::LinearHigh
        } else if u < self.b + self.b_prev {
            Region::Probation
        } else {
            Region::Interior
        }
    }

    /// Index `i` with `grid[i] <= u < grid[i + 1]`, for `u` inside `[b, gamma)`.
    fn cell(&self, u: f64) -> usize {
        let i = self.grid.partition_point(|&x| x <= u);
        i.saturating_sub(1).min(self.grid.len() - 2)
    }

    fn node(&self, u: f64) -> Option<usize> {
        self.grid.binary_search_by(|x| x.total_cmp(&u)).ok()
    }

    pub fn value(&self, u: f64) -> f64 {
        if u <= self.b {
            return self.slope_low() * u;
        }
        if u >= self.gamma {
            return self.value_at_gamma() - (u - self.gamma);
        }
        let i = self.cell(u);
        self.hermite(i).value(u)
    }

    pub fn deriv(&self, u: f64, side: Side) -> f64 {
        if let Some(i) = self.node(u) {
            return match side {
                Side::Left => self.deriv_left[i],
                Side::Right => self.deriv_right[i],
            };
        }
        if u < self.b {
            return self.slope_low();
        }
        if u > self.gamma {
            return -1.0;
        }
        let i = self.cell(u);
        self.hermite(i).deriv(u)
    }

    fn hermite(&self, i: usize) -> Cubic {
        Cubic::concave(
            self.grid[i],
            self.grid[i + 1],
            self.values[i],
            self.values[i + 1],
            self.deriv_right[i],
            self.deriv_left[i + 1],
        )
    }
}

/// Cubic Hermite piece on `[x0, x1]`.
#[derive(Debug, Clone, Copy)]
struct Cubic {
    x0: f64,
    h: f64,
    y0: f64,
    y1: f64,
    d0: f64,
    d1: f64,
}

impl Cubic {
    /// Hermite piece with endpoint slopes moved, if needed, just enough for
    /// the second derivative to be non-positive at both ends (and therefore
    /// on the whole cell).
    fn concave(x0: f64, x1: f64, y0: f64, y1: f64, mut d0: f64, mut d1: f64) -> Self {
        let h = x1 - x0;
        let s = (y1 - y0) / h;
        if 2.0 * d0 + d1 < 3.0 * s {
            d0 = 0.5 * (3.0 * s - d1);
        }
        if d0 + 2.0 * d1 > 3.0 * s {
            d1 = 0.5 * (3.0 * s - d0);
        }
        Cubic {
            x0,
            h,
            y0,
            y1,
            d0,
            d1,
        }
    }

    fn value(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y0 + h10 * self.h * self.d0 + h01 * self.y1 + h11 * self.h * self.d1
    }

    fn deriv(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.h;
        let t2 = t * t;
        let g00 = 6.0 * t2 - 6.0 * t;
        let g10 = 3.0 * t2 - 4.0 * t + 1.0;
        let g01 = -6.0 * t2 + 6.0 * t;
        let g11 = 3.0 * t2 - 2.0 * t;
        (g00 * self.y0 + g01 * self.y1) / self.h + g10 * self.d0 + g11 * self.d1
    }
}

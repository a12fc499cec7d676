//! Uniform grids, sampled functions and composite quadrature.

use crate::error::{Error, Result};

/// Default number of intervals on `[0, π]`.
pub const DEFAULT_M: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    m: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::Input(format!("grid endpoints must satisfy a < b, got [{a}, {b}]")));
        }
        if m == 0 {
            return Err(Error::Input("grid needs at least one interval".into()));
        }
        Ok(Self { a, b, m })
    }

    /// `[0, π]` with `m` intervals.
    pub fn unit(m: usize) -> Result<Self> {
        Self::new(0.0, std::f64::consts::PI, m)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.m as f64
    }

    pub fn len(&self) -> usize {
        self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.m {
            self.b
        } else {
            self.a + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        let slack = 1e-12 * (self.b - self.a);
        x >= self.a - slack && x <= self.b + slack
    }

    /// Interval index `k` and local coordinate `s ∈ [0, 1]` with `x = x_k + s·h`.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !self.contains(x) {
            return Err(Error::Domain { x, a: self.a, b: self.b });
        }
        let u = ((x - self.a) / self.h()).clamp(0.0, self.m as f64);
        let k = (u.floor() as usize).min(self.m - 1);
        Ok((k, u - k as f64))
    }

    /// Index of the node nearest to `x`.
    pub fn nearest(&self, x: f64) -> Result<usize> {
        let (k, s) = self.locate(x)?;
        Ok(if s > 0.5 { k + 1 } else { k })
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.m == other.m
            && (self.a - other.a).abs() <= 1e-14 * (1.0 + self.a.abs())
            && (self.b - other.b).abs() <= 1e-14 * (1.0 + self.b.abs())
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grids differ: [{}, {}]/{} vs [{}, {}]/{}",
                self.a, self.b, self.m, other.a, other.b, other.m
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn integral(&self, rule: Rule) -> f64 {
        integrate(&self.values, self.grid.h(), rule)
    }

    /// Four-point Lagrange interpolation, exact for cubics.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (k, s) = self.grid.locate(x)?;
        Ok(interp_cubic(&self.values, k, s))
    }
}

/// Composite quadrature rule on a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rule {
    Trapezoid,
    /// Fourth-order rule built from local cubic interpolants.
    #[default]
    Cubic,
}

/// Running integral `∫_{x_0}^{x_i} f` at every node.
pub fn cumulative(f: &[f64], h: f64, rule: Rule) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let m = n - 1;
    if rule == Rule::Trapezoid || m < 3 {
        for k in 0..m {
            out[k + 1] = out[k] + 0.5 * h * (f[k] + f[k + 1]);
        }
        return out;
    }
    let w = h / 24.0;
    for k in 0..m {
        let piece = if k == 0 {
            w * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if k == m - 1 {
            w * (9.0 * f[m] + 19.0 * f[m - 1] - 5.0 * f[m - 2] + f[m - 3])
        } else {
            w * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2])
        };
        out[k + 1] = out[k] + piece;
    }
    out
}

/// Running integral `∫_{x_i}^{x_m} f` at every node.
pub fn cumulative_tail(f: &[f64], h: f64, rule: Rule) -> Vec<f64> {
    let rev: Vec<f64> = f.iter().rev().copied().collect();
    let mut c = cumulative(&rev, h, rule);
    c.reverse();
    c
}

pub fn integrate(f: &[f64], h: f64, rule: Rule) -> f64 {
    cumulative(f, h, rule).last().copied().unwrap_or(0.0)
}

/// Cubic Lagrange interpolation inside interval `k` at local coordinate `s`.
pub fn interp_cubic(v: &[f64], k: usize, s: f64) -> f64 {
    let n = v.len();
    if n < 4 {
        if n == 1 {
            return v[0];
        }
        let k = k.min(n - 2);
        return v[k] + s * (v[k + 1] - v[k]);
    }
    // stencil start j0 so that j0..j0+4 is inside and contains k, k+1
    let j0 = k.saturating_sub(1).min(n - 4);
    let t = (k - j0) as f64 + s;
    let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    l0 * v[j0] + l1 * v[j0 + 1] + l2 * v[j0 + 2] + l3 * v[j0 + 3]
}

/// Integral of the cubic interpolant of `v` over `[x_k, x_k + s·h]`.
pub fn partial_interval(v: &[f64], h: f64, k: usize, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    // three-point Gauss–Legendre is exact for the cubic interpolant
    let r = (0.6f64).sqrt();
    let pts = [(-r, 5.0 / 9.0), (0.0, 8.0 / 9.0), (r, 5.0 / 9.0)];
    let half = 0.5 * s;
    pts.iter()
        .map(|&(g, w)| w * interp_cubic(v, k, half * (1.0 + g)))
        .sum::<f64>()
        * half
        * h
}

/// Running integral evaluated at an arbitrary point of the grid.
pub fn cumulative_at(grid: &Grid, f: &[f64], cum: &[f64], x: f64) -> Result<f64> {
    let (k, s) = grid.locate(x)?;
    Ok(cum[k] + partial_interval(f, grid.h(), k, s))
}

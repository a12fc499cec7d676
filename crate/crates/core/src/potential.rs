//! Potential matrices `Ω = p·σ₂ + q·σ₃` and boundary angles.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{interp_cubic, Grid, GridFunction, DEFAULT_M};
use crate::pauli::Mat2;

pub type PqFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// Closed-form potentials, evaluated lazily wherever a solver needs them.
#[derive(Clone)]
pub enum Shape {
    Zero,
    Constant { p: f64, q: f64 },
    /// `p ≡ 0`, `q(x) = amp·sin x`.
    SinQ { amp: f64 },
    /// `p ≡ 0`, `q(x) = x`.
    Linear,
    Custom { name: String, f: PqFn },
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Zero => write!(f, "Zero"),
            Shape::Constant { p, q } => write!(f, "Constant(p={p}, q={q})"),
            Shape::SinQ { amp } => write!(f, "SinQ({amp})"),
            Shape::Linear => write!(f, "Linear"),
            Shape::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl Shape {
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match self {
            Shape::Zero => (0.0, 0.0),
            Shape::Constant { p, q } => (*p, *q),
            Shape::SinQ { amp } => (0.0, amp * x.sin()),
            Shape::Linear => (0.0, x),
            Shape::Custom { f, .. } => f(x),
        }
    }
}

#[derive(Clone, Debug)]
pub enum PotentialMatrix {
    Closed { shape: Shape, a: f64, b: f64 },
    Sampled { grid: Grid, p: Vec<f64>, q: Vec<f64> },
}

impl PotentialMatrix {
    pub fn zero() -> Self {
        Self::closed(Shape::Zero, 0.0, PI)
    }

    pub fn sin_q() -> Self {
        Self::closed(Shape::SinQ { amp: 1.0 }, 0.0, PI)
    }

    pub fn constant(p: f64, q: f64) -> Self {
        Self::closed(Shape::Constant { p, q }, 0.0, PI)
    }

    pub fn closed(shape: Shape, a: f64, b: f64) -> Self {
        PotentialMatrix::Closed { shape, a, b }
    }

    pub fn custom(name: &str, a: f64, b: f64, f: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        Self::closed(Shape::Custom { name: name.to_string(), f: Arc::new(f) }, a, b)
    }

    pub fn sampled(grid: Grid, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != grid.len() || q.len() != grid.len() {
            return Err(Error::Shape(format!(
                "potential has {} / {} samples for {} nodes",
                p.len(),
                q.len(),
                grid.len()
            )));
        }
        let pot = PotentialMatrix::Sampled { grid, p, q };
        pot.check_finite()?;
        Ok(pot)
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            PotentialMatrix::Closed { a, b, .. } => (*a, *b),
            PotentialMatrix::Sampled { grid, .. } => (grid.a(), grid.b()),
        }
    }

    /// The grid a sampled potential lives on, or the default grid over the domain.
    pub fn natural_grid(&self) -> Grid {
        match self {
            PotentialMatrix::Sampled { grid, .. } => *grid,
            PotentialMatrix::Closed { a, b, .. } => {
                Grid::new(*a, *b, DEFAULT_M).expect("closed potentials carry a valid domain")
            }
        }
    }

    /// `(p(x), q(x))`; sampled potentials are interpolated by local cubics.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        match self {
            PotentialMatrix::Closed { shape, a, b } => {
                let slack = 1e-12 * (b - a);
                if x < a - slack || x > b + slack {
                    return Err(Error::Domain { x, a: *a, b: *b });
                }
                Ok(shape.eval(x))
            }
            PotentialMatrix::Sampled { grid, p, q } => {
                let (k, s) = grid.locate(x)?;
                Ok((interp_cubic(p, k, s), interp_cubic(q, k, s)))
            }
        }
    }

    pub fn omega(&self, x: f64) -> Result<Mat2> {
        let (p, q) = self.eval(x)?;
        Ok(Mat2::omega(p, q))
    }

    /// Values at the nodes of `grid`.
    pub fn sample(&self, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
        if let PotentialMatrix::Sampled { grid: g, p, q } = self {
            if g.same_as(grid) {
                return Ok((p.clone(), q.clone()));
            }
        }
        let mut ps = Vec::with_capacity(grid.len());
        let mut qs = Vec::with_capacity(grid.len());
        for x in grid.nodes() {
            let (p, q) = self.eval(x)?;
            if !(p.is_finite() && q.is_finite()) {
                return Err(Error::NonFinite(x));
            }
            ps.push(p);
            qs.push(q);
        }
        Ok((ps, qs))
    }

    pub fn to_sampled(&self, grid: &Grid) -> Result<PotentialMatrix> {
        let (p, q) = self.sample(grid)?;
        PotentialMatrix::sampled(*grid, p, q)
    }

    pub fn p_function(&self, grid: &Grid) -> Result<GridFunction> {
        GridFunction::new(*grid, self.sample(grid)?.0)
    }

    pub fn q_function(&self, grid: &Grid) -> Result<GridFunction> {
        GridFunction::new(*grid, self.sample(grid)?.1)
    }

    pub fn check_finite(&self) -> Result<()> {
        if let PotentialMatrix::Sampled { grid, p, q } = self {
            for (i, (a, b)) in p.iter().zip(q).enumerate() {
                if !(a.is_finite() && b.is_finite()) {
                    return Err(Error::NonFinite(grid.node(i)));
                }
            }
        }
        Ok(())
    }

    /// `c(x) = ∫_a^x (|p| + |q|) ds` by the trapezoid rule on the natural grid.
    pub fn cumulative_c(&self, x: f64) -> Result<f64> {
        let grid = self.natural_grid();
        let (k, s) = grid.locate(x)?;
        let (p, q) = self.sample(&grid)?;
        let f: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a.abs() + b.abs()).collect();
        let h = grid.h();
        let mut acc = 0.0;
        for j in 0..k {
            acc += 0.5 * h * (f[j] + f[j + 1]);
        }
        if s > 0.0 {
            let (px, qx) = self.eval(x)?;
            acc += 0.5 * s * h * (f[k] + px.abs() + qx.abs());
        }
        Ok(acc)
    }

    /// Pointwise sum with another potential on `grid`.
    pub fn add_on(&self, other: &PotentialMatrix, grid: &Grid) -> Result<PotentialMatrix> {
        let (p1, q1) = self.sample(grid)?;
        let (p2, q2) = other.sample(grid)?;
        let p = p1.iter().zip(&p2).map(|(a, b)| a + b).collect();
        let q = q1.iter().zip(&q2).map(|(a, b)| a + b).collect();
        PotentialMatrix::sampled(*grid, p, q)
    }
}

/// Reduces `γ` to `α ∈ (−π/2, π/2]` with `γ = α − π·m`.
pub fn reduce_angle(gamma: f64) -> (f64, i64) {
    let m = ((-FRAC_PI_2 - gamma) / PI).floor() as i64 + 1;
    let mut alpha = gamma + PI * m as f64;
    let mut m = m;
    // guard the half-open endpoints against rounding
    if alpha <= -FRAC_PI_2 {
        alpha += PI;
        m += 1;
    } else if alpha > FRAC_PI_2 + 1e-15 {
        alpha -= PI;
        m -= 1;
    }
    (alpha.min(FRAC_PI_2), m)
}

/// Boundary angles stored reduced modulo π, with the reduction counts kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryAngles {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_turns: i64,
    pub beta_turns: i64,
}

impl BoundaryAngles {
    pub fn new(alpha: f64, beta: f64) -> Self {
        let (a, ma) = reduce_angle(alpha);
        let (b, mb) = reduce_angle(beta);
        Self { alpha: a, beta: b, alpha_turns: ma, beta_turns: mb }
    }

    /// Lattice offset `(β − α)/π` of the free spectrum.
    pub fn shift(&self) -> f64 {
        (self.beta - self.alpha) / PI
    }
}

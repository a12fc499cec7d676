//! Two-component trajectories sampled on a grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{cumulative, integrate, interp_cubic, Grid, Rule};

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory2 {
    pub grid: Grid,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
}

impl Trajectory2 {
    pub fn new(grid: Grid, y1: Vec<f64>, y2: Vec<f64>) -> Result<Self> {
        if y1.len() != grid.len() || y2.len() != grid.len() {
            return Err(Error::Shape(format!(
                "trajectory has {} / {} values for {} nodes",
                y1.len(),
                y2.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, y1, y2 })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> [f64; 2]) -> Self {
        let (y1, y2) = grid.nodes().into_iter().map(|x| {
            let v = f(x);
            (v[0], v[1])
        }).unzip();
        Self { grid, y1, y2 }
    }

    pub(crate) fn from_points(grid: Grid, pts: &[[f64; 2]]) -> Self {
        Self {
            grid,
            y1: pts.iter().map(|v| v[0]).collect(),
            y2: pts.iter().map(|v| v[1]).collect(),
        }
    }

    pub fn at(&self, i: usize) -> [f64; 2] {
        [self.y1[i], self.y2[i]]
    }

    pub fn first(&self) -> [f64; 2] {
        self.at(0)
    }

    pub fn last(&self) -> [f64; 2] {
        self.at(self.grid.m())
    }

    pub fn eval(&self, x: f64) -> Result<[f64; 2]> {
        let (k, s) = self.grid.locate(x)?;
        Ok([interp_cubic(&self.y1, k, s), interp_cubic(&self.y2, k, s)])
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            y1: self.y1.iter().map(|v| c * v).collect(),
            y2: self.y2.iter().map(|v| c * v).collect(),
        }
    }

    /// Pointwise `|y|²`.
    pub fn density(&self) -> Vec<f64> {
        self.y1.iter().zip(&self.y2).map(|(a, b)| a * a + b * b).collect()
    }

    pub fn norm_sq(&self) -> f64 {
        integrate(&self.density(), self.grid.h(), Rule::default())
    }

    /// Running `∫_a^x |y|²`.
    pub fn cumulative_norm_sq(&self) -> Vec<f64> {
        cumulative(&self.density(), self.grid.h(), Rule::default())
    }

    pub fn to_complex(&self) -> CTrajectory2 {
        CTrajectory2 {
            grid: self.grid,
            y1: self.y1.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            y2: self.y2.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// `f ± c·g`-style combinations on a shared grid.
    pub fn axpy(&self, c: f64, other: &Trajectory2) -> Result<Trajectory2> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            y1: self.y1.iter().zip(&other.y1).map(|(a, b)| a + c * b).collect(),
            y2: self.y2.iter().zip(&other.y2).map(|(a, b)| a + c * b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Trajectory2) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let mut d = 0.0f64;
        for i in 0..self.grid.len() {
            d = d.max((self.y1[i] - other.y1[i]).abs()).max((self.y2[i] - other.y2[i]).abs());
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CTrajectory2 {
    pub grid: Grid,
    pub y1: Vec<Complex64>,
    pub y2: Vec<Complex64>,
}

impl CTrajectory2 {
    pub(crate) fn from_points(grid: Grid, pts: &[[Complex64; 2]]) -> Self {
        Self {
            grid,
            y1: pts.iter().map(|v| v[0]).collect(),
            y2: pts.iter().map(|v| v[1]).collect(),
        }
    }

    pub fn at(&self, i: usize) -> [Complex64; 2] {
        [self.y1[i], self.y2[i]]
    }

    pub fn first(&self) -> [Complex64; 2] {
        self.at(0)
    }

    pub fn last(&self) -> [Complex64; 2] {
        self.at(self.grid.m())
    }

    pub fn real(&self) -> Trajectory2 {
        Trajectory2 {
            grid: self.grid,
            y1: self.y1.iter().map(|v| v.re).collect(),
            y2: self.y2.iter().map(|v| v.re).collect(),
        }
    }
}

/// `∫ (f₁g₁ + f₂g₂) dx` for real trajectories.
pub fn inner_product(f: &Trajectory2, g: &Trajectory2) -> Result<f64> {
    inner_product_with(f, g, Rule::default())
}

pub fn inner_product_with(f: &Trajectory2, g: &Trajectory2, rule: Rule) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    let v: Vec<f64> = (0..f.grid.len())
        .map(|i| f.y1[i] * g.y1[i] + f.y2[i] * g.y2[i])
        .collect();
    Ok(integrate(&v, f.grid.h(), rule))
}

/// `∫ (f₁ḡ₁ + f₂ḡ₂) dx`.
pub fn inner_product_c(f: &CTrajectory2, g: &CTrajectory2) -> Result<Complex64> {
    f.grid.check_same(&g.grid)?;
    let h = f.grid.h();
    let n = f.grid.len();
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    for i in 0..n {
        let v = f.y1[i] * g.y1[i].conj() + f.y2[i] * g.y2[i].conj();
        re.push(v.re);
        im.push(v.im);
    }
    Ok(Complex64::new(integrate(&re, h, Rule::default()), integrate(&im, h, Rule::default())))
}

//! Initial and terminal value problems for `B y' + Ω(x) y = λ y`.
//!
//! The system is rewritten as `y' = A(x, λ) y` with
//! `A = ((q, −(p + λ)), (λ − p, −q))` and advanced by the fourth-order Magnus
//! integrator with two Gauss points per interval. `A` is trace free, so every step
//! is an exact `SL(2)` matrix and `det Φ ≡ 1` holds to rounding.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{interp_cubic, Grid, DEFAULT_M};
use crate::pauli::Mat2;
use crate::potential::PotentialMatrix;
use crate::traj::{CTrajectory2, Trajectory2};

pub type CMat2 = [[Complex64; 2]; 2];

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub m: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { m: DEFAULT_M }
    }
}

impl SolverConfig {
    pub fn new(m: usize) -> Result<Self> {
        if m < 64 {
            return Err(Error::Input(format!("solver needs m >= 64 intervals, got {m}")));
        }
        Ok(Self { m })
    }

    /// Grid over the potential's domain with `m` intervals.
    pub fn grid_for(&self, pot: &PotentialMatrix) -> Result<Grid> {
        if self.m < 64 {
            return Err(Error::Input(format!("solver needs m >= 64 intervals, got {}", self.m)));
        }
        let (a, b) = pot.domain();
        Grid::new(a, b, self.m)
    }
}

/// Gauss nodes `1/2 ∓ √3/6` of the two-point rule.
const GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];
const SQRT3_12: f64 = 0.144_337_567_297_406_43;

/// Potential values at the Gauss points of every interval, reusable across `λ`.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    gp: Vec<[(f64, f64); 2]>,
}

/// Exponential of a trace-free 2×2 matrix: `cosh(s)·E + sinh(s)/s·M`, `s² = −det M`.
fn coeffs_real(s2: f64) -> (f64, f64) {
    if s2.abs() < 0.1 {
        series(s2)
    } else if s2 > 0.0 {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    } else {
        let r = (-s2).sqrt();
        (r.cos(), r.sin() / r)
    }
}

fn series(s2: f64) -> (f64, f64) {
    let mut c = 1.0;
    let mut s = 1.0;
    let mut tc = 1.0;
    let mut ts = 1.0;
    for k in 1..8 {
        let k2 = 2.0 * k as f64;
        tc *= s2 / ((k2 - 1.0) * k2);
        ts *= s2 / (k2 * (k2 + 1.0));
        c += tc;
        s += ts;
    }
    (c, s)
}

fn coeffs_complex(s2: Complex64) -> (Complex64, Complex64) {
    if s2.norm() < 0.1 {
        let mut c = C_ONE;
        let mut s = C_ONE;
        let mut tc = C_ONE;
        let mut ts = C_ONE;
        for k in 1..8 {
            let k2 = 2.0 * k as f64;
            tc *= s2 / ((k2 - 1.0) * k2);
            ts *= s2 / (k2 * (k2 + 1.0));
            c += tc;
            s += ts;
        }
        (c, s)
    } else {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    }
}

fn cmul(a: &CMat2, b: &CMat2) -> CMat2 {
    let mut c = [[C_ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub(crate) fn capply(m: &CMat2, v: [Complex64; 2]) -> [Complex64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// `y' = A y` coefficient matrix at spectral parameter `λ`.
pub fn coefficient(p: f64, q: f64, lambda: f64) -> Mat2 {
    Mat2([[q, -(p + lambda)], [lambda - p, -q]])
}

fn coefficient_c(p: f64, q: f64, lambda: Complex64) -> CMat2 {
    [
        [Complex64::new(q, 0.0), -(lambda + p)],
        [lambda - p, Complex64::new(-q, 0.0)],
    ]
}

/// Initial vector `(sin α, −cos α)` of the boundary condition at angle `α`.
pub fn boundary_vector(alpha: f64) -> [f64; 2] {
    [alpha.sin(), -alpha.cos()]
}

/// Prüfer angle `θ` with `y = r·(sin θ, −cos θ)`.
pub fn prufer(y: [f64; 2]) -> f64 {
    y[0].atan2(-y[1])
}

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// End state of a shot: the terminal vector and the unwrapped Prüfer angle.
#[derive(Debug, Clone, Copy)]
pub struct Shot {
    pub y: [f64; 2],
    pub theta: f64,
    /// `ln` of the factor removed by renormalization along the way.
    pub log_scale: f64,
}

impl Stepper {
    pub fn new(pot: &PotentialMatrix, grid: Grid) -> Result<Self> {
        let (a, b) = pot.domain();
        let slack = 1e-12 * (b - a);
        if grid.a() < a - slack || grid.b() > b + slack {
            return Err(Error::Domain { x: grid.b().max(grid.a()), a, b });
        }
        let h = grid.h();
        let same = matches!(pot, PotentialMatrix::Sampled { grid: g, .. } if g.same_as(&grid));
        let mut gp = Vec::with_capacity(grid.m());
        for k in 0..grid.m() {
            let mut pair = [(0.0, 0.0); 2];
            for (j, c) in GAUSS.iter().enumerate() {
                let v = match pot {
                    PotentialMatrix::Sampled { p, q, .. } if same => {
                        (interp_cubic(p, k, *c), interp_cubic(q, k, *c))
                    }
                    _ => pot.eval((grid.node(k) + c * h).clamp(a, b))?,
                };
                if !(v.0.is_finite() && v.1.is_finite()) {
                    return Err(Error::NonFinite(grid.node(k) + c * h));
                }
                pair[j] = v;
            }
            gp.push(pair);
        }
        Ok(Self { grid, gp })
    }

    pub fn with_config(pot: &PotentialMatrix, cfg: &SolverConfig) -> Result<Self> {
        Self::new(pot, cfg.grid_for(pot)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Magnus exponent data for interval `k`: `(C, S, Ω₄)` with `exp(±Ω₄) = C·E ± S·Ω₄`.
    fn magnus(&self, k: usize, lambda: f64) -> (f64, f64, Mat2) {
        let h = self.grid.h();
        let [(p1, q1), (p2, q2)] = self.gp[k];
        let a1 = coefficient(p1, q1, lambda);
        let a2 = coefficient(p2, q2, lambda);
        let om = (a1 + a2).scale(0.5 * h) + a2.commutator(&a1).scale(SQRT3_12 * h * h);
        let m = om.0;
        let s2 = m[0][0] * m[0][0] + m[0][1] * m[1][0];
        let (c, s) = coeffs_real(s2);
        (c, s, om)
    }

    fn magnus_c(&self, k: usize, lambda: Complex64) -> (Complex64, Complex64, CMat2) {
        let h = self.grid.h();
        let [(p1, q1), (p2, q2)] = self.gp[k];
        let a1 = coefficient_c(p1, q1, lambda);
        let a2 = coefficient_c(p2, q2, lambda);
        let c21 = cmul(&a2, &a1);
        let c12 = cmul(&a1, &a2);
        let mut om = [[C_ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                om[i][j] = (a1[i][j] + a2[i][j]) * (0.5 * h) + (c21[i][j] - c12[i][j]) * (SQRT3_12 * h * h);
            }
        }
        let s2 = om[0][0] * om[0][0] + om[0][1] * om[1][0];
        let (c, s) = coeffs_complex(s2);
        (c, s, om)
    }

    /// Propagator across interval `k`, forward (`x_k → x_{k+1}`) or backward.
    pub fn step(&self, k: usize, lambda: f64, forward: bool) -> Mat2 {
        let (c, s, om) = self.magnus(k, lambda);
        let s = if forward { s } else { -s };
        Mat2::E.scale(c) + om.scale(s)
    }

    pub fn step_c(&self, k: usize, lambda: Complex64, forward: bool) -> CMat2 {
        let (c, s, om) = self.magnus_c(k, lambda);
        let s = if forward { s } else { -s };
        [
            [c + s * om[0][0], s * om[0][1]],
            [s * om[1][0], c + s * om[1][1]],
        ]
    }

    pub fn forward(&self, lambda: f64, y0: [f64; 2]) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.grid.len());
        let mut y = y0;
        out.push(y);
        for k in 0..self.grid.m() {
            y = self.step(k, lambda, true).apply(y);
            out.push(y);
        }
        out
    }

    pub fn backward(&self, lambda: f64, y_end: [f64; 2]) -> Vec<[f64; 2]> {
        let m = self.grid.m();
        let mut out = vec![[0.0; 2]; m + 1];
        let mut y = y_end;
        out[m] = y;
        for k in (0..m).rev() {
            y = self.step(k, lambda, false).apply(y);
            out[k] = y;
        }
        out
    }

    pub fn forward_c(&self, lambda: Complex64, y0: [Complex64; 2]) -> Vec<[Complex64; 2]> {
        let mut out = Vec::with_capacity(self.grid.len());
        let mut y = y0;
        out.push(y);
        for k in 0..self.grid.m() {
            y = capply(&self.step_c(k, lambda, true), y);
            out.push(y);
        }
        out
    }

    pub fn backward_c(&self, lambda: Complex64, y_end: [Complex64; 2]) -> Vec<[Complex64; 2]> {
        let m = self.grid.m();
        let mut out = vec![[C_ZERO; 2]; m + 1];
        let mut y = y_end;
        out[m] = y;
        for k in (0..m).rev() {
            y = capply(&self.step_c(k, lambda, false), y);
            out[k] = y;
        }
        out
    }

    /// Forward shot from `y0` tracking the continuous Prüfer angle.
    pub fn shoot(&self, lambda: f64, y0: [f64; 2]) -> Shot {
        let mut y = y0;
        let mut raw = prufer(y);
        let mut theta = raw;
        let mut log_scale = 0.0;
        for k in 0..self.grid.m() {
            y = self.step(k, lambda, true).apply(y);
            let r = y[0].hypot(y[1]);
            if !(1e-100..=1e100).contains(&r) {
                log_scale += r.ln();
                y = [y[0] / r, y[1] / r];
            }
            let next = prufer(y);
            theta += wrap(next - raw);
            raw = next;
        }
        Shot { y, theta, log_scale }
    }

    /// Backward shot from `y_end` at the right end down to the left end.
    pub fn shoot_back(&self, lambda: f64, y_end: [f64; 2]) -> Shot {
        let mut y = y_end;
        let mut raw = prufer(y);
        let mut theta = raw;
        let mut log_scale = 0.0;
        for k in (0..self.grid.m()).rev() {
            y = self.step(k, lambda, false).apply(y);
            let r = y[0].hypot(y[1]);
            if !(1e-100..=1e100).contains(&r) {
                log_scale += r.ln();
                y = [y[0] / r, y[1] / r];
            }
            let next = prufer(y);
            theta += wrap(next - raw);
            raw = next;
        }
        Shot { y, theta, log_scale }
    }
}

/// `φ(x, λ, α)` with `φ(a) = (sin α, −cos α)`.
pub fn solve_cauchy(pot: &PotentialMatrix, lambda: f64, alpha: f64, cfg: &SolverConfig) -> Result<Trajectory2> {
    let st = Stepper::with_config(pot, cfg)?;
    Ok(Trajectory2::from_points(*st.grid(), &st.forward(lambda, boundary_vector(alpha))))
}

pub fn solve_cauchy_c(
    pot: &PotentialMatrix,
    lambda: Complex64,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<CTrajectory2> {
    let st = Stepper::with_config(pot, cfg)?;
    let v = boundary_vector(alpha);
    let y0 = [Complex64::new(v[0], 0.0), Complex64::new(v[1], 0.0)];
    Ok(CTrajectory2::from_points(*st.grid(), &st.forward_c(lambda, y0)))
}

/// `ψ(x, λ, β)` with `ψ(b) = (sin β, −cos β)`, integrated backwards.
pub fn solve_terminal(pot: &PotentialMatrix, lambda: f64, beta: f64, cfg: &SolverConfig) -> Result<Trajectory2> {
    let st = Stepper::with_config(pot, cfg)?;
    Ok(Trajectory2::from_points(*st.grid(), &st.backward(lambda, boundary_vector(beta))))
}

pub fn solve_terminal_c(
    pot: &PotentialMatrix,
    lambda: Complex64,
    beta: f64,
    cfg: &SolverConfig,
) -> Result<CTrajectory2> {
    let st = Stepper::with_config(pot, cfg)?;
    let v = boundary_vector(beta);
    let y = [Complex64::new(v[0], 0.0), Complex64::new(v[1], 0.0)];
    Ok(CTrajectory2::from_points(*st.grid(), &st.backward_c(lambda, y)))
}

#[derive(Debug, Clone)]
pub struct FundamentalMatrix {
    pub grid: Grid,
    pub entries: Vec<CMat2>,
}

impl FundamentalMatrix {
    pub fn at(&self, i: usize) -> CMat2 {
        self.entries[i]
    }

    pub fn det(&self, i: usize) -> Complex64 {
        let m = self.entries[i];
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// `max |det Φ(x) − 1|` over the grid.
    pub fn det_defect(&self) -> f64 {
        (0..self.grid.len()).map(|i| (self.det(i) - C_ONE).norm()).fold(0.0, f64::max)
    }
}

pub fn fundamental_matrix(pot: &PotentialMatrix, lambda: Complex64, cfg: &SolverConfig) -> Result<FundamentalMatrix> {
    let st = Stepper::with_config(pot, cfg)?;
    let mut entries = Vec::with_capacity(st.grid().len());
    let mut phi = [[C_ONE, C_ZERO], [C_ZERO, C_ONE]];
    entries.push(phi);
    for k in 0..st.grid().m() {
        phi = cmul(&st.step_c(k, lambda, true), &phi);
        entries.push(phi);
    }
    Ok(FundamentalMatrix { grid: *st.grid(), entries })
}

#[derive(Debug, Clone)]
pub struct Wronskian {
    pub values: Vec<f64>,
    pub mean: f64,
    /// `max |ω(x) − mean|`.
    pub deviation: f64,
}

/// `ω(x) = φ₁u₂ − φ₂u₁` at every node.
pub fn wronskian(phi: &Trajectory2, u: &Trajectory2) -> Result<Wronskian> {
    phi.grid.check_same(&u.grid)?;
    let values: Vec<f64> = (0..phi.grid.len())
        .map(|i| phi.y1[i] * u.y2[i] - phi.y2[i] * u.y1[i])
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let deviation = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    Ok(Wronskian { values, mean, deviation })
}

#[derive(Debug, Clone)]
pub struct CWronskian {
    pub values: Vec<Complex64>,
    pub mean: Complex64,
    pub deviation: f64,
}

pub fn wronskian_c(phi: &CTrajectory2, u: &CTrajectory2) -> Result<CWronskian> {
    phi.grid.check_same(&u.grid)?;
    let values: Vec<Complex64> = (0..phi.grid.len())
        .map(|i| phi.y1[i] * u.y2[i] - phi.y2[i] * u.y1[i])
        .collect();
    let mean = values.iter().sum::<Complex64>() / values.len() as f64;
    let deviation = values.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max);
    Ok(CWronskian { values, mean, deviation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_coefficients_are_continuous_across_branches() {
        for s2 in [-0.1 - 1e-12, -0.1 + 1e-12, 0.1 - 1e-12, 0.1 + 1e-12] {
            let (c, s) = coeffs_real(s2);
            let (cs, ss) = if s2 > 0.0 {
                (s2.sqrt().cosh(), s2.sqrt().sinh() / s2.sqrt())
            } else {
                ((-s2).sqrt().cos(), (-s2).sqrt().sin() / (-s2).sqrt())
            };
            assert!((c - cs).abs() < 1e-15 && (s - ss).abs() < 1e-15);
        }
    }

    #[test]
    fn step_is_unimodular_and_invertible() {
        let pot = PotentialMatrix::custom("t", 0.0, PI, |x| (x.cos(), 2.0 * x));
        let st = Stepper::new(&pot, Grid::unit(100).unwrap()).unwrap();
        for k in [0, 37, 99] {
            let f = st.step(k, 3.7, true);
            let b = st.step(k, 3.7, false);
            assert!((f.det() - 1.0).abs() < 1e-14);
            assert!((f * b - Mat2::E).max_abs() < 1e-14);
        }
    }

    #[test]
    fn prufer_angle_of_free_solution_is_linear() {
        let st = Stepper::new(&PotentialMatrix::zero(), Grid::unit(512).unwrap()).unwrap();
        for (lambda, alpha) in [(0.0, 0.0), (7.25, 0.3), (-3.5, -1.2)] {
            let shot = st.shoot(lambda, boundary_vector(alpha));
            assert!((shot.theta - (lambda * PI + alpha)).abs() < 1e-11);
        }
    }

    #[test]
    fn small_m_rejected() {
        assert!(SolverConfig::new(10).is_err());
        assert!(solve_cauchy(&PotentialMatrix::zero(), 1.0, 0.0, &SolverConfig { m: 8 }).is_err());
    }
}

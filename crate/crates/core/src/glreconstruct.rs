//! Gelfand–Levitan reconstruction of `Ω` from truncated spectral data.
//!
//! The truncated kernel `F(x,t) = Σ wⱼ φ₀(x,λⱼ)φ₀ᵀ(t,λⱼ)` has finite rank, so the
//! equation `K + F + ∫₀ˣ K(x,s)F(s,t)ds = 0` is solved exactly by
//! `K(x,t) = Γ(x)U(t)ᵀ` with `U = [φ₀(·,λⱼ)]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::degenerate::{solve_node, Method};
use crate::eigen::SpectralData;
use crate::error::{Error, Result};
use crate::grid::{integrate, Grid, Rule};
use crate::pauli::Mat2;
use crate::potential::PotentialMatrix;
use crate::traj::Trajectory2;

pub fn phi0(x: f64, lambda: f64, alpha: f64) -> [f64; 2] {
    let th = lambda * x + alpha;
    [th.sin(), -th.cos()]
}

/// `∫₀ˣ cos(d s) ds`.
pub fn cos_integral(d: f64, x: f64) -> f64 {
    if d == 0.0 {
        x
    } else {
        (d * x).sin() / d
    }
}

/// Target data against the free model `λₙ⁰ = n + (β − α)/π`, `aₙ⁰ = π`.
#[derive(Debug, Clone)]
pub struct GLSeriesKernel {
    pub target: SpectralData,
    pub reference: SpectralData,
    pub trunc: i64,
}

impl GLSeriesKernel {
    pub fn new(target: SpectralData, trunc: i64) -> Result<Self> {
        if trunc < 0 {
            return Err(Error::Input(format!("truncation must be non-negative, got {trunc}")));
        }
        if !target.covers(-trunc, trunc) {
            return Err(Error::Input(format!("spectral data must cover -{trunc}..={trunc}")));
        }
        target.validate()?;
        for n in -trunc..=trunc {
            let a = target.a(n)?;
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Input(format!("a_{n} = {a} must be positive")));
            }
            if !target.lambda(n)?.is_finite() {
                return Err(Error::Input(format!("lambda_{n} is not finite")));
            }
        }
        let mut reference = SpectralData::lattice(target.alpha, target.beta, -trunc, trunc);
        for d in reference.items.values_mut() {
            d.a = Some(PI);
        }
        Ok(Self { target, reference, trunc })
    }

    pub fn alpha(&self) -> f64 {
        self.target.alpha
    }

    /// Frequencies with weights `1/aₙ` and `−1/π`; equal frequencies merged, zero weights dropped.
    pub fn columns(&self) -> Vec<(f64, f64)> {
        let mut cols: Vec<(f64, f64)> = Vec::new();
        for n in order(self.trunc) {
            for (l, w) in [
                (self.target.lambda(n).expect("validated"), 1.0 / self.target.a(n).expect("validated")),
                (self.reference.lambda(n).expect("lattice"), -1.0 / PI),
            ] {
                match cols.iter_mut().find(|c| (c.0 - l).abs() <= 1e-14 * l.abs().max(1.0)) {
                    Some(c) => c.1 += w,
                    None => cols.push((l, w)),
                }
            }
        }
        cols.retain(|c| c.1.abs() > 1e-15);
        cols
    }

    /// `F(x,t)`, summed in ascending `|n|` with target and model terms paired.
    pub fn build_f(&self, x: f64, t: f64) -> Mat2 {
        let al = self.alpha();
        let mut f = Mat2::ZERO;
        for n in order(self.trunc) {
            let (l, a) = (self.target.lambda(n).expect("validated"), self.target.a(n).expect("validated"));
            let l0 = self.reference.lambda(n).expect("lattice");
            let term = Mat2::outer(phi0(x, l, al), phi0(t, l, al)).scale(1.0 / a)
                - Mat2::outer(phi0(x, l0, al), phi0(t, l0, al)).scale(1.0 / PI);
            f = f + term;
        }
        f
    }
}

/// `0, 1, −1, 2, −2, …, N, −N`.
fn order(n: i64) -> impl Iterator<Item = i64> {
    std::iter::once(0).chain((1..=n).flat_map(|k| [k, -k]))
}

/// `K(x,t) = Γ(x)U(t)ᵀ` on a grid; `gamma[i][j]` is column `j` of `Γ(xᵢ)`.
#[derive(Debug, Clone)]
pub struct GLKernel {
    pub grid: Grid,
    pub alpha: f64,
    pub columns: Vec<(f64, f64)>,
    pub gamma: Vec<Vec<[f64; 2]>>,
    /// `det(I + C J(x))` per node.
    pub det: Vec<f64>,
}

impl GLKernel {
    /// `K(xᵢ, t)` for `t ≤ xᵢ`.
    pub fn k(&self, i: usize, t: f64) -> Result<Mat2> {
        let x = self.grid.node(i);
        if t < self.grid.a() - 1e-12 || t > x + 1e-12 {
            return Err(Error::Domain { x: t, a: self.grid.a(), b: x });
        }
        Ok(self.k_unchecked(i, t))
    }

    fn k_unchecked(&self, i: usize, t: f64) -> Mat2 {
        let mut k = Mat2::ZERO;
        for (g, &(l, _)) in self.gamma[i].iter().zip(&self.columns) {
            k = k + Mat2::outer(*g, phi0(t, l, self.alpha));
        }
        k
    }

    pub fn diagonal(&self, i: usize) -> Mat2 {
        self.k_unchecked(i, self.grid.node(i))
    }

    /// `φ(xᵢ, λ) = φ₀(xᵢ, λ) + ∫₀^{xᵢ} K(xᵢ,t)φ₀(t,λ)dt`.
    pub fn solution(&self, lambda: f64) -> Trajectory2 {
        Trajectory2::from_fn(self.grid, |x| {
            let i = self.grid.nearest(x).expect("node of the grid");
            let mut v = phi0(x, lambda, self.alpha);
            for (g, &(l, _)) in self.gamma[i].iter().zip(&self.columns) {
                let c = cos_integral(l - lambda, x);
                v[0] += g[0] * c;
                v[1] += g[1] * c;
            }
            v
        })
    }

    /// 2-norm condition number of `I + C J(x)` at node `i`.
    pub fn condition(&self, i: usize) -> f64 {
        let sv = system(&self.columns, self.grid.node(i)).singular_values();
        sv.max() / sv.min()
    }
}

fn system(cols: &[(f64, f64)], x: f64) -> DMatrix<f64> {
    let r = cols.len();
    DMatrix::from_fn(r, r, |i, j| if i == j { 1.0 } else { 0.0 } + cols[i].1 * cos_integral(cols[i].0 - cols[j].0, x))
}

/// Anti-aliasing bound `N ≤ m/8`.
pub fn check_resolution(trunc: i64, grid: &Grid) -> Result<()> {
    if trunc as usize * 8 > grid.m() {
        return Err(Error::Input(format!("truncation {trunc} exceeds m/8 = {} for this grid", grid.m() / 8)));
    }
    Ok(())
}

pub fn solve_gl(series: &GLSeriesKernel, grid: &Grid) -> Result<GLKernel> {
    check_resolution(series.trunc, grid)?;
    let alpha = series.alpha();
    let columns = series.columns();
    let w: Vec<f64> = columns.iter().map(|c| c.1).collect();
    let r = columns.len();
    let solved: Result<Vec<(Vec<[f64; 2]>, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.node(i);
            let ints = DMatrix::from_fn(r, r, |a, b| cos_integral(columns[a].0 - columns[b].0, x));
            let f: Vec<[f64; 2]> = columns.iter().map(|c| phi0(x, c.0, alpha)).collect();
            let s = solve_node(&w, &ints, &f, Method::Auto, x)?;
            Ok((s.g, s.det))
        })
        .collect();
    let (gamma, det) = solved?.into_iter().unzip();
    Ok(GLKernel { grid: *grid, alpha, columns, gamma, det })
}

/// `Ω(x) = K(x,x)B − BK(x,x)`.
pub fn recover_potential(k: &GLKernel) -> Result<PotentialMatrix> {
    let (p, q): (Vec<f64>, Vec<f64>) = (0..k.grid.len()).map(|i| k.diagonal(i).kb_minus_bk().pq()).unzip();
    PotentialMatrix::sampled(k.grid, p, q)
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub potential: PotentialMatrix,
    pub eigenfunctions: BTreeMap<i64, Trajectory2>,
    pub kernel: GLKernel,
    /// `max |(φₙ, φₘ) − aₙδₙₘ| / max aₙ`.
    pub orthogonality_defect: f64,
    /// `max |φ₁(π)cos β + φ₂(π)sin β|`.
    pub boundary_defect: f64,
}

pub fn reconstruct(data: &SpectralData, grid: &Grid, trunc: i64, tol: f64) -> Result<Reconstruction> {
    let series = GLSeriesKernel::new(data.clone(), trunc)?;
    let kernel = solve_gl(&series, grid)?;
    let potential = recover_potential(&kernel)?;
    let eigenfunctions: BTreeMap<i64, Trajectory2> = (-trunc..=trunc)
        .into_par_iter()
        .map(|n| (n, kernel.solution(data.lambda(n).expect("validated"))))
        .collect();
    let beta = data.beta;
    let mut boundary_defect: f64 = 0.0;
    for phi in eigenfunctions.values() {
        let e = phi.last();
        boundary_defect = boundary_defect.max((e[0] * beta.cos() + e[1] * beta.sin()).abs());
    }
    let amax = (-trunc..=trunc).map(|n| data.a(n).expect("validated")).fold(0.0, f64::max);
    let idx: Vec<i64> = (-trunc..=trunc).collect();
    let gram: Vec<(i64, i64, f64)> = idx
        .par_iter()
        .flat_map_iter(|&n| {
            let idx = &idx;
            let ef = &eigenfunctions;
            idx.iter().filter(move |&&m| m >= n).map(move |&m| {
                let (u, v) = (&ef[&n], &ef[&m]);
                let f: Vec<f64> = (0..u.grid.len()).map(|i| u.y1[i] * v.y1[i] + u.y2[i] * v.y2[i]).collect();
                let want = if n == m { data.a(n).expect("validated") } else { 0.0 };
                (n, m, (integrate(&f, u.grid.h(), Rule::Cubic) - want).abs() / amax)
            })
        })
        .collect();
    let mut orthogonality_defect: f64 = 0.0;
    for &(n, m, d) in &gram {
        if d > tol {
            return Err(Error::Inconsistent(n, m));
        }
        orthogonality_defect = orthogonality_defect.max(d);
    }
    Ok(Reconstruction { potential, eigenfunctions, kernel, orthogonality_defect, boundary_defect })
}

/// `sup |Ω₁ − Ω₂|` over the nodes of `grid` inside `[lo, hi]`.
pub fn sup_distance(a: &PotentialMatrix, b: &PotentialMatrix, grid: &Grid, lo: f64, hi: f64) -> Result<f64> {
    let (p1, q1) = a.sample(grid)?;
    let (p2, q2) = b.sample(grid)?;
    Ok(grid
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, x)| **x >= lo && **x <= hi)
        .map(|(i, _)| (p1[i] - p2[i]).abs().max((q1[i] - q2[i]).abs()))
        .fold(0.0, f64::max))
}

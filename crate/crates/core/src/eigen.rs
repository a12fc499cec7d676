//! The regular problem `L(Ω, α, β)` on a finite interval.
//!
//! Eigenvalues are located through the continuous Prüfer angle
//! `θ(x, λ)`, `φ = r·(sin θ, −cos θ)`, which is strictly increasing in `λ`.
//! `λ` is an eigenvalue iff `θ(b, λ) = β + kπ` for some integer `k`, so the
//! index is exact and does not depend on bracket guesses. The integer offset
//! between `k` and the conventional index `n` is fixed by numbering the
//! least non-positive eigenvalue of `L(Ω, π/2, β)` as `λ₀(π/2)`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cauchy::{boundary_vector, SolverConfig, Stepper};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::potential::{reduce_angle, BoundaryAngles, PotentialMatrix};
use crate::roots::brent;
use crate::traj::{inner_product, Trajectory2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralDatum {
    pub n: i64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl SpectralDatum {
    pub fn new(n: i64, lambda: f64) -> Self {
        Self { n, lambda, a: None, b: None, c: None }
    }

    pub fn with_a(n: i64, lambda: f64, a: f64) -> Self {
        Self { n, lambda, a: Some(a), b: None, c: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub alpha: f64,
    pub beta: f64,
    pub items: BTreeMap<i64, SpectralDatum>,
}

impl SpectralData {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, items: BTreeMap::new() }
    }

    pub fn from_items(alpha: f64, beta: f64, items: impl IntoIterator<Item = SpectralDatum>) -> Self {
        let mut s = Self::new(alpha, beta);
        for d in items {
            s.items.insert(d.n, d);
        }
        s
    }

    /// `λₙ = n + (β − α)/π`, `aₙ = π`: the spectral data of `Ω ≡ 0` on `[0, π]`.
    pub fn lattice(alpha: f64, beta: f64, n_min: i64, n_max: i64) -> Self {
        let d = (beta - alpha) / PI;
        Self::from_items(alpha, beta, (n_min..=n_max).map(|n| SpectralDatum::with_a(n, n as f64 + d, PI)))
    }

    pub fn angles(&self) -> BoundaryAngles {
        BoundaryAngles::new(self.alpha, self.beta)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, n: i64) -> Option<&SpectralDatum> {
        self.items.get(&n)
    }

    pub fn lambda(&self, n: i64) -> Result<f64> {
        self.items
            .get(&n)
            .map(|d| d.lambda)
            .ok_or_else(|| Error::Input(format!("index {n} missing from spectral data")))
    }

    pub fn a(&self, n: i64) -> Result<f64> {
        self.items
            .get(&n)
            .and_then(|d| d.a)
            .ok_or_else(|| Error::Input(format!("norming constant for index {n} missing")))
    }

    /// Smallest and largest index present.
    pub fn window(&self) -> Option<(i64, i64)> {
        Some((*self.items.keys().next()?, *self.items.keys().next_back()?))
    }

    pub fn covers(&self, n_min: i64, n_max: i64) -> bool {
        (n_min..=n_max).all(|n| self.items.contains_key(&n))
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.items.values().map(|d| d.lambda).collect()
    }

    /// Checks ordering, positivity and the `c²a = b` relation.
    pub fn validate(&self) -> Result<()> {
        let mut prev: Option<&SpectralDatum> = None;
        for d in self.items.values() {
            if !d.lambda.is_finite() {
                return Err(Error::Input(format!("lambda for n = {} is not finite", d.n)));
            }
            if let Some(p) = prev {
                if d.lambda <= p.lambda {
                    return Err(Error::Input(format!(
                        "eigenvalues not strictly increasing at n = {}",
                        d.n
                    )));
                }
            }
            for (name, v) in [("a", d.a), ("b", d.b)] {
                if let Some(v) = v {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(Error::Input(format!("{name} for n = {} must be positive", d.n)));
                    }
                }
            }
            if let (Some(a), Some(b), Some(c)) = (d.a, d.b, d.c) {
                if (c * c * a - b).abs() > 1e-6 * b {
                    return Err(Error::Input(format!("c^2 a != b for n = {}", d.n)));
                }
            }
            prev = Some(d);
        }
        Ok(())
    }
}

/// A potential with boundary angles, prepared for repeated shooting.
#[derive(Debug, Clone)]
pub struct Problem {
    stepper: Stepper,
    pub alpha: f64,
    pub beta: f64,
    /// `k − n` for the Prüfer branch `θ(b) = β + kπ` of eigenvalue `n`.
    pub offset: i64,
    length: f64,
}

impl Problem {
    pub fn new(pot: &PotentialMatrix, alpha: f64, beta: f64, cfg: &SolverConfig) -> Result<Self> {
        let stepper = Stepper::with_config(pot, cfg)?;
        Self::from_stepper(stepper, alpha, beta)
    }

    pub fn from_stepper(stepper: Stepper, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Input("boundary angles must be finite".into()));
        }
        let (alpha, _) = reduce_angle(alpha);
        let (beta, _) = reduce_angle(beta);
        let length = stepper.grid().b() - stepper.grid().a();
        let theta = stepper.shoot(0.0, boundary_vector(FRAC_PI_2)).theta;
        let offset = ((theta - beta) / PI + 1e-9).floor() as i64;
        Ok(Self { stepper, alpha, beta, offset, length })
    }

    pub fn stepper(&self) -> &Stepper {
        &self.stepper
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::from_stepper(self.stepper.clone(), alpha, self.beta)
    }

    /// `θ(b, λ) − β − (n + offset)π`; increasing in `λ`, zero exactly at `λₙ`.
    pub fn angle_defect(&self, lambda: f64, n: i64) -> f64 {
        let theta = self.stepper.shoot(lambda, boundary_vector(self.alpha)).theta;
        theta - self.beta - (n + self.offset) as f64 * PI
    }

    /// Continuous eigenvalue count: `(θ(b, λ) − β)/π − offset`.
    pub fn counting(&self, lambda: f64) -> f64 {
        let theta = self.stepper.shoot(lambda, boundary_vector(self.alpha)).theta;
        (theta - self.beta) / PI - self.offset as f64
    }

    /// `χ(λ) = φ₁(b)cos β + φ₂(b)sin β`.
    pub fn char_real(&self, lambda: f64) -> f64 {
        let y = self.stepper.forward(lambda, boundary_vector(self.alpha));
        let e = y[y.len() - 1];
        e[0] * self.beta.cos() + e[1] * self.beta.sin()
    }

    pub fn char_complex(&self, lambda: Complex64) -> Complex64 {
        let v = boundary_vector(self.alpha);
        let y = self
            .stepper
            .forward_c(lambda, [Complex64::new(v[0], 0.0), Complex64::new(v[1], 0.0)]);
        let e = y[y.len() - 1];
        e[0] * self.beta.cos() + e[1] * self.beta.sin()
    }

    /// Lattice point `(nπ + β − α)/L` of the free problem.
    pub fn lattice_guess(&self, n: i64) -> f64 {
        (n as f64 * PI + self.beta - self.alpha) / self.length
    }

    pub fn eigenvalue(&self, n: i64, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::Input(format!("tolerance must be positive, got {tol}")));
        }
        let g = self.lattice_guess(n);
        let f = |l: f64| self.angle_defect(l, n);
        let (mut lo, mut hi) = (g - 0.45, g + 0.45);
        let (mut flo, mut fhi) = (f(lo), f(hi));
        let mut width = 0.5;
        let mut tries = 0;
        while flo > 0.0 || fhi < 0.0 {
            tries += 1;
            if tries > 60 {
                return Err(Error::Bracket(n));
            }
            if flo > 0.0 {
                hi = lo;
                fhi = flo;
                lo -= width;
                flo = f(lo);
            } else {
                lo = hi;
                flo = fhi;
                hi += width;
                fhi = f(hi);
            }
            width *= 2.0;
        }
        brent(f, lo, hi, tol, 200)
    }

    pub fn eigenvalues(&self, n_min: i64, n_max: i64, tol: f64) -> Result<SpectralData> {
        if n_min > n_max {
            return Err(Error::Input(format!("empty index window [{n_min}, {n_max}]")));
        }
        let found: Result<Vec<SpectralDatum>> = (n_min..=n_max)
            .into_par_iter()
            .map(|n| Ok(SpectralDatum::new(n, self.eigenvalue(n, tol)?)))
            .collect();
        Ok(SpectralData::from_items(self.alpha, self.beta, found?))
    }

    /// `φ(x, λ, α)`.
    pub fn phi(&self, lambda: f64) -> Trajectory2 {
        let pts = self.stepper.forward(lambda, boundary_vector(self.alpha));
        Trajectory2 {
            grid: *self.stepper.grid(),
            y1: pts.iter().map(|v| v[0]).collect(),
            y2: pts.iter().map(|v| v[1]).collect(),
        }
    }

    /// `ψ(x, λ, β)`, terminal data at the right end.
    pub fn psi(&self, lambda: f64) -> Trajectory2 {
        let pts = self.stepper.backward(lambda, boundary_vector(self.beta));
        Trajectory2 {
            grid: *self.stepper.grid(),
            y1: pts.iter().map(|v| v[0]).collect(),
            y2: pts.iter().map(|v| v[1]).collect(),
        }
    }

    pub fn norming_constant(&self, lambda: f64) -> Result<f64> {
        let a = self.phi(lambda).norm_sq();
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Integration(format!("norming constant {a} at lambda = {lambda}")));
        }
        Ok(a)
    }

    /// Eigenvalues with norming constants over `[n_min, n_max]`.
    pub fn spectral_data(&self, n_min: i64, n_max: i64, tol: f64) -> Result<SpectralData> {
        let mut s = self.eigenvalues(n_min, n_max, tol)?;
        self.fill_norming(&mut s)?;
        Ok(s)
    }

    pub fn fill_norming(&self, s: &mut SpectralData) -> Result<()> {
        let vals: Result<Vec<(i64, f64)>> = s
            .items
            .par_iter()
            .map(|(&n, d)| Ok((n, self.norming_constant(d.lambda)?)))
            .collect();
        for (n, a) in vals? {
            s.items.get_mut(&n).expect("index present").a = Some(a);
        }
        Ok(())
    }

    /// `hₙ = φₙ/√aₙ`.
    pub fn normalized(&self, lambda: f64, a: f64) -> Result<Trajectory2> {
        if !(a > 0.0) {
            return Err(Error::Input(format!("norming constant must be positive, got {a}")));
        }
        Ok(self.phi(lambda).scale(1.0 / a.sqrt()))
    }
}

pub fn char_function(pot: &PotentialMatrix, alpha: f64, beta: f64, lambda: Complex64, cfg: &SolverConfig) -> Result<Complex64> {
    Ok(Problem::new(pot, alpha, beta, cfg)?.char_complex(lambda))
}

pub fn find_eigenvalues(
    pot: &PotentialMatrix,
    alpha: f64,
    beta: f64,
    n_min: i64,
    n_max: i64,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<SpectralData> {
    Problem::new(pot, alpha, beta, cfg)?.eigenvalues(n_min, n_max, tol)
}

/// Attaches `aₙ = ∫|φ(x, λₙ, α)|²` to every item of `spec`.
pub fn norming_constants(pot: &PotentialMatrix, spec: &SpectralData, cfg: &SolverConfig) -> Result<SpectralData> {
    let prob = Problem::new(pot, spec.alpha, spec.beta, cfg)?;
    let mut out = spec.clone();
    prob.fill_norming(&mut out)?;
    Ok(out)
}

pub fn normalized_eigenfunction(
    pot: &PotentialMatrix,
    alpha: f64,
    lambda: f64,
    a: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory2> {
    Problem::new(pot, alpha, 0.0, cfg)?.normalized(lambda, a)
}

/// Fills `bₙ = ‖uₙ‖²` and `cₙ` with `uₙ = cₙφₙ`, `uₙ(b) = (sin β, −cos β)`.
pub fn similarity_coefficients(pot: &PotentialMatrix, spec: &SpectralData, cfg: &SolverConfig) -> Result<SpectralData> {
    let prob = Problem::new(pot, spec.alpha, spec.beta, cfg)?;
    let mut out = spec.clone();
    for d in out.items.values_mut() {
        let phi = prob.phi(d.lambda);
        let u = prob.psi(d.lambda);
        let (mut best, mut idx, mut comp) = (0.0, 0, 0);
        for i in 0..phi.grid.len() {
            for (c, v) in [phi.y1[i], phi.y2[i]].into_iter().enumerate() {
                if v.abs() > best {
                    best = v.abs();
                    idx = i;
                    comp = c;
                }
            }
        }
        if best < 1e-12 {
            return Err(Error::Degenerate(d.n));
        }
        let c = if comp == 0 { u.y1[idx] / phi.y1[idx] } else { u.y2[idx] / phi.y2[idx] };
        let a = match d.a {
            Some(a) => a,
            None => phi.norm_sq(),
        };
        d.a = Some(a);
        d.b = Some(u.norm_sq());
        d.c = Some(c);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EigenGradient {
    pub n: i64,
    pub lambda: f64,
    pub d_alpha: f64,
    pub d_beta: f64,
    pub d_p: GridFunction,
    pub d_q: GridFunction,
}

impl EigenGradient {
    /// First-order change of `λ` under `(δp, δq)` sampled on the gradient grid.
    pub fn pair(&self, dp: &[f64], dq: &[f64]) -> f64 {
        let g = &self.d_p.grid;
        let v: Vec<f64> = (0..g.len())
            .map(|i| self.d_p.values[i] * dp[i] + self.d_q.values[i] * dq[i])
            .collect();
        crate::grid::integrate(&v, g.h(), Default::default())
    }
}

pub fn eigen_gradient(pot: &PotentialMatrix, alpha: f64, beta: f64, n: i64, cfg: &SolverConfig) -> Result<EigenGradient> {
    let prob = Problem::new(pot, alpha, beta, cfg)?;
    let lambda = prob.eigenvalue(n, 1e-13)?;
    let a = prob.norming_constant(lambda)?;
    let h = prob.normalized(lambda, a)?;
    let first = h.first();
    let last = h.last();
    let d_p = (0..h.grid.len()).map(|i| h.y1[i] * h.y1[i] - h.y2[i] * h.y2[i]).collect();
    let d_q = (0..h.grid.len()).map(|i| 2.0 * h.y1[i] * h.y2[i]).collect();
    Ok(EigenGradient {
        n,
        lambda,
        d_alpha: -(first[0] * first[0] + first[1] * first[1]),
        d_beta: last[0] * last[0] + last[1] * last[1],
        d_p: GridFunction::new(h.grid, d_p)?,
        d_q: GridFunction::new(h.grid, d_q)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvfSample {
    pub gamma: f64,
    pub alpha: f64,
    pub m: i64,
    pub value: f64,
}

/// `λ(γ) = λ_m(α)` with `γ = α − πm`, `α ∈ (−π/2, π/2]`, `β` fixed.
pub fn evf(pot: &PotentialMatrix, beta: f64, gamma: f64, tol: f64, cfg: &SolverConfig) -> Result<EvfSample> {
    let (alpha, m) = reduce_angle(gamma);
    let value = Problem::new(pot, alpha, beta, cfg)?.eigenvalue(m, tol)?;
    Ok(EvfSample { gamma, alpha, m, value })
}

/// Basis `hₙ`, `n_min ≤ n ≤ n_max`, of normalized eigenfunctions.
pub fn eigenbasis(prob: &Problem, n_min: i64, n_max: i64, tol: f64) -> Result<Vec<(i64, Trajectory2)>> {
    let spec = prob.spectral_data(n_min, n_max, tol)?;
    spec.items
        .values()
        .map(|d| Ok((d.n, prob.normalized(d.lambda, d.a.expect("filled"))?)))
        .collect()
}

/// Fourier coefficients `(f, hₙ)`.
pub fn expand(f: &Trajectory2, basis: &[(i64, Trajectory2)]) -> Result<Vec<(i64, f64)>> {
    basis.iter().map(|(n, h)| Ok((*n, inner_product(f, h)?))).collect()
}

/// `|‖f‖² − Σ_{|n| ≤ N} cₙ²|` from precomputed coefficients.
pub fn parseval_defect(f: &Trajectory2, coeffs: &[(i64, f64)], n: i64) -> f64 {
    let s: f64 = coeffs.iter().filter(|(k, _)| k.abs() <= n).map(|(_, c)| c * c).sum();
    (f.norm_sq() - s).abs()
}

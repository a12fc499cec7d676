//! The linear-potential model `Ω₀ = ((0, x), (x, 0))` on the whole and half axis,
//! finite changes of its spectral data, and half-axis spectral tools.
//!
//! Eigenvalues on `[0, ∞)` are indexed so that `λ₀(α) ≤ 0 < λ₁(α)`.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cauchy::{boundary_vector, capply, Stepper};
use crate::eigen::{SpectralData, SpectralDatum};
use crate::error::{Error, Result};
use crate::grid::{cumulative_tail, integrate, Grid, Rule};
use crate::pauli::Mat2;
use crate::potential::PotentialMatrix;
use crate::roots::brent;
use crate::traj::Trajectory2;

/// Default number of intervals for half-axis shooting.
pub const HALF_M: usize = 4096;
/// Extra length appended when tail integrals of exact eigenfunctions are needed.
const TAIL_PAD: f64 = 8.0;

/// Orthonormal Hermite functions `φ₀(x), …, φ_{n_max}(x)`.
///
/// Runs the normalized recurrence on a rescaled value so that large `n` and `x`
/// neither overflow nor lose the Gaussian factor.
pub fn hermite_all(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut log = -0.5 * x * x - 0.25 * PI.ln();
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut raw = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        raw.push((cur, log));
        let nf = n as f64;
        let next = x * (2.0 / (nf + 1.0)).sqrt() * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        let s = cur.abs().max(prev.abs());
        if s > 1e100 {
            cur /= s;
            prev /= s;
            log += s.ln();
        }
    }
    for (v, l) in raw {
        out.push(if v == 0.0 { 0.0 } else { v.signum() * (l + v.abs().ln()).exp() });
    }
    out
}

pub fn hermite_phi(n: usize, x: f64) -> f64 {
    hermite_all(n, x)[n]
}

#[derive(Debug, Clone)]
pub struct HermiteBasis {
    pub n_max: usize,
    pub grid: Grid,
    /// `values[n][i] = φₙ(xᵢ)`.
    pub values: Vec<Vec<f64>>,
}

impl HermiteBasis {
    pub fn new(n_max: usize, grid: Grid) -> Self {
        let cols: Vec<Vec<f64>> = grid.nodes().par_iter().map(|&x| hermite_all(n_max, x)).collect();
        let values = (0..=n_max).map(|n| cols.iter().map(|c| c[n]).collect()).collect();
        Self { n_max, grid, values }
    }

    pub fn gram(&self) -> DMatrix<f64> {
        let k = self.n_max + 1;
        DMatrix::from_fn(k, k, |i, j| {
            let f: Vec<f64> = self.values[i].iter().zip(&self.values[j]).map(|(a, b)| a * b).collect();
            integrate(&f, self.grid.h(), Rule::Cubic)
        })
    }

    /// `max |φₙ₊₁ − x√(2/(n+1))φₙ + √(n/(n+1))φₙ₋₁|`.
    pub fn recurrence_residual(&self) -> f64 {
        let x = self.grid.nodes();
        let mut r: f64 = 0.0;
        for n in 0..self.n_max {
            let nf = n as f64;
            for (i, &xi) in x.iter().enumerate() {
                let pm = if n == 0 { 0.0 } else { self.values[n - 1][i] };
                let v = self.values[n + 1][i] - xi * (2.0 / (nf + 1.0)).sqrt() * self.values[n][i]
                    + (nf / (nf + 1.0)).sqrt() * pm;
                r = r.max(v.abs());
            }
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Whole,
    HalfBc0,
    HalfBcPi2,
}

impl Flavor {
    pub fn alpha(self) -> f64 {
        match self {
            Flavor::HalfBcPi2 => FRAC_PI_2,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelItem {
    pub lambda: f64,
    pub a: f64,
    /// Index `j` of the whole-axis eigenfunction `Uⱼ` behind this item.
    pub whole: i64,
}

/// Exact spectral data of `Ω₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpectrum {
    pub flavor: Flavor,
    /// Our index minus the index of the Hermite enumeration (`1` for `HalfBcPi2`).
    pub index_shift: i64,
    pub items: BTreeMap<i64, ModelItem>,
}

fn whole_lambda(j: i64) -> f64 {
    (j.signum() as f64) * (2.0 * j.unsigned_abs() as f64).sqrt()
}

fn sign1(j: i64) -> f64 {
    if j < 0 {
        -1.0
    } else {
        1.0
    }
}

impl ModelSpectrum {
    pub fn new(flavor: Flavor, n_min: i64, n_max: i64) -> Result<Self> {
        if n_min > n_max {
            return Err(Error::Input(format!("empty index window [{n_min}, {n_max}]")));
        }
        let index_shift = if flavor == Flavor::HalfBcPi2 { 1 } else { 0 };
        let mut items = BTreeMap::new();
        for n in n_min..=n_max {
            let whole = match flavor {
                Flavor::Whole => n,
                Flavor::HalfBc0 => 2 * n,
                Flavor::HalfBcPi2 => 2 * n - 1,
            };
            let k = whole.unsigned_abs() as usize;
            let a = match flavor {
                Flavor::Whole => {
                    if whole == 0 {
                        1.0
                    } else {
                        2.0
                    }
                }
                Flavor::HalfBc0 if whole == 0 => PI.sqrt() / 2.0,
                Flavor::HalfBc0 => 1.0 / hermite_phi(k, 0.0).powi(2),
                Flavor::HalfBcPi2 => 1.0 / hermite_phi(k - 1, 0.0).powi(2),
            };
            items.insert(n, ModelItem { lambda: whole_lambda(whole), a, whole });
        }
        Ok(Self { flavor, index_shift, items })
    }

    pub fn alpha(&self) -> f64 {
        self.flavor.alpha()
    }

    fn item(&self, n: i64) -> Result<&ModelItem> {
        self.items.get(&n).ok_or_else(|| Error::Input(format!("index {n} outside the model window")))
    }

    pub fn lambda(&self, n: i64) -> Result<f64> {
        Ok(self.item(n)?.lambda)
    }

    pub fn a(&self, n: i64) -> Result<f64> {
        Ok(self.item(n)?.a)
    }

    pub fn window(&self) -> (i64, i64) {
        (*self.items.keys().next().expect("non-empty"), *self.items.keys().next_back().expect("non-empty"))
    }

    /// Whole axis: `Uⱼ`. Half axis: `Uⱼ` scaled to start at `(sin α, −cos α)`.
    pub fn eigenfunction(&self, n: i64, x: f64) -> Result<[f64; 2]> {
        let j = self.item(n)?.whole;
        let k = j.unsigned_abs() as usize;
        let ph = hermite_all(k, x);
        let u = if j == 0 { [0.0, ph[0]] } else { [sign1(j) * ph[k - 1], ph[k]] };
        let s = match self.flavor {
            Flavor::Whole => 1.0,
            Flavor::HalfBc0 => -1.0 / hermite_phi(k, 0.0),
            Flavor::HalfBcPi2 => 1.0 / (sign1(j) * hermite_phi(k - 1, 0.0)),
        };
        Ok([s * u[0], s * u[1]])
    }

    pub fn trajectory(&self, n: i64, grid: &Grid) -> Result<Trajectory2> {
        self.item(n)?;
        Ok(Trajectory2::from_fn(*grid, |x| self.eigenfunction(n, x).expect("checked index")))
    }

    pub fn to_spectral_data(&self) -> SpectralData {
        let al = self.alpha();
        SpectralData::from_items(al, al, self.items.iter().map(|(&n, it)| SpectralDatum::with_a(n, it.lambda, it.a)))
    }
}

/// `Ω₀` restricted to `[0, x_max]`.
pub fn linear_potential(x_max: f64) -> PotentialMatrix {
    PotentialMatrix::custom("linear", 0.0, x_max, |x| (0.0, x))
}

/// Truncation point `max(12, |λ| + 6)`, past the turning point `|q(x)| = |λ|` of `Ω₀`.
pub fn x_max_for(lambda_max: f64) -> f64 {
    (lambda_max.abs() + 6.0).max(12.0)
}

/// Direction of the solution decaying to the right for the system frozen at `(p, q)`.
///
/// Of the two equivalent eigenvector formulas the one whose sign cannot change
/// with `λ` is used, so the Prüfer angle at `x_max` is continuous in `λ`.
fn decaying(p: f64, q: f64, lambda: f64) -> Result<[f64; 2]> {
    let k2 = p * p + q * q - lambda * lambda;
    if !(k2 > 0.0) {
        return Err(Error::Truncation(format!("lambda = {lambda} is not below the potential at the right end")));
    }
    let k = k2.sqrt();
    let v = if q >= 0.0 { [-(p + lambda), -(q + k)] } else { [k - q, p - lambda] };
    let r = v[0].hypot(v[1]);
    Ok([v[0] / r, v[1] / r])
}

/// Shooting on `[0, x_max]` with the decaying condition at `x_max`.
#[derive(Debug, Clone)]
pub struct HalfAxisProblem {
    stepper: Stepper,
    end: (f64, f64),
    /// `floor((Θ(0) + π/2)/π)`; fixes `λ₀(π/2) ≤ 0 < λ₁(π/2)`.
    offset: i64,
}

impl HalfAxisProblem {
    pub fn new(pot: &PotentialMatrix, x_max: f64, m: usize) -> Result<Self> {
        let (a, _) = pot.domain();
        if a != 0.0 {
            return Err(Error::Input(format!("half-axis potential must start at 0, starts at {a}")));
        }
        let stepper = Stepper::new(pot, Grid::new(0.0, x_max, m)?)?;
        let end = pot.eval(x_max)?;
        let mut prob = Self { stepper, end, offset: 0 };
        prob.offset = ((prob.theta(0.0)? + FRAC_PI_2) / PI + 1e-9).floor() as i64;
        Ok(prob)
    }

    /// The linear model truncated at `x_max`.
    pub fn model(x_max: f64, m: usize) -> Result<Self> {
        Self::new(&linear_potential(x_max), x_max, m)
    }

    pub fn grid(&self) -> &Grid {
        self.stepper.grid()
    }

    /// `Θ(λ) = −θ(0)` for the decaying solution; increasing in `λ`.
    pub fn theta(&self, lambda: f64) -> Result<f64> {
        let v = decaying(self.end.0, self.end.1, lambda)?;
        Ok(-self.stepper.shoot_back(lambda, v).theta)
    }

    /// Decaying solution with `|u(x_max)| = 1`.
    pub fn decaying_solution(&self, lambda: f64) -> Result<Trajectory2> {
        let v = decaying(self.end.0, self.end.1, lambda)?;
        Ok(Trajectory2::from_points(*self.grid(), &self.stepper.backward(lambda, v)))
    }

    /// `u₁(0)cos α + u₂(0)sin α` for the decaying solution normalized at `0`.
    pub fn shooting_function(&self, lambda: f64, alpha: f64) -> Result<f64> {
        let v = decaying(self.end.0, self.end.1, lambda)?;
        let y = self.stepper.shoot_back(lambda, v).y;
        let r = y[0].hypot(y[1]);
        Ok((y[0] * alpha.cos() + y[1] * alpha.sin()) / r)
    }

    /// Continuous count: equals `n` exactly at `λₙ(α)`.
    pub fn counting(&self, lambda: f64, alpha: f64) -> Result<f64> {
        Ok((self.theta(lambda)? + alpha) / PI - self.offset as f64)
    }

    /// Root of `Θ(λ) = target`.
    fn solve_theta(&self, target: f64, tol: f64, n: i64) -> Result<f64> {
        let f = |l: f64| self.theta(l).map(|t| t - target);
        let (mut lo, mut hi) = (-1.0, 1.0);
        let (mut flo, mut fhi) = (f(lo)?, f(hi)?);
        let mut width = 2.0;
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
                flo = f(lo)?;
            } else {
                lo = hi;
                flo = fhi;
                hi += width;
                fhi = f(hi)?;
            }
            width *= 2.0;
        }
        let mut err = None;
        let r = brent(
            |l| match f(l) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            tol,
            200,
        )?;
        match err {
            Some(e) => Err(e),
            None => Ok(r),
        }
    }

    pub fn eigenvalue(&self, n: i64, alpha: f64, tol: f64) -> Result<f64> {
        check_alpha(alpha)?;
        if !(tol > 0.0) {
            return Err(Error::Input(format!("tolerance must be positive, got {tol}")));
        }
        self.solve_theta((n + self.offset) as f64 * PI - alpha, tol, n)
    }

    /// `a = ∫|φ|²` with `φ(0) = (sin α, −cos α)`.
    pub fn norming_constant(&self, lambda: f64, alpha: f64) -> Result<f64> {
        let u = self.decaying_solution(lambda)?;
        let e = u.first();
        let k = e[0] * alpha.sin() - e[1] * alpha.cos();
        if !(k.abs() > 0.0) || !k.is_finite() {
            return Err(Error::Truncation(format!("decaying solution degenerate at lambda = {lambda}")));
        }
        Ok(u.norm_sq() / (k * k))
    }

    /// `φ(x, λ)` with `φ(0) = (sin α, −cos α)`, taken from the decaying solution.
    pub fn eigenfunction(&self, lambda: f64, alpha: f64) -> Result<Trajectory2> {
        let u = self.decaying_solution(lambda)?;
        let e = u.first();
        let k = e[0] * alpha.sin() - e[1] * alpha.cos();
        Ok(u.scale(1.0 / k))
    }

    pub fn spectral_data(&self, alpha: f64, n_min: i64, n_max: i64, tol: f64) -> Result<SpectralData> {
        if n_min > n_max {
            return Err(Error::Input(format!("empty index window [{n_min}, {n_max}]")));
        }
        let items: Result<Vec<SpectralDatum>> = (n_min..=n_max)
            .into_par_iter()
            .map(|n| {
                let l = self.eigenvalue(n, alpha, tol)?;
                Ok(SpectralDatum::with_a(n, l, self.norming_constant(l, alpha)?))
            })
            .collect();
        Ok(SpectralData::from_items(alpha, alpha, items?))
    }

    /// Eigenvalue function `λ(γ)`: `λ(α − nπ) = λₙ(α)`.
    pub fn evf(&self, gamma: f64, tol: f64) -> Result<f64> {
        self.solve_theta(self.offset as f64 * PI - gamma, tol, 0)
    }

    /// Eigenvalues in `(lo, hi)` for angle `α`.
    pub fn eigenvalues_in(&self, alpha: f64, lo: f64, hi: f64, tol: f64) -> Result<Vec<f64>> {
        let c0 = self.counting(lo, alpha)?;
        let c1 = self.counting(hi, alpha)?;
        let first = (c0 + 1e-12).floor() as i64 + 1;
        let last = (c1 - 1e-12).ceil() as i64 - 1;
        (first..=last).map(|n| self.eigenvalue(n, alpha, tol)).collect()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > -FRAC_PI_2 && alpha <= FRAC_PI_2 + 1e-15) {
        return Err(Error::Input(format!("alpha = {alpha} must lie in (-pi/2, pi/2]")));
    }
    Ok(())
}

/// Central difference of the half-axis EVF.
pub fn evf_halfaxis_derivative(prob: &HalfAxisProblem, gamma: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Input(format!("step must be positive, got {delta}")));
    }
    let tol = 1e-13;
    Ok((prob.evf(gamma + delta, tol)? - prob.evf(gamma - delta, tol)?) / (2.0 * delta))
}

/// `m₀(ν + iμ) = u₁(0)/u₂(0)` for the solution decaying at `x_max`.
pub fn weyl_m0(pot: &PotentialMatrix, nu: f64, mu: f64, x_max: f64) -> Result<Complex64> {
    if mu == 0.0 || !mu.is_finite() || !nu.is_finite() {
        return Err(Error::Input(format!("need finite non-real lambda, got {nu} + {mu}i")));
    }
    let lambda = Complex64::new(nu, mu);
    let m = ((x_max * lambda.norm() / 0.05).ceil() as usize).max(HALF_M);
    let st = Stepper::new(pot, Grid::new(0.0, x_max, m)?)?;
    let (p, q) = pot.eval(x_max)?;
    let kappa = (Complex64::new(p * p + q * q, 0.0) - lambda * lambda).sqrt();
    let mut y = [lambda + p, kappa + q];
    for k in (0..m).rev() {
        y = capply(&st.step_c(k, lambda, false), y);
        let r = y[0].norm().max(y[1].norm());
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Truncation(format!("backward integration blew up at x = {}", st.grid().node(k))));
        }
        y = [y[0] / r, y[1] / r];
    }
    Ok(y[0] / y[1])
}

/// `m(λ) = (m₀cos α + sin α)/(m₀cos β + sin β)`.
pub fn weyl_m_from_m0(m0: Complex64, alpha: f64, beta: f64) -> Complex64 {
    (m0 * alpha.cos() + alpha.sin()) / (m0 * beta.cos() + beta.sin())
}

// ---------------------------------------------------------------------------
// Two spectra on the half axis

fn spectrum_window(s: &SpectralData, trunc: i64) -> Result<Vec<f64>> {
    if !s.covers(-trunc, trunc) {
        return Err(Error::Input(format!("spectrum must cover -{trunc}..={trunc}")));
    }
    let l: Result<Vec<f64>> = (-trunc..=trunc).map(|n| s.lambda(n)).collect();
    let l = l?;
    if l.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Input("eigenvalues must increase with the index".into()));
    }
    Ok(l)
}

/// Truncated products at a single `(N, μ)`; `L(μ)` stands in for `1/(c·Πλₖ(β)/λₖ(α))`.
pub fn halfaxis_two_spectra_raw(spec_a: &SpectralData, spec_b: &SpectralData, n: i64, trunc: i64, mu: f64) -> Result<f64> {
    if n.abs() > trunc {
        return Err(Error::Input(format!("index {n} outside the truncation {trunc}")));
    }
    let la = spectrum_window(spec_a, trunc)?;
    let lb = spectrum_window(spec_b, trunc)?;
    let s = (spec_b.alpha - spec_a.alpha).sin();
    if s == 0.0 {
        return Err(Error::Input("the two boundary angles must differ".into()));
    }
    let (lo, hi) = if s > 0.0 { (&lb, &la) } else { (&la, &lb) };
    for i in 0..lo.len() {
        let ok = lo[i] < hi[i] && (i + 1 == lo.len() || hi[i] < lo[i + 1]);
        if !ok {
            return Err(Error::Input(format!("spectra do not interlace at n = {}", i as i64 - trunc)));
        }
    }
    let at = |v: &Vec<f64>, k: i64| v[(k + trunc) as usize];
    let ln = at(&la, n);
    let mut log = 0.0;
    for k in -trunc..=trunc {
        if k == 0 || k == n {
            continue;
        }
        log += ((at(&la, k) - ln) / (at(&lb, k) - ln)).abs().ln();
        if mu.is_finite() {
            let (a, b) = (at(&la, k), at(&lb, k));
            log -= 0.5 * ((a * a + mu * mu) / (b * b + mu * mu)).ln();
        }
    }
    let lead = if n == 0 {
        s / (at(&la, 0) - at(&lb, 0))
    } else {
        s / (ln - at(&lb, n)) * (ln - at(&la, 0)) / (ln - at(&lb, 0))
    };
    Ok(lead * log.exp())
}

/// `aₙ(α)` from the spectra at `α` and `β`, extrapolated in `μ` (error `O(μ⁻²)`)
/// and in the truncation (error `O(N^{-1/2})`).
pub fn halfaxis_two_spectra_norming(spec_a: &SpectralData, spec_b: &SpectralData, n: i64, trunc: i64, mu_max: f64) -> Result<f64> {
    if !(mu_max > 0.0) {
        return Err(Error::Input(format!("mu_max must be positive, got {mu_max}")));
    }
    let coarse = trunc / 4;
    if coarse < n.abs().max(1) {
        return Err(Error::Input(format!("truncation {trunc} too small for index {n}")));
    }
    let at = |t: i64| -> Result<f64> {
        let hi = halfaxis_two_spectra_raw(spec_a, spec_b, n, t, mu_max)?;
        let lo = halfaxis_two_spectra_raw(spec_a, spec_b, n, t, mu_max / 2.0)?;
        Ok((4.0 * hi - lo) / 3.0)
    };
    Ok(2.0 * at(trunc)? - at(coarse)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    /// `p ≡ 0`: `Λ(−α) = −Λ(α)`.
    P0,
    /// `q ≡ 0`: `Λ(±π/2 − α) = −Λ(α)`.
    Q0,
}

/// Partner spectrum `−Λ(α)`, re-indexed to `λ₀ ≤ 0 < λ₁`, at the partner angle.
pub fn partner_spectrum(spec: &SpectralData, sym: Symmetry) -> Result<SpectralData> {
    let al = spec.alpha;
    check_alpha(al)?;
    let beta = match sym {
        Symmetry::P0 => {
            if al == 0.0 || (al - FRAC_PI_2).abs() < 1e-15 {
                return Err(Error::Inapplicable(format!("p = 0 route excludes alpha = {al}")));
            }
            -al
        }
        Symmetry::Q0 => {
            if (al.abs() - PI / 4.0).abs() < 1e-15 {
                return Err(Error::Inapplicable(format!("q = 0 route excludes alpha = {al}")));
            }
            if al >= 0.0 {
                FRAC_PI_2 - al
            } else {
                -FRAC_PI_2 - al
            }
        }
    };
    Ok(SpectralData::from_items(beta, beta, spec.items.values().map(|d| SpectralDatum::new(-d.n, -d.lambda))))
}

/// Norming constants from a single spectrum of a potential with `p = 0` or `q = 0`.
pub fn halfaxis_one_spectrum_norming(spec: &SpectralData, sym: Symmetry, n: i64, trunc: i64, mu_max: f64) -> Result<f64> {
    let partner = partner_spectrum(spec, sym)?;
    halfaxis_two_spectra_norming(spec, &partner, n, trunc, mu_max)
}

// ---------------------------------------------------------------------------
// Surgery

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Addition {
    pub mu: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rescaling {
    pub n: i64,
    pub b: f64,
}

/// Removals by index, additions `(μ, c)` with norming constant `c`, rescalings `aₙ → b`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeryPlan {
    #[serde(default)]
    pub remove: Vec<i64>,
    #[serde(default)]
    pub add: Vec<Addition>,
    #[serde(default)]
    pub rescale: Vec<Rescaling>,
}

impl SurgeryPlan {
    pub fn is_empty(&self) -> bool {
        self.remove.is_empty() && self.add.is_empty() && self.rescale.is_empty()
    }

    /// Internal consistency only; see [`SurgeryPlan::validate_against`].
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &n in self.remove.iter().chain(self.rescale.iter().map(|r| &r.n)) {
            if !seen.insert(n) {
                return Err(Error::Input(format!("index {n} appears twice in the plan")));
            }
        }
        for r in &self.rescale {
            if !(r.b > 0.0 && r.b.is_finite()) {
                return Err(Error::Input(format!("rescaled norming constant b = {} must be positive", r.b)));
            }
        }
        for (i, a) in self.add.iter().enumerate() {
            if !(a.c > 0.0 && a.c.is_finite() && a.mu.is_finite()) {
                return Err(Error::Input(format!("addition ({}, {}) needs finite mu and c > 0", a.mu, a.c)));
            }
            if self.add[..i].iter().any(|b| b.mu == a.mu) {
                return Err(Error::Input(format!("mu = {} added twice", a.mu)));
            }
        }
        Ok(())
    }

    pub fn validate_against(&self, base: &ModelSpectrum) -> Result<()> {
        self.validate()?;
        if base.flavor == Flavor::Whole {
            return Err(Error::Input("surgery needs a half-axis model".into()));
        }
        for &n in self.remove.iter().chain(self.rescale.iter().map(|r| &r.n)) {
            base.item(n)?;
        }
        for a in &self.add {
            let clash = base.items.values().any(|it| (it.lambda - a.mu).abs() < 1e-10);
            if clash {
                return Err(Error::Input(format!("mu = {} collides with an eigenvalue of the model", a.mu)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SurgeryResult {
    pub potential: PotentialMatrix,
    /// Transformed eigenfunctions of the retained model indices in the window.
    pub eigenfunctions: BTreeMap<i64, Trajectory2>,
    /// Transformed eigenfunctions at the added `μₖ`, in plan order.
    pub added: Vec<Trajectory2>,
    /// `det S(x)` per node.
    pub det: Vec<f64>,
}

/// Column of the rank-finite kernel: a function, its weight, and its model index if exact.
struct Column {
    values: Vec<[f64; 2]>,
    weight: f64,
    /// Model index, `‖φ‖²`, and `1 + w·‖φ‖²` formed without cancellation.
    model: Option<(i64, f64, f64)>,
}

/// `∫₀ˣ f`, same order as [`tail6`].
fn head6(f: &[f64], h: f64) -> Vec<f64> {
    let r: Vec<f64> = f.iter().rev().copied().collect();
    let mut c = tail6(&r, h);
    c.reverse();
    c
}

/// `∫_{x_i}^{x_m} f` with the sixth-order rule from local quintic interpolants;
/// tails of Gaussian-decaying products lose too much to the cubic rule.
fn tail6(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    if n < 7 {
        return cumulative_tail(f, h, Rule::Cubic);
    }
    let m = n - 1;
    let mut out = vec![0.0; n];
    let w4 = h / 24.0;
    let w6 = h / 1440.0;
    for k in (0..m).rev() {
        let piece = if k >= 2 && k + 3 <= m {
            w6 * (11.0 * (f[k - 2] + f[k + 3]) - 93.0 * (f[k - 1] + f[k + 2]) + 802.0 * (f[k] + f[k + 1]))
        } else if k == 0 {
            w4 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if k == m - 1 {
            w4 * (9.0 * f[m] + 19.0 * f[m - 1] - 5.0 * f[m - 2] + f[m - 3])
        } else {
            w4 * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2])
        };
        out[k] = out[k + 1] + piece;
    }
    out
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `∫₀ˣ u·v` at every node, with the exact total `a·δ` for model pairs.
fn pair_integrals(u: &Column, v: &Column, h: f64, tail: bool) -> Vec<f64> {
    let f: Vec<f64> = u.values.iter().zip(&v.values).map(|(a, b)| dot(*a, *b)).collect();
    match (u.model, v.model) {
        (Some((i, a, _)), Some((k, _, _))) if tail => {
            let t = tail6(&f, h);
            let total = if i == k { a } else { 0.0 };
            t.iter().map(|t| total - t).collect()
        }
        _ => head6(&f, h),
    }
}

/// Equilibrated LU solve of `M g = r`; `det` is the determinant of `M` itself.
fn solve_scaled(m: DMatrix<f64>, rhs: DMatrix<f64>, x: f64) -> Result<(DMatrix<f64>, f64)> {
    let n = m.nrows();
    let mut scaled = m.clone();
    let mut r = rhs;
    let mut scale = 1.0;
    for i in 0..n {
        let s = (0..n).map(|j| m[(i, j)].abs()).fold(0.0, f64::max);
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Singular(x));
        }
        scale *= s;
        for j in 0..n {
            scaled[(i, j)] /= s;
        }
        for j in 0..r.ncols() {
            r[(i, j)] /= s;
        }
    }
    let mut cols = vec![1.0; n];
    for j in 0..n {
        let s = (0..n).map(|i| scaled[(i, j)].abs()).fold(0.0, f64::max);
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Singular(x));
        }
        cols[j] = s;
        scale *= s;
        for i in 0..n {
            scaled[(i, j)] /= s;
        }
    }
    let lu = scaled.lu();
    let d = lu.determinant();
    if !(d.abs() >= 1e-12) {
        return Err(Error::Singular(x));
    }
    let mut g = lu.solve(&r).ok_or(Error::Singular(x))?;
    for (j, s) in cols.iter().enumerate() {
        for c in 0..g.ncols() {
            g[(j, c)] /= s;
        }
    }
    Ok((g, d * scale))
}

fn check_grid(grid: &Grid) -> Result<()> {
    if grid.a() != 0.0 {
        return Err(Error::Input(format!("surgery grid must start at 0, starts at {}", grid.a())));
    }
    Ok(())
}

/// Grid with the same step extended by [`TAIL_PAD`].
fn padded(grid: &Grid) -> Result<Grid> {
    let extra = (TAIL_PAD / grid.h()).ceil() as usize;
    Grid::new(0.0, grid.b() + extra as f64 * grid.h(), grid.m() + extra)
}

fn model_values(base: &ModelSpectrum, n: i64, grid: &Grid) -> Result<Vec<[f64; 2]>> {
    base.item(n)?;
    Ok(grid.nodes().par_iter().map(|&x| base.eigenfunction(n, x).expect("checked index")).collect())
}

/// `ψ(x, μ)` of the model from `(sin α, −cos α)`, on `grid`.
fn model_cauchy(alpha: f64, mu: f64, grid: &Grid) -> Result<Vec<[f64; 2]>> {
    let st = Stepper::new(&linear_potential(grid.b()), *grid)?;
    Ok(st.forward(mu, boundary_vector(alpha)))
}

/// Potential and eigenfunctions of the model after the changes in `plan`.
pub fn surgery(base: &ModelSpectrum, plan: &SurgeryPlan, grid: &Grid) -> Result<SurgeryResult> {
    plan.validate_against(base)?;
    check_grid(grid)?;
    let alpha = base.alpha();
    let ext = padded(grid)?;
    let m1 = grid.len();
    let cut = |v: Vec<[f64; 2]>| -> Vec<[f64; 2]> { v[..m1].to_vec() };
    let mut cols: Vec<Column> = Vec::new();
    for a in &plan.add {
        let mut values = model_cauchy(alpha, a.mu, grid)?;
        values.resize(ext.len(), [0.0; 2]);
        cols.push(Column { values, weight: 1.0 / a.c, model: None });
    }
    for &n in &plan.remove {
        let a = base.a(n)?;
        cols.push(Column { values: model_values(base, n, &ext)?, weight: -1.0 / a, model: Some((n, a, 0.0)) });
    }
    for r in &plan.rescale {
        let a = base.a(r.n)?;
        cols.push(Column {
            values: model_values(base, r.n, &ext)?,
            weight: 1.0 / r.b - 1.0 / a,
            model: Some((r.n, a, a / r.b)),
        });
    }
    let h = grid.h();
    let r = cols.len();
    // entries of S(x): model pairs through their tails, `δ(1 + w·a) − w·T`
    let mut ents = vec![vec![Vec::new(); r]; r];
    for i in 0..r {
        for k in 0..r {
            let f: Vec<f64> = cols[i].values.iter().zip(&cols[k].values).map(|(a, b)| dot(*a, *b)).collect();
            let w = cols[k].weight;
            let d = if i == k { 1.0 } else { 0.0 };
            ents[i][k] = match (cols[i].model, cols[k].model) {
                (Some(_), Some((_, _, diag))) => {
                    let t = tail6(&f, h);
                    t[..m1].iter().map(|t| d * diag - w * t).collect()
                }
                _ => head6(&f[..m1], h).iter().map(|c| d + w * c).collect(),
            };
        }
    }
    let solved: Result<Vec<(Vec<[f64; 2]>, f64)>> = (0..m1)
        .into_par_iter()
        .map(|j| {
            if r == 0 {
                return Ok((Vec::new(), 1.0));
            }
            let m = DMatrix::from_fn(r, r, |k, i| ents[i][k][j]);
            let rhs = DMatrix::from_fn(r, 2, |k, p| -cols[k].weight * cols[k].values[j][p]);
            let (g, det) = solve_scaled(m, rhs, grid.node(j))?;
            Ok(((0..r).map(|i| [g[(i, 0)], g[(i, 1)]]).collect(), det))
        })
        .collect();
    let (g, det): (Vec<Vec<[f64; 2]>>, Vec<f64>) = solved?.into_iter().unzip();
    let (p, q): (Vec<f64>, Vec<f64>) = (0..m1)
        .map(|j| {
            let x = grid.node(j);
            let mut k = Mat2::ZERO;
            for (gi, c) in g[j].iter().zip(&cols) {
                k = k + Mat2::outer(*gi, c.values[j]);
            }
            let (dp, dq) = k.kb_minus_bk().pq();
            (dp, x + dq)
        })
        .unzip();
    let potential = PotentialMatrix::sampled(*grid, p, q)?;
    let transform = |target: &Column| -> Result<Trajectory2> {
        let mut out = cut(target.values.clone());
        for (i, c) in cols.iter().enumerate() {
            let ints = pair_integrals(c, target, h, true);
            for (j, o) in out.iter_mut().enumerate() {
                o[0] += g[j][i][0] * ints[j];
                o[1] += g[j][i][1] * ints[j];
            }
        }
        Trajectory2::new(*grid, out.iter().map(|v| v[0]).collect(), out.iter().map(|v| v[1]).collect())
    };
    let removed: BTreeSet<i64> = plan.remove.iter().copied().collect();
    let mut eigenfunctions = BTreeMap::new();
    for (&n, it) in &base.items {
        if removed.contains(&n) {
            continue;
        }
        let col = Column { values: model_values(base, n, &ext)?, weight: 0.0, model: Some((n, it.a, 1.0)) };
        eigenfunctions.insert(n, transform(&col)?);
    }
    let mut added = Vec::new();
    for c in cols.iter().filter(|c| c.model.is_none()) {
        added.push(transform(c)?);
    }
    Ok(SurgeryResult { potential, eigenfunctions, added, det })
}

// ---------------------------------------------------------------------------
// Recurrent rank-one updates

/// One change of the spectral function; norming constants in the `aₙ = ‖φₙ‖²` convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Update {
    /// New eigenvalue `ν` with norming constant `c`.
    Add { nu: f64, c: f64 },
    /// Remove the eigenvalue `ν` whose norming constant is `a`.
    Remove { nu: f64, a: f64 },
    /// Change the norming constant at `ν` from `a` to `b`.
    Rescale { nu: f64, a: f64, b: f64 },
}

impl Update {
    pub fn nu(&self) -> f64 {
        match *self {
            Update::Add { nu, .. } | Update::Remove { nu, .. } | Update::Rescale { nu, .. } => nu,
        }
    }

    /// Jump `γ` added to the spectral function at `ν`.
    pub fn gamma(&self) -> f64 {
        match *self {
            Update::Add { c, .. } => 1.0 / c,
            Update::Remove { a, .. } => -1.0 / a,
            Update::Rescale { a, b, .. } => 1.0 / b - 1.0 / a,
        }
    }

    /// `1 + γ‖φ(·, ν)‖²` when `ν` is an eigenvalue of the operator being changed.
    fn full_denominator(&self) -> Option<f64> {
        match *self {
            Update::Add { .. } => None,
            Update::Remove { .. } => Some(0.0),
            Update::Rescale { a, b, .. } => Some(a / b),
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match *self {
            Update::Add { nu, c } => nu.is_finite() && c > 0.0 && c.is_finite(),
            Update::Remove { nu, a } => nu.is_finite() && a > 0.0 && a.is_finite(),
            Update::Rescale { nu, a, b } => nu.is_finite() && a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Input(format!("invalid update {self:?}")))
        }
    }
}

/// Applies `updates` one at a time to `Ω` on `[0, grid.b()]`.
///
/// `seeds[k]` is `φ(·, νₖ)` of the unperturbed operator on `ext`, a grid with the
/// step of `grid` that extends it; eigenfunctions must be accurate out to the end of
/// `ext`, where their tails are negligible.
pub fn general_finite_perturbation(
    base: &PotentialMatrix,
    updates: &[Update],
    seeds: &[Vec<[f64; 2]>],
    grid: &Grid,
    ext: &Grid,
) -> Result<PotentialMatrix> {
    if updates.len() != seeds.len() {
        return Err(Error::Shape(format!("{} updates with {} seed functions", updates.len(), seeds.len())));
    }
    if (ext.h() - grid.h()).abs() > 1e-12 * grid.h() || ext.a() != grid.a() || ext.len() < grid.len() {
        return Err(Error::Shape("extended grid must share the start and step of the output grid".into()));
    }
    for (i, u) in updates.iter().enumerate() {
        u.check()?;
        if seeds[i].len() != ext.len() {
            return Err(Error::Shape(format!("seed {i} has {} samples, expected {}", seeds[i].len(), ext.len())));
        }
        if updates[..i].iter().any(|v| v.nu() == u.nu()) {
            return Err(Error::Input(format!("nu = {} changed twice", u.nu())));
        }
    }
    let h = grid.h();
    let m1 = grid.len();
    let (p0, q0) = base.sample(grid)?;
    let mut omega: Vec<Mat2> = p0.iter().zip(&q0).map(|(p, q)| Mat2::omega(*p, *q)).collect();
    let mut phis: Vec<Vec<[f64; 2]>> = seeds.to_vec();
    for k in 0..updates.len() {
        let gamma = updates[k].gamma();
        let v = phis[k].clone();
        let dens: Vec<f64> = v.iter().map(|y| dot(*y, *y)).collect();
        // 1 + γ ∫₀ˣ|v|²
        let denom: Vec<f64> = match updates[k].full_denominator() {
            Some(full) => {
                let tail = tail6(&dens, h);
                tail.iter().map(|t| full - gamma * t).collect()
            }
            None => head_cumulative(&dens, m1, h).iter().map(|g| 1.0 + gamma * g).collect(),
        };
        for (j, d) in denom.iter().enumerate().take(m1) {
            if !(*d > 0.0) {
                return Err(Error::Contract(format!("1 + gamma*g = {d} at x = {}", grid.node(j))));
            }
        }
        for j in 0..m1 {
            let c = gamma / denom[j];
            let vv = Mat2::outer(v[j], v[j]);
            omega[j] = omega[j] + (Mat2::B * vv - vv * Mat2::B).scale(c);
        }
        for l in k + 1..updates.len() {
            let f: Vec<f64> = v.iter().zip(&phis[l]).map(|(a, b)| dot(*a, *b)).collect();
            let ints = match (updates[k].full_denominator(), updates[l].full_denominator()) {
                (Some(_), Some(_)) => tail6(&f, h).iter().map(|t| -t).collect(),
                _ => head_cumulative(&f, m1, h),
            };
            for j in 0..ext.len() {
                let c = gamma / denom[j];
                let s = if c.is_finite() { c * ints[j] } else { 0.0 };
                let upd = [phis[l][j][0] - s * v[j][0], phis[l][j][1] - s * v[j][1]];
                phis[l][j] = if upd[0].is_finite() && upd[1].is_finite() { upd } else { [0.0; 2] };
            }
        }
    }
    let (p, q) = omega.iter().map(|o| o.pq()).unzip();
    PotentialMatrix::sampled(*grid, p, q)
}

/// `∫₀ˣ f` over the first `m1` nodes, held constant beyond them.
fn head_cumulative(f: &[f64], m1: usize, h: f64) -> Vec<f64> {
    let mut c = head6(&f[..m1], h);
    let last = c[m1 - 1];
    c.resize(f.len(), last);
    c
}

/// [`general_finite_perturbation`] on the model with seeds built from `plan`.
pub fn model_finite_perturbation(base: &ModelSpectrum, plan: &SurgeryPlan, grid: &Grid) -> Result<PotentialMatrix> {
    plan.validate_against(base)?;
    check_grid(grid)?;
    let ext = padded(grid)?;
    let mut updates = Vec::new();
    let mut seeds = Vec::new();
    for &n in &plan.remove {
        updates.push(Update::Remove { nu: base.lambda(n)?, a: base.a(n)? });
        seeds.push(model_values(base, n, &ext)?);
    }
    for r in &plan.rescale {
        updates.push(Update::Rescale { nu: base.lambda(r.n)?, a: base.a(r.n)?, b: r.b });
        seeds.push(model_values(base, r.n, &ext)?);
    }
    // additions last: their seeds are only known on the output grid
    for a in &plan.add {
        updates.push(Update::Add { nu: a.mu, c: a.c });
        let mut v = model_cauchy(base.alpha(), a.mu, grid)?;
        v.resize(ext.len(), [0.0; 2]);
        seeds.push(v);
    }
    general_finite_perturbation(&linear_potential(grid.b()), &updates, &seeds, grid, &ext)
}

/// `q̃(x) = x − e^{−x²}/(a₀ − ∫₀ˣe^{−s²}ds)` after removing `λ₀ = 0` from `half_bc0`.
pub fn remove_zero_closed_form(x: f64) -> f64 {
    // a₀ − ∫₀ˣ e^{−s²} = (√π/2)·erfc(x)
    let tail = 0.5 * PI.sqrt() * libm::erfc(x);
    x - (-x * x).exp() / tail
}

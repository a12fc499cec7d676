//! Isospectral potentials: changing finitely many norming constants of
//! `L(Ω, α, 0)` while keeping the spectrum.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::cauchy::SolverConfig;
use crate::degenerate::{solve_node, Method};
use crate::eigen::Problem;
use crate::error::{Error, Result};
use crate::grid::{cumulative, cumulative_at, integrate, Grid, Rule};
use crate::potential::PotentialMatrix;
use crate::traj::Trajectory2;

/// Finitely supported `n ↦ tₙ`; the new norming constants are `aₙ e^{−tₙ}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TSequence {
    pub entries: BTreeMap<i64, f64>,
}

impl TSequence {
    pub fn new(entries: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, t) in entries {
            if !t.is_finite() {
                return Err(Error::Input(format!("t_{n} = {t} is not finite")));
            }
            if map.insert(n, t).is_some() {
                return Err(Error::Input(format!("index {n} given twice")));
            }
        }
        Ok(Self { entries: map })
    }

    pub fn single(n: i64, t: f64) -> Result<Self> {
        Self::new([(n, t)])
    }

    pub fn get(&self, n: i64) -> f64 {
        self.entries.get(&n).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> Vec<i64> {
        self.entries.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in the order `0, 1, −1, 2, −2, …`.
    pub fn interleaved(&self) -> Vec<(i64, f64)> {
        let mut v: Vec<(i64, f64)> = self.entries.iter().map(|(&n, &t)| (n, t)).collect();
        v.sort_by_key(|&(n, _)| interleave_key(n));
        v
    }
}

/// Position of `n` in `0, 1, −1, 2, −2, …`.
pub fn interleave_key(n: i64) -> u64 {
    if n > 0 {
        2 * n as u64 - 1
    } else {
        2 * n.unsigned_abs()
    }
}

/// Normalized eigenfunctions of `L(Ω, α, 0)` over an index window.
#[derive(Debug, Clone)]
pub struct IsoBase {
    pub alpha: f64,
    pub grid: Grid,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub lambda: BTreeMap<i64, f64>,
    pub norming: BTreeMap<i64, f64>,
    pub h: BTreeMap<i64, Trajectory2>,
}

impl IsoBase {
    pub fn new(pot: &PotentialMatrix, alpha: f64, n_min: i64, n_max: i64, cfg: &SolverConfig) -> Result<Self> {
        let prob = Problem::new(pot, alpha, 0.0, cfg)?;
        let grid = *prob.stepper().grid();
        let (p, q) = pot.sample(&grid)?;
        let spec = prob.spectral_data(n_min, n_max, 1e-13)?;
        let mut lambda = BTreeMap::new();
        let mut norming = BTreeMap::new();
        let mut h = BTreeMap::new();
        for (&n, d) in &spec.items {
            let a = d.a.expect("norming constants filled");
            lambda.insert(n, d.lambda);
            norming.insert(n, a);
            h.insert(n, prob.normalized(d.lambda, a)?);
        }
        Ok(Self { alpha: prob.alpha, grid, p, q, lambda, norming, h })
    }

    pub fn potential(&self) -> Result<PotentialMatrix> {
        PotentialMatrix::sampled(self.grid, self.p.clone(), self.q.clone())
    }

    pub fn ell(&self) -> Result<BTreeMap<i64, f64>> {
        ell_of(&self.h)
    }

    fn check_support(&self, t: &TSequence) -> Result<()> {
        for n in t.support() {
            if !self.h.contains_key(&n) {
                return Err(Error::Input(format!("index {n} of T lies outside the computed window")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IsoResult {
    pub omega_t: PotentialMatrix,
    pub eigenfunctions: BTreeMap<i64, Trajectory2>,
    pub ell: BTreeMap<i64, f64>,
    /// `det S(x, T)` at every node.
    pub det_s: Vec<f64>,
}

/// `ℓₙ = ln(|hₙ(π)|/|hₙ(0)|)`.
fn ell_of(h: &BTreeMap<i64, Trajectory2>) -> Result<BTreeMap<i64, f64>> {
    h.iter()
        .map(|(&n, f)| {
            let [a1, a2] = f.first();
            let [b1, b2] = f.last();
            let (top, bottom) = (b1.hypot(b2), a1.hypot(a2));
            if top < 1e-14 || bottom < 1e-14 {
                return Err(Error::LogDomain(n));
            }
            Ok((n, (top / bottom).ln()))
        })
        .collect()
}

fn check_unit(h: &Trajectory2) -> Result<()> {
    let nrm = h.norm_sq();
    if (nrm - 1.0).abs() > 1e-8 {
        return Err(Error::Contract(format!("h_m must have unit norm, |h|^2 = {nrm}")));
    }
    Ok(())
}

/// `θ(x) = 1 + (e^t − 1)∫₀ˣ|h_m|²` at every node.
pub fn theta_nodes(h_m: &Trajectory2, t: f64) -> Result<Vec<f64>> {
    check_unit(h_m)?;
    let c = t.exp_m1();
    Ok(h_m.cumulative_norm_sq().iter().map(|s| 1.0 + c * s).collect())
}

pub fn theta(h_m: &Trajectory2, t: f64, x: f64) -> Result<f64> {
    check_unit(h_m)?;
    let dens = h_m.density();
    let cum = cumulative(&dens, h_m.grid.h(), Rule::Cubic);
    Ok(1.0 + t.exp_m1() * cumulative_at(&h_m.grid, &dens, &cum, x)?)
}

fn product(a: &Trajectory2, b: &Trajectory2) -> Vec<f64> {
    (0..a.grid.len()).map(|i| a.y1[i] * b.y1[i] + a.y2[i] * b.y2[i]).collect()
}

pub fn shift_one(base: &IsoBase, m: i64, t: f64) -> Result<IsoResult> {
    shift_finite_recurrent(base, &TSequence::single(m, t)?)
}

/// Successive single shifts in the order `0, 1, −1, 2, …`.
pub fn shift_finite_recurrent(base: &IsoBase, t_seq: &TSequence) -> Result<IsoResult> {
    base.check_support(t_seq)?;
    shift_sequence(base, &t_seq.interleaved())
}

/// Single shifts applied in the given order.
pub fn shift_sequence(base: &IsoBase, steps: &[(i64, f64)]) -> Result<IsoResult> {
    for &(n, _) in steps {
        if !base.h.contains_key(&n) {
            return Err(Error::Input(format!("index {n} lies outside the computed window")));
        }
    }
    let grid = base.grid;
    let h_step = grid.h();
    let (mut p, mut q) = (base.p.clone(), base.q.clone());
    let mut h = base.h.clone();
    let mut det_s = vec![1.0; grid.len()];
    for &(m, t) in steps {
        let hm = h[&m].clone();
        let th = theta_nodes(&hm, t)?;
        let c = t.exp_m1();
        for i in 0..grid.len() {
            let (h1, h2) = (hm.y1[i], hm.y2[i]);
            p[i] += c / th[i] * 2.0 * h1 * h2;
            q[i] += c / th[i] * (h2 * h2 - h1 * h1);
            det_s[i] *= th[i];
        }
        let updated: Vec<(i64, Trajectory2)> = h
            .par_iter()
            .map(|(&n, hn)| {
                if n == m {
                    let s = (0.5 * t).exp();
                    let y1 = (0..grid.len()).map(|i| s * hm.y1[i] / th[i]).collect();
                    let y2 = (0..grid.len()).map(|i| s * hm.y2[i] / th[i]).collect();
                    return (n, Trajectory2 { grid, y1, y2 });
                }
                let cum = cumulative(&product(&hm, hn), h_step, Rule::Cubic);
                let k: Vec<f64> = (0..grid.len()).map(|i| c * cum[i] / th[i]).collect();
                let y1 = (0..grid.len()).map(|i| hn.y1[i] - k[i] * hm.y1[i]).collect();
                let y2 = (0..grid.len()).map(|i| hn.y2[i] - k[i] * hm.y2[i]).collect();
                (n, Trajectory2 { grid, y1, y2 })
            })
            .collect();
        h = updated.into_iter().collect();
    }
    let ell = ell_of(&h)?;
    Ok(IsoResult { omega_t: PotentialMatrix::sampled(grid, p, q)?, eigenfunctions: h, ell, det_s })
}

/// All shifts at once: `Ω(x, T) = Ω + G(x,x)B − BG(x,x)`, `G(x,x) = Σₖ gₖ(x)hₖ*(x)`.
pub fn shift_finite_explicit(base: &IsoBase, t_seq: &TSequence) -> Result<IsoResult> {
    shift_finite_explicit_with(base, t_seq, Method::Auto)
}

pub fn shift_finite_explicit_with(base: &IsoBase, t_seq: &TSequence, method: Method) -> Result<IsoResult> {
    base.check_support(t_seq)?;
    let grid = base.grid;
    let hs = grid.h();
    let support = t_seq.support();
    let w: Vec<f64> = support.iter().map(|&k| t_seq.get(k).exp_m1()).collect();
    let tracked: Vec<i64> = base.h.keys().copied().collect();
    // ∫₀ˣ hₖ*hₙ for k in the support and every tracked n
    let cum: BTreeMap<(i64, i64), Vec<f64>> = support
        .iter()
        .flat_map(|&k| tracked.iter().map(move |&n| (k, n)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, n)| ((k, n), cumulative(&product(&base.h[&k], &base.h[&n]), hs, Rule::Cubic)))
        .collect();
    let nt = support.len();
    let nodes: Vec<Result<(Vec<[f64; 2]>, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let ints = DMatrix::from_fn(nt, nt, |a, b| cum[&(support[a], support[b])][i]);
            let f: Vec<[f64; 2]> = support.iter().map(|k| base.h[k].at(i)).collect();
            let s = solve_node(&w, &ints, &f, method, grid.node(i))?;
            Ok((s.g, s.det))
        })
        .collect();
    let mut g = Vec::with_capacity(grid.len());
    let mut det_s = Vec::with_capacity(grid.len());
    for r in nodes {
        let (gi, d) = r?;
        g.push(gi);
        det_s.push(d);
    }
    let (mut p, mut q) = (base.p.clone(), base.q.clone());
    for i in 0..grid.len() {
        // G = [[a, b], [c, d]] gives GB − BG = [[−b − c, a − d], [a − d, b + c]]
        let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
        for (j, k) in support.iter().enumerate() {
            let hk = base.h[k].at(i);
            a += g[i][j][0] * hk[0];
            b += g[i][j][0] * hk[1];
            c += g[i][j][1] * hk[0];
            d += g[i][j][1] * hk[1];
        }
        p[i] += -b - c;
        q[i] += a - d;
    }
    let eigenfunctions: BTreeMap<i64, Trajectory2> = tracked
        .iter()
        .map(|&n| {
            let hn = &base.h[&n];
            let scale = (0.5 * t_seq.get(n)).exp();
            let (mut y1, mut y2) = (hn.y1.clone(), hn.y2.clone());
            for i in 0..grid.len() {
                for (j, k) in support.iter().enumerate() {
                    let ikn = cum[&(*k, n)][i];
                    y1[i] += g[i][j][0] * ikn;
                    y2[i] += g[i][j][1] * ikn;
                }
                y1[i] *= scale;
                y2[i] *= scale;
            }
            (n, Trajectory2 { grid, y1, y2 })
        })
        .collect();
    let ell = ell_of(&eigenfunctions)?;
    Ok(IsoResult { omega_t: PotentialMatrix::sampled(grid, p, q)?, eigenfunctions, ell, det_s })
}

/// `ℓₙ = ln|φₙ,₂(π)|` for `L(Ω, α, 0)`.
pub fn ell_sequence(pot: &PotentialMatrix, alpha: f64, n_min: i64, n_max: i64, cfg: &SolverConfig) -> Result<BTreeMap<i64, f64>> {
    let prob = Problem::new(pot, alpha, 0.0, cfg)?;
    let spec = prob.eigenvalues(n_min, n_max, 1e-13)?;
    spec.items
        .values()
        .map(|d| {
            let v = prob.phi(d.lambda).last()[1].abs();
            if v < 1e-14 {
                return Err(Error::LogDomain(d.n));
            }
            Ok((d.n, v.ln()))
        })
        .collect()
}

/// `∫₀^π |Ω̃ − Ω|` with `|Ω| = √(p² + q²)`.
pub fn l1_distance(a: &PotentialMatrix, b: &PotentialMatrix, grid: &Grid) -> Result<f64> {
    let (p1, q1) = a.sample(grid)?;
    let (p2, q2) = b.sample(grid)?;
    let f: Vec<f64> = (0..grid.len()).map(|i| (p1[i] - p2[i]).hypot(q1[i] - q2[i])).collect();
    Ok(integrate(&f, grid.h(), Rule::Cubic))
}

/// The family `Ω_{m,t}` isospectral to `Ω ≡ 0` with `α = 0`.
pub fn zero_family(m: i64, t: f64) -> PotentialMatrix {
    let c = t.exp_m1();
    let k = 2.0 * m as f64;
    PotentialMatrix::custom("zero-family", 0.0, std::f64::consts::PI, move |x| {
        let r = c / (std::f64::consts::PI + c * x);
        (-r * (k * x).sin(), r * (k * x).cos())
    })
}

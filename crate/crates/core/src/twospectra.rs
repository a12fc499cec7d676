//! Norming constants from two spectra, the regular Weyl function and the
//! one-spectrum formulas for `p ≡ 0` and `q ≡ 0`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::cauchy::{boundary_vector, SolverConfig, Stepper};
use crate::eigen::{Problem, SpectralData, SpectralDatum};
use crate::error::{Error, Result};
use crate::potential::{reduce_angle, PotentialMatrix};

/// How the factors with `|k| > N` are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tail {
    /// Plain symmetric truncation.
    None,
    /// Factors beyond `N` taken from the free lattices `k + (β − α)/π`, `k + (β − ε)/π`
    /// and multiplied in closed form through the gamma function.
    #[default]
    Lattice,
}

#[derive(Debug, Clone)]
pub struct TwoSpectraInput {
    pub spec_a: SpectralData,
    pub spec_e: SpectralData,
    pub trunc: i64,
    pub tail: Tail,
}

impl TwoSpectraInput {
    pub fn new(spec_a: SpectralData, spec_e: SpectralData, trunc: i64) -> Result<Self> {
        let input = Self { spec_a, spec_e, trunc, tail: Tail::default() };
        input.validate()?;
        Ok(input)
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.trunc;
        if n < 1 {
            return Err(Error::Input(format!("truncation must be positive, got {n}")));
        }
        let (a, e) = (self.spec_a.alpha, self.spec_e.alpha);
        if (a - e).abs() < 1e-14 {
            return Err(Error::Input("the two spectra must have different angles".into()));
        }
        if (self.spec_a.beta - self.spec_e.beta).abs() > 1e-12 {
            return Err(Error::Input("the two spectra must share beta".into()));
        }
        if !self.spec_a.covers(-n, n) || !self.spec_e.covers(-n, n) {
            return Err(Error::Input(format!("both spectra must cover indices -{n}..={n}")));
        }
        // λ decreases in the angle: the larger angle sits below, index by index.
        let (lower, upper) = if e > a { (&self.spec_e, &self.spec_a) } else { (&self.spec_a, &self.spec_e) };
        for k in -n..=n {
            let lo = lower.lambda(k)?;
            let mid = upper.lambda(k)?;
            let ok = lo < mid && (k == n || mid < lower.lambda(k + 1)?);
            if !ok {
                return Err(Error::Input(format!("spectra do not interlace at k = {k}")));
            }
        }
        Ok(())
    }
}

fn factor(num: f64, den: f64, n: i64) -> Result<f64> {
    if den.abs() < 1e-14 {
        return Err(Error::Coincident(n));
    }
    Ok(num / den)
}

/// `ln ∏_{|k| > N} (k + a)/(k + b)` with the factors for `k` and `−k` paired.
fn lattice_tail(n_trunc: i64, a: f64, b: f64) -> f64 {
    let m = n_trunc as f64 + 1.0;
    ln_gamma(m + b) + ln_gamma(m - b) - ln_gamma(m + a) - ln_gamma(m - a)
}

/// `aₙ(α) = sin(ε − α)/(λₙ(α) − λₙ(ε)) · ∏_{k≠n} (λₖ(α) − λₙ(α))/(λₖ(ε) − λₙ(α))`.
pub fn norming_from_two_spectra(input: &TwoSpectraInput, n: i64) -> Result<f64> {
    two_spectra_product(input, n, true)
}

/// The same product, multiplied either in `(k, −k)` pairs or in ascending `k`.
pub fn two_spectra_product(input: &TwoSpectraInput, n: i64, paired: bool) -> Result<f64> {
    let big_n = input.trunc;
    if n.abs() >= big_n {
        return Err(Error::Input(format!("index {n} must satisfy |n| < N = {big_n}")));
    }
    let (sa, se) = (&input.spec_a, &input.spec_e);
    let ln_ = sa.lambda(n)?;
    let le = se.lambda(n)?;
    let pre = factor((se.alpha - sa.alpha).sin(), ln_ - le, n)?;
    let term = |k: i64| -> Result<f64> {
        if k == n {
            return Ok(1.0);
        }
        factor(sa.lambda(k)? - ln_, se.lambda(k)? - ln_, k)
    };
    let mut prod = 1.0;
    if paired {
        prod *= term(0)?;
        for k in 1..=big_n {
            prod *= term(k)? * term(-k)?;
        }
    } else {
        for k in -big_n..=big_n {
            prod *= term(k)?;
        }
    }
    if input.tail == Tail::Lattice {
        let beta = sa.beta;
        let a = (beta - sa.alpha) / PI - ln_;
        let b = (beta - se.alpha) / PI - ln_;
        prod *= lattice_tail(big_n, a, b).exp();
    }
    let out = pre * prod;
    if !(out > 0.0) {
        return Err(Error::Input(format!("two-spectra formula gave non-positive a_{n} = {out}")));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylSample {
    pub lambda: Complex64,
    pub m_value: Complex64,
}

/// `m(λ) = (u₁(0)cos α + u₂(0)sin α)/(u₁(0)cos ε + u₂(0)sin ε)`, `u(b) = (sin β, −cos β)`.
pub fn weyl_m(
    pot: &PotentialMatrix,
    alpha: f64,
    eps: f64,
    beta: f64,
    lambda: Complex64,
    cfg: &SolverConfig,
) -> Result<WeylSample> {
    let st = Stepper::with_config(pot, cfg)?;
    let v = boundary_vector(beta);
    let u = st.backward_c(lambda, [Complex64::new(v[0], 0.0), Complex64::new(v[1], 0.0)])[0];
    let num = u[0] * alpha.cos() + u[1] * alpha.sin();
    let den = u[0] * eps.cos() + u[1] * eps.sin();
    let scale = u[0].norm().hypot(u[1].norm());
    if den.norm() < 1e-10 * scale {
        let prob = Problem::from_stepper(st, eps, beta)?;
        let k = prob.counting(lambda.re).round() as i64;
        let nearest = prob.eigenvalue(k, 1e-12)?;
        return Err(Error::Pole(nearest));
    }
    Ok(WeylSample { lambda, m_value: num / den })
}

/// Spectrum at the partner angle obtained by `λₖ(γ) = −λ₋ₖ₋ₛ(α)`.
fn reflected(spec: &SpectralData, gamma: f64, shift: i64) -> SpectralData {
    SpectralData::from_items(
        gamma,
        spec.beta,
        spec.items.values().map(|d| SpectralDatum::new(-d.n - shift, -d.lambda)),
    )
}

/// `aₙ(0, q, α, 0)` from the single spectrum of `L(0, q, α, 0)`, `0 < |α| < π/2`.
pub fn one_spectrum_norming_p0(spec: &SpectralData, n: i64, trunc: i64) -> Result<f64> {
    let alpha = spec.alpha;
    if alpha.abs() < 1e-14 || alpha.abs() >= FRAC_PI_2 - 1e-14 {
        return Err(Error::Inapplicable(format!("p = 0 formula needs 0 < |alpha| < pi/2, got {alpha}")));
    }
    if spec.beta.abs() > 1e-14 {
        return Err(Error::Inapplicable("p = 0 formula needs beta = 0".into()));
    }
    let input = TwoSpectraInput::new(spec.clone(), reflected(spec, -alpha, 0), trunc)?;
    norming_from_two_spectra(&input, n)
}

fn sign1(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `aₙ(p, 0, α, π/4)` from the single spectrum of `L(p, 0, α, π/4)`, `α ≠ ±π/4`.
pub fn one_spectrum_norming_q0(spec: &SpectralData, n: i64, trunc: i64) -> Result<f64> {
    let alpha = spec.alpha;
    if (alpha.abs() - FRAC_PI_4).abs() < 1e-14 {
        return Err(Error::Inapplicable(format!("q = 0 formula needs alpha != ±pi/4, got {alpha}")));
    }
    if (spec.beta - FRAC_PI_4).abs() > 1e-14 {
        return Err(Error::Inapplicable("q = 0 formula needs beta = pi/4".into()));
    }
    let (gamma, _) = reduce_angle(FRAC_PI_2 * sign1(alpha) - alpha);
    // σ₃φ carries the angles to (−π/2 − α, −π/2 − β); for α < 0 only β wraps
    // around by π, which moves the reflected numbering by one.
    let shift = if alpha < 0.0 { 1 } else { 0 };
    let trunc = if shift == 1 && !spec.covers(-trunc, trunc + 1) { trunc - 1 } else { trunc };
    let input = TwoSpectraInput::new(spec.clone(), reflected(spec, gamma, shift), trunc)?;
    norming_from_two_spectra(&input, n)
}

/// `max |λₙ − n − (β − α)/π|` over the data.
pub fn ambarzumyan_residual(spec: &SpectralData) -> f64 {
    let d = (spec.beta - spec.alpha) / PI;
    spec.items
        .values()
        .map(|x| (x.lambda - x.n as f64 - d).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_tail_matches_long_product() {
        let (a, b) = (0.37, -0.21);
        let mut direct = 0.0;
        for k in 51..2_000_000i64 {
            let k = k as f64;
            direct += ((k * k - a * a) / (k * k - b * b)).ln();
        }
        assert!((lattice_tail(50, a, b) - direct).abs() < 1e-7);
    }

    #[test]
    fn coincident_denominator_detected() {
        let a = SpectralData::lattice(0.0, 0.0, -3, 3);
        let mut e = SpectralData::lattice(0.5, 0.0, -3, 3);
        e.items.get_mut(&1).unwrap().lambda = a.lambda(0).unwrap();
        let input = TwoSpectraInput { spec_a: a, spec_e: e, trunc: 3, tail: Tail::None };
        assert!(matches!(norming_from_two_spectra(&input, 0), Err(Error::Coincident(1))));
    }
}

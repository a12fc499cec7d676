use std::f64::consts::{FRAC_PI_2, PI};

use dirac::eigen::{SpectralData, SpectralDatum};
use dirac::grid::{cumulative, Rule};
use dirac::halfaxis::*;
use dirac::{Error, Grid, PotentialMatrix};
use num_complex::Complex64;
use proptest::prelude::*;

const X_MAX: f64 = 12.0;

fn grid() -> Grid {
    Grid::new(0.0, X_MAX, HALF_M).unwrap()
}

fn bc0(n: i64) -> ModelSpectrum {
    ModelSpectrum::new(Flavor::HalfBc0, -n, n).unwrap()
}

fn model() -> HalfAxisProblem {
    HalfAxisProblem::model(X_MAX, HALF_M).unwrap()
}

/// Composite Simpson rule, independent of the library quadrature.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn hermite_values_and_orthogonality() {
    assert!((hermite_phi(0, 0.0) - PI.powf(-0.25)).abs() < 1e-15);
    let x: f64 = 1.3;
    let h2 = (4.0 * x * x - 2.0) * (-x * x / 2.0).exp() / (8.0 * PI.sqrt()).sqrt();
    assert!((hermite_phi(2, x) - h2).abs() < 1e-14);
    let i35 = simpson(|x| hermite_phi(3, x) * hermite_phi(5, x), -12.0, 12.0, 6000);
    assert!(i35.abs() < 1e-10);
}

#[test]
fn hermite_basis_gram_and_recurrence() {
    let b = HermiteBasis::new(40, Grid::new(-12.0, 12.0, 4800).unwrap());
    let g = b.gram();
    let mut err: f64 = 0.0;
    for i in 0..=40 {
        for j in 0..=40 {
            err = err.max((g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    assert!(err < 1e-10, "gram defect {err}");
    assert!(b.recurrence_residual() < 1e-12);
}

#[test]
fn whole_axis_eigenfunctions_solve_the_system() {
    // φₙ' = √(n/2)φₙ₋₁ − √((n+1)/2)φₙ₊₁
    let dphi = |n: usize, x: f64| {
        let h = hermite_all(n + 1, x);
        let lo = if n == 0 { 0.0 } else { (n as f64 / 2.0).sqrt() * h[n - 1] };
        lo - ((n as f64 + 1.0) / 2.0).sqrt() * h[n + 1]
    };
    let w = ModelSpectrum::new(Flavor::Whole, -20, 20).unwrap();
    let mut worst: f64 = 0.0;
    for n in -20i64..=20 {
        let l = w.lambda(n).unwrap();
        assert!((l - n.signum() as f64 * (2.0 * n.abs() as f64).sqrt()).abs() < 1e-15);
        let k = n.unsigned_abs() as usize;
        let s = if n < 0 { -1.0 } else { 1.0 };
        for i in 0..=80 {
            let x = -8.0 + 0.2 * i as f64;
            let u = w.eigenfunction(n, x).unwrap();
            let du = if n == 0 { [0.0, dphi(0, x)] } else { [s * dphi(k - 1, x), dphi(k, x)] };
            // B u' + Ω₀ u − λ u with B = ((0,1),(−1,0)), Ω₀ = ((0,x),(x,0))
            let r1 = du[1] + x * u[1] - l * u[0];
            let r2 = -du[0] + x * u[0] - l * u[1];
            worst = worst.max(r1.abs()).max(r2.abs());
        }
    }
    assert!(worst < 1e-8, "residual {worst}");
}

#[test]
fn half_bc0_closed_forms() {
    let m = bc0(3);
    assert!((m.lambda(1).unwrap() - 2.0).abs() < 1e-15);
    assert!((m.lambda(2).unwrap() - 8f64.sqrt()).abs() < 1e-15);
    assert!((m.lambda(-2).unwrap() + 8f64.sqrt()).abs() < 1e-15);
    assert!((m.a(0).unwrap() - PI.sqrt() / 2.0).abs() < 1e-15);
    assert!((m.a(1).unwrap() - 2.0 * PI.sqrt()).abs() < 1e-13);
    // aₖ = 4^k (k!)² √π/(2k)!
    assert!((m.a(3).unwrap() - 64.0 * 36.0 * PI.sqrt() / 720.0).abs() < 1e-12);
    assert_eq!(m.a(-3).unwrap(), m.a(3).unwrap());
    for n in -3..=3 {
        let v0 = m.eigenfunction(n, 0.0).unwrap();
        assert!(v0[0].abs() < 1e-15 && (v0[1] + 1.0).abs() < 1e-14);
        let q = simpson(
            |x| {
                let v = m.eigenfunction(n, x).unwrap();
                v[0] * v[0] + v[1] * v[1]
            },
            0.0,
            14.0,
            8000,
        );
        assert!((q - m.a(n).unwrap()).abs() < 1e-8, "n = {n}: {q}");
    }
}

#[test]
fn half_pi2_reindexed_and_interlaced() {
    let m = ModelSpectrum::new(Flavor::HalfBcPi2, -3, 3).unwrap();
    assert_eq!(m.index_shift, 1);
    assert!((m.lambda(0).unwrap() + 2f64.sqrt()).abs() < 1e-15);
    assert!((m.lambda(1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    let z = bc0(3);
    for n in -3..3 {
        assert!(m.lambda(n).unwrap() < z.lambda(n).unwrap() && z.lambda(n).unwrap() < m.lambda(n + 1).unwrap());
    }
    let v = m.eigenfunction(2, 0.0).unwrap();
    assert!((v[0] - 1.0).abs() < 1e-14 && v[1].abs() < 1e-14);
}

#[test]
fn shooting_reproduces_the_model() {
    let prob = model();
    let z = bc0(3);
    for n in -3..=3 {
        let l = prob.eigenvalue(n, 0.0, 1e-13).unwrap();
        assert!((l - z.lambda(n).unwrap()).abs() < 1e-6, "n = {n}: {l}");
        let a = prob.norming_constant(l, 0.0).unwrap();
        assert!((a - z.a(n).unwrap()).abs() < 1e-6 * z.a(n).unwrap(), "n = {n}: {a}");
    }
    let pi2 = ModelSpectrum::new(Flavor::HalfBcPi2, -2, 2).unwrap();
    for n in -2..=2 {
        let l = prob.eigenvalue(n, FRAC_PI_2, 1e-13).unwrap();
        assert!((l - pi2.lambda(n).unwrap()).abs() < 1e-6);
        let a = prob.norming_constant(l, FRAC_PI_2).unwrap();
        assert!((a - pi2.a(n).unwrap()).abs() < 1e-6 * pi2.a(n).unwrap());
    }
    let phi = prob.eigenfunction(2.0, 0.0).unwrap();
    let exact = z.trajectory(1, &grid()).unwrap();
    assert!(phi.max_abs_diff(&exact).unwrap() < 1e-6);
}

#[test]
fn remove_zero_matches_closed_form() {
    let g = grid();
    let plan = SurgeryPlan { remove: vec![0], ..Default::default() };
    let res = surgery(&bc0(3), &plan, &g).unwrap();
    let (p, q) = res.potential.sample(&g).unwrap();
    assert!(p.iter().all(|v| v.abs() < 1e-12));
    let mut worst: f64 = 0.0;
    for (i, x) in g.nodes().iter().enumerate() {
        let exact = remove_zero_closed_form(*x);
        worst = worst.max((q[i] - exact).abs() / (1.0 + exact.abs()));
    }
    assert!(worst < 1e-8, "q defect {worst}");
    assert!(res.det.iter().all(|d| *d > 0.0));
    assert!(!res.eigenfunctions.contains_key(&0));

    // Ṽₙ₂ = Vₙ₂ + e^{−x²/2}∫₀ˣe^{−s²/2}Vₙ₂ / (a₀ − ∫₀ˣe^{−s²})
    let z = bc0(3);
    let v1 = z.trajectory(1, &g).unwrap();
    let f: Vec<f64> = g.nodes().iter().zip(&v1.y2).map(|(x, v)| (-x * x / 2.0).exp() * v).collect();
    let num = cumulative(&f, g.h(), Rule::Trapezoid);
    let t1 = &res.eigenfunctions[&1];
    for (i, x) in g.nodes().iter().enumerate().step_by(64).filter(|(_, x)| **x <= 4.0) {
        let den = 0.5 * PI.sqrt() * libm::erfc(*x);
        let want = v1.y2[i] + (-x * x / 2.0).exp() * num[i] / den;
        assert!((t1.y1[i] - v1.y1[i]).abs() < 1e-12);
        assert!((t1.y2[i] - want).abs() < 1e-5, "x = {x}");
    }
}

#[test]
fn removal_deletes_exactly_one_eigenvalue() {
    let g = grid();
    let res = surgery(&bc0(3), &SurgeryPlan { remove: vec![0], ..Default::default() }, &g).unwrap();
    let prob = HalfAxisProblem::new(&res.potential, X_MAX, HALF_M).unwrap();
    let inner = prob.eigenvalues_in(0.0, -0.5, 0.5, 1e-12).unwrap();
    assert!(inner.is_empty(), "{inner:?}");
    let mut prev = prob.shooting_function(-0.5, 0.0).unwrap();
    for i in 1..=100 {
        let f = prob.shooting_function(-0.5 + 0.01 * i as f64, 0.0).unwrap();
        assert!(f.signum() == prev.signum());
        prev = f;
    }
    let found = prob.eigenvalues_in(0.0, -3.0, 3.0, 1e-12).unwrap();
    let want = [-8f64.sqrt(), -2.0, 2.0, 8f64.sqrt()];
    assert_eq!(found.len(), 4, "{found:?}");
    for (f, w) in found.iter().zip(want) {
        assert!((f - w).abs() < 1e-4, "{f} vs {w}");
    }
    // transformed eigenfunction is the eigenfunction of the new operator
    let phi = prob.eigenfunction(found[2], 0.0).unwrap();
    assert!(phi.max_abs_diff(&res.eigenfunctions[&1]).unwrap() < 1e-4);
}

#[test]
fn rescaling_keeps_spectrum_and_changes_one_constant() {
    let g = grid();
    let z = bc0(3);
    let b0 = z.a(0).unwrap() / 2.0;
    let plan = SurgeryPlan { rescale: vec![Rescaling { n: 0, b: b0 }], ..Default::default() };
    let res = surgery(&z, &plan, &g).unwrap();
    assert!(res.det.iter().all(|d| *d > 0.0));
    let prob = HalfAxisProblem::new(&res.potential, X_MAX, HALF_M).unwrap();
    let found = prob.eigenvalues_in(0.0, -3.0, 3.0, 1e-12).unwrap();
    assert_eq!(found.len(), 5);
    for (k, f) in found.iter().enumerate() {
        let n = k as i64 - 2;
        assert!((f - z.lambda(n).unwrap()).abs() < 1e-4);
        let a = prob.norming_constant(*f, 0.0).unwrap();
        let want = if n == 0 { b0 } else { z.a(n).unwrap() };
        assert!((a - want).abs() < 1e-3 * want, "n = {n}: {a} vs {want}");
    }
}

#[test]
fn empty_plan_is_identity() {
    let g = grid();
    let res = surgery(&bc0(2), &SurgeryPlan::default(), &g).unwrap();
    let (p, q) = res.potential.sample(&g).unwrap();
    for (i, x) in g.nodes().iter().enumerate() {
        assert_eq!(p[i], 0.0);
        assert_eq!(q[i], *x);
    }
    let none = general_finite_perturbation(&linear_potential(X_MAX), &[], &[], &g, &g).unwrap();
    assert_eq!(none.sample(&g).unwrap().1, q);
}

#[test]
fn added_eigenvalue_appears() {
    let g = grid();
    let plan = SurgeryPlan { add: vec![Addition { mu: 1.1, c: 1.0 }], ..Default::default() };
    let res = surgery(&bc0(3), &plan, &g).unwrap();
    let prob = HalfAxisProblem::new(&res.potential, X_MAX, HALF_M).unwrap();
    let found = prob.eigenvalues_in(0.0, 0.5, 1.5, 1e-12).unwrap();
    assert_eq!(found.len(), 1);
    assert!((found[0] - 1.1).abs() < 1e-4, "{found:?}");
    let a = prob.norming_constant(found[0], 0.0).unwrap();
    assert!((a - 1.0).abs() < 1e-3, "{a}");
    for l in [0.0, 2.0, 8f64.sqrt()] {
        let near = prob.eigenvalues_in(0.0, l - 0.05, l + 0.05, 1e-12).unwrap();
        assert!(near.len() == 1 && (near[0] - l).abs() < 1e-4);
    }
}

fn compare_paths(plan: SurgeryPlan, tol: f64) {
    let g = grid();
    let z = bc0(3);
    let a = surgery(&z, &plan, &g).unwrap().potential;
    let b = model_finite_perturbation(&z, &plan, &g).unwrap();
    let (p1, q1) = a.sample(&g).unwrap();
    let (p2, q2) = b.sample(&g).unwrap();
    let diff = |i: usize| (p1[i] - p2[i]).abs().max((q1[i] - q2[i]).abs());
    // the last stretch is dominated by quadrature of e^{x²}-sized integrands
    let inner = (0..g.len()).filter(|i| g.node(*i) <= X_MAX - 2.0).map(diff).fold(0.0, f64::max);
    let all = (0..g.len()).map(diff).fold(0.0, f64::max);
    assert!(inner < tol, "{plan:?}: {inner}");
    assert!(all < 1e-5, "{plan:?}: {all}");
}

#[test]
fn recurrent_path_matches_surgery() {
    compare_paths(SurgeryPlan { remove: vec![0], ..Default::default() }, 1e-8);
    compare_paths(SurgeryPlan { rescale: vec![Rescaling { n: 1, b: 3.0 }], ..Default::default() }, 1e-8);
    compare_paths(SurgeryPlan { add: vec![Addition { mu: 1.1, c: 1.0 }], ..Default::default() }, 1e-8);
    compare_paths(
        SurgeryPlan {
            remove: vec![0, 2],
            add: vec![Addition { mu: -0.7, c: 0.5 }],
            rescale: vec![Rescaling { n: -1, b: 1.5 }],
        },
        1e-8,
    );
}

#[test]
fn recurrent_update_identity_and_contract() {
    let g = grid();
    let z = bc0(1);
    let seed: Vec<[f64; 2]> = g.nodes().iter().map(|x| z.eigenfunction(1, *x).unwrap()).collect();
    let same = Update::Rescale { nu: 2.0, a: z.a(1).unwrap(), b: z.a(1).unwrap() };
    assert_eq!(same.gamma(), 0.0);
    let out = general_finite_perturbation(&linear_potential(X_MAX), &[same], &[seed.clone()], &g, &g).unwrap();
    let (p, q) = out.sample(&g).unwrap();
    assert!(p.iter().all(|v| v.abs() < 1e-15));
    assert!(g.nodes().iter().zip(&q).all(|(x, v)| (x - v).abs() < 1e-13));
    // removing more weight than the eigenvalue carries crosses zero
    let bad = Update::Remove { nu: 2.0, a: z.a(1).unwrap() / 2.0 };
    let r = general_finite_perturbation(&linear_potential(X_MAX), &[bad], &[seed], &g, &g);
    assert!(matches!(r, Err(Error::Contract(_))));
}

#[test]
fn plan_validation() {
    let z = bc0(2);
    let collide = SurgeryPlan { add: vec![Addition { mu: 2.0, c: 1.0 }], ..Default::default() };
    assert!(matches!(surgery(&z, &collide, &grid()), Err(Error::Input(_))));
    let twice = SurgeryPlan { remove: vec![1], rescale: vec![Rescaling { n: 1, b: 1.0 }], ..Default::default() };
    assert!(twice.validate().is_err());
    let outside = SurgeryPlan { remove: vec![7], ..Default::default() };
    assert!(outside.validate_against(&z).is_err());
    let neg = SurgeryPlan { rescale: vec![Rescaling { n: 0, b: -1.0 }], ..Default::default() };
    assert!(neg.validate().is_err());
    let dup = SurgeryPlan { add: vec![Addition { mu: 0.3, c: 1.0 }, Addition { mu: 0.3, c: 2.0 }], ..Default::default() };
    assert!(dup.validate().is_err());
}

#[test]
fn weyl_m0_limits() {
    let pot = linear_potential(X_MAX);
    let i = Complex64::new(0.0, 1.0);
    let up = weyl_m0(&pot, 0.0, 50.0, X_MAX).unwrap();
    let down = weyl_m0(&pot, 0.0, -50.0, X_MAX).unwrap();
    assert!((up - i).norm() < 0.05, "{up}");
    assert!((down + i).norm() < 0.05, "{down}");
    let errs: Vec<f64> = [10.0, 20.0, 40.0, 80.0].iter().map(|mu| (weyl_m0(&pot, 0.0, *mu, X_MAX).unwrap() - i).norm()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    let shifted = weyl_m0(&pot, 3.0, 50.0, X_MAX).unwrap();
    assert!((shifted - i).norm() < 0.1);
    let (al, be) = (0.3, 1.1);
    let m = weyl_m_from_m0(up, al, be);
    assert!((m - Complex64::from_polar(1.0, be - al)).norm() < 0.05);
    assert!(weyl_m0(&pot, 0.0, 0.0, X_MAX).is_err());
}

#[test]
fn weyl_m0_zero_of_real_axis_matches_shooting() {
    // just above the real axis m₀ ≈ u₁(0)/u₂(0) of the real decaying solution; zero at λ = 2
    let pot = linear_potential(X_MAX);
    let m = weyl_m0(&pot, 2.0, 1e-9, X_MAX).unwrap();
    assert!(m.norm() < 1e-6, "{m}");
}

#[test]
fn two_spectra_recover_model_constants() {
    let n = 400;
    let a = bc0(n).to_spectral_data();
    let b = ModelSpectrum::new(Flavor::HalfBcPi2, -n, n).unwrap().to_spectral_data();
    let exact = [PI.sqrt() / 2.0, 2.0 * PI.sqrt()];
    for k in 0..2 {
        let got = halfaxis_two_spectra_norming(&a, &b, k, n, 1e3).unwrap();
        assert!((got / exact[k as usize] - 1.0).abs() < 0.05, "a_{k} = {got}");
    }
    let raw = halfaxis_two_spectra_raw(&a, &b, 1, n, 1e3).unwrap();
    let got = halfaxis_two_spectra_norming(&a, &b, 1, n, 1e3).unwrap();
    assert!((got - exact[1]).abs() < (raw - exact[1]).abs());
}

#[test]
fn two_spectra_rejects_bad_input() {
    let a = bc0(20).to_spectral_data();
    let b = ModelSpectrum::new(Flavor::HalfBcPi2, -20, 20).unwrap().to_spectral_data();
    assert!(halfaxis_two_spectra_norming(&a, &a, 0, 20, 1e3).is_err());
    assert!(halfaxis_two_spectra_norming(&a, &b, 0, 30, 1e3).is_err());
    let mut swapped = b.clone();
    let l1 = swapped.items[&1].lambda;
    swapped.items.get_mut(&1).unwrap().lambda = a.items[&1].lambda + 0.1;
    assert!(swapped.items[&1].lambda != l1);
    assert!(halfaxis_two_spectra_raw(&a, &swapped, 0, 20, 1e3).is_err());
    let mut zero = SpectralData::new(0.0, 0.0);
    for n in -3..=3 {
        zero.items.insert(n, SpectralDatum::new(n, n as f64));
    }
    assert!(matches!(partner_spectrum(&zero, Symmetry::P0), Err(Error::Inapplicable(_))));
    let mut quarter = zero.clone();
    quarter.alpha = PI / 4.0;
    assert!(matches!(partner_spectrum(&quarter, Symmetry::Q0), Err(Error::Inapplicable(_))));
}

#[test]
fn one_spectrum_route_agrees_with_two_spectra() {
    let w = 40;
    let lmax = 2.0 * (w as f64).sqrt() + 1.0;
    let x = x_max_for(lmax);
    let prob = HalfAxisProblem::model(x, 8192).unwrap();
    let al = 0.5;
    let sa = prob.spectral_data(al, -w, w, 1e-12).unwrap();
    let sb = prob.spectral_data(-al, -w, w, 1e-12).unwrap();
    let partner = partner_spectrum(&sa, Symmetry::P0).unwrap();
    for n in -w + 1..w {
        let (x, y) = (partner.lambda(n).unwrap(), sb.lambda(n).unwrap());
        assert!((x - y).abs() < 1e-8, "n = {n}: {x} vs {y}");
    }
    let t = w - 4;
    for n in 0..2 {
        let two = halfaxis_two_spectra_norming(&sa, &sb, n, t, 1e3).unwrap();
        let one = halfaxis_one_spectrum_norming(&sa, Symmetry::P0, n, t, 1e3).unwrap();
        let direct = sa.a(n).unwrap();
        assert!((one / two - 1.0).abs() < 0.05, "n = {n}: {one} vs {two}");
        assert!((two / direct - 1.0).abs() < 0.05, "n = {n}: {two} vs {direct}");
    }
}

#[test]
fn halfaxis_evf_derivative_and_monotonicity() {
    let prob = model();
    let d = evf_halfaxis_derivative(&prob, 0.0, 1e-3).unwrap();
    assert!((d + 2.0 / PI.sqrt()).abs() < 1e-2, "{d}");
    let lam: Vec<f64> = (0..9).map(|i| prob.evf(-0.4 + 0.1 * i as f64, 1e-13).unwrap()).collect();
    assert!(lam.windows(2).all(|w| w[1] < w[0]));
    assert!(prob.evf(0.0, 1e-13).unwrap().abs() < 1e-6);
    // γ = π/2 − π is α = π/2 with n = 1
    assert!((prob.evf(FRAC_PI_2 - PI, 1e-13).unwrap() - 2f64.sqrt()).abs() < 1e-6);
    // interlacing λ₀(π/2) < λ₀(0) < λ₁(π/2) < λ₁(0)
    let seq = [
        prob.eigenvalue(0, FRAC_PI_2, 1e-13).unwrap(),
        prob.eigenvalue(0, 0.0, 1e-13).unwrap(),
        prob.eigenvalue(1, FRAC_PI_2, 1e-13).unwrap(),
        prob.eigenvalue(1, 0.0, 1e-13).unwrap(),
    ];
    let want = [-2f64.sqrt(), 0.0, 2f64.sqrt(), 2.0];
    for (s, w) in seq.iter().zip(want) {
        assert!((s - w).abs() < 1e-6);
    }
    assert!(evf_halfaxis_derivative(&prob, 0.0, 0.0).is_err());
}

#[test]
fn potential_must_start_at_zero() {
    let p = PotentialMatrix::custom("shifted", 1.0, 13.0, |x| (0.0, x));
    assert!(HalfAxisProblem::new(&p, 13.0, 512).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn partner_is_an_involution(start in -3.0f64..-0.1, gaps in proptest::collection::vec(0.2f64..2.0, 12), al in 0.1f64..1.4) {
        let mut l = start;
        let mut items = Vec::new();
        for (i, g) in gaps.iter().enumerate() {
            items.push(l);
            l += g;
            let _ = i;
        }
        let zero = items.iter().rposition(|v| *v <= 0.0).unwrap() as i64;
        let s = SpectralData::from_items(al, al, items.iter().enumerate().map(|(i, v)| SpectralDatum::new(i as i64 - zero, *v)));
        let back = partner_spectrum(&partner_spectrum(&s, Symmetry::P0).unwrap(), Symmetry::P0).unwrap();
        prop_assert_eq!(back.alpha, al);
        for (n, d) in &s.items {
            prop_assert_eq!(back.lambda(*n).unwrap(), d.lambda);
        }
    }

    #[test]
    fn rescaling_determinant_stays_positive(n in -2i64..=2, r in 0.2f64..5.0) {
        let z = bc0(2);
        let b = z.a(n).unwrap() * r;
        let res = surgery(&z, &SurgeryPlan { rescale: vec![Rescaling { n, b }], ..Default::default() }, &Grid::new(0.0, 10.0, 1024).unwrap()).unwrap();
        prop_assert!(res.det.iter().all(|d| *d > 0.0));
        prop_assert!(res.potential.check_finite().is_ok());
    }
}

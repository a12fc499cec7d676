//! Invariant suite behind `dirac check`, one entry per module property.

use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dirac::cauchy::{solve_cauchy, solve_terminal, wronskian, SolverConfig, Stepper};
use dirac::eigen::{eigen_gradient, eigenbasis, evf, expand, parseval_defect, Problem, SpectralData};
use dirac::glreconstruct::{reconstruct, sup_distance};
use dirac::grid::{cumulative, integrate, Rule};
use dirac::halfaxis::*;
use dirac::io;
use dirac::isospectral::*;
use dirac::twospectra::{norming_from_two_spectra, two_spectra_product, weyl_m, Tail, TwoSpectraInput};
use dirac::{inner_product, pauli_algebra_selftest, Grid, PotentialMatrix, Trajectory2};
use num_complex::Complex64;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: dirac::Error) -> String {
    e.to_string()
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn pauli() -> Check {
    ensure(pauli_algebra_selftest(), "multiplication table exact".into())
}

fn quadrature() -> Check {
    let f = |m: usize| {
        let g = Grid::new(0.0, 1.0, m).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|x| x * x + x).collect();
        (integrate(&v, g.h(), Rule::Trapezoid) - 5.0 / 6.0).abs()
    };
    let (e1, e2) = (f(1000), f(2000));
    ensure(e1 < 1e-6 && (e1 / e2 - 4.0).abs() < 0.1, format!("trapezoid error {e1:.1e}, ratio {:.3}", e1 / e2))
}

fn cumulative_c_monotone() -> Check {
    for pot in [PotentialMatrix::zero(), PotentialMatrix::sin_q(), PotentialMatrix::constant(-0.3, 2.0)] {
        let mut prev = -1.0;
        for i in 0..=64 {
            let c = pot.cumulative_c(PI * i as f64 / 64.0).map_err(err)?;
            if c < prev {
                return Err(format!("c decreases at node {i}"));
            }
            prev = c;
        }
    }
    Ok("nondecreasing on 3 potentials".into())
}

fn inner_product_positive() -> Check {
    let g = Grid::unit(256).unwrap();
    let f = Trajectory2::from_fn(g, |x| [x.sin(), x.cos() - 0.2]);
    let zero = Trajectory2::from_fn(g, |_| [0.0, 0.0]);
    let (a, z) = (inner_product(&f, &f).map_err(err)?, inner_product(&zero, &zero).map_err(err)?);
    ensure(a > 0.0 && z == 0.0, format!("<f,f> = {a:.3}, <0,0> = {z}"))
}

fn fourth_order() -> Check {
    let pot = PotentialMatrix::custom("smooth", 0.0, PI, |x| (x.cos(), 1.0 + x * x / 4.0));
    let end = |m| solve_cauchy(&pot, 2.1, 0.2, &SolverConfig { m }).unwrap().last();
    let r = end(4096);
    let e = |m| {
        let v = end(m);
        (v[0] - r[0]).hypot(v[1] - r[1])
    };
    let ratio = e(64) / e(128);
    ensure(ratio > 13.0 && ratio < 19.0, format!("error ratio on halving h: {ratio:.2}"))
}

fn terminal_round_trip() -> Check {
    let pot = PotentialMatrix::sin_q();
    let psi = solve_terminal(&pot, 2.5, 0.9, &cfg()).map_err(err)?;
    let st = Stepper::with_config(&pot, &cfg()).map_err(err)?;
    let end = *st.forward(2.5, psi.first()).last().unwrap();
    let d = (end[0] - 0.9f64.sin()).abs().max((end[1] + 0.9f64.cos()).abs());
    ensure(d < 1e-9, format!("terminal value reproduced to {d:.1e}"))
}

fn wronskian_constant() -> Check {
    let pot = PotentialMatrix::custom("bumpy", 0.0, PI, |x| ((3.0 * x).sin(), x.sin() + 0.5));
    let phi = solve_cauchy(&pot, 4.2, 0.3, &cfg()).map_err(err)?;
    let psi = solve_terminal(&pot, 4.2, -0.4, &cfg()).map_err(err)?;
    let d = wronskian(&phi, &psi).map_err(err)?.deviation;
    ensure(d < 1e-8, format!("deviation {d:.1e}"))
}

fn zero_lattice() -> Check {
    let mut worst: f64 = 0.0;
    for (a, b) in [(0.0, 0.0), (PI / 4.0, 0.0), (-0.3, 0.2)] {
        let s = Problem::new(&PotentialMatrix::zero(), a, b, &cfg()).map_err(err)?.eigenvalues(-50, 50, 1e-12).map_err(err)?;
        for d in s.items.values() {
            worst = worst.max((d.lambda - d.n as f64 - (b - a) / PI).abs());
        }
    }
    ensure(worst < 1e-10, format!("max error {worst:.1e}"))
}

fn interlacing() -> Check {
    let pot = PotentialMatrix::sin_q();
    let lo = Problem::new(&pot, 0.2, 0.0, &cfg()).map_err(err)?.eigenvalues(-10, 11, 1e-12).map_err(err)?;
    let hi = Problem::new(&pot, 1.1, 0.0, &cfg()).map_err(err)?.eigenvalues(-10, 10, 1e-12).map_err(err)?;
    let ok = (-10..=10).all(|n| hi.lambda(n).unwrap() < lo.lambda(n).unwrap() && lo.lambda(n).unwrap() < hi.lambda(n + 1).unwrap_or(f64::INFINITY));
    ensure(ok, "λn(β') < λn(α) < λn+1(β') for |n| <= 10".into())
}

fn gradient() -> Check {
    let eps = 1e-4;
    let sin = PotentialMatrix::sin_q();
    let eig = |a: f64| Problem::new(&sin, a, 0.0, &cfg()).unwrap().eigenvalue(1, 1e-14).unwrap();
    let g = eigen_gradient(&sin, 0.0, 0.0, 1, &cfg()).map_err(err)?;
    let fd = (eig(eps) - eig(-eps)) / (2.0 * eps);
    let rel = (g.d_alpha - fd).abs() / fd.abs();
    ensure(rel < 1e-5, format!("dλ1/dα relative deviation {rel:.1e}"))
}

fn orthonormality() -> Check {
    let prob = Problem::new(&PotentialMatrix::sin_q(), 0.0, 0.0, &cfg()).map_err(err)?;
    let basis = eigenbasis(&prob, -10, 10, 1e-13).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (i, (_, f)) in basis.iter().enumerate() {
        for (j, (_, g)) in basis.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner_product(f, g).map_err(err)? - want).abs());
        }
    }
    ensure(worst < 1e-6, format!("Gram defect {worst:.1e}"))
}

fn evf_monotone() -> Check {
    let sin = PotentialMatrix::sin_q();
    for m in -1..=1 {
        let vals: Vec<f64> = (0..50)
            .map(|i| evf(&sin, 0.0, PI * m as f64 - FRAC_PI_2 + PI * (i as f64 + 0.5) / 50.0, 1e-13, &cfg()).map(|e| e.value))
            .collect::<dirac::Result<_>>()
            .map_err(err)?;
        if !vals.windows(2).all(|w| w[1] < w[0]) {
            return Err(format!("not decreasing on interval m = {m}"));
        }
    }
    Ok("strictly decreasing on 3 intervals, 50 samples each".into())
}

fn parseval() -> Check {
    let prob = Problem::new(&PotentialMatrix::sin_q(), 0.0, 0.0, &SolverConfig { m: 4096 }).map_err(err)?;
    let f = Trajectory2::from_fn(*prob.stepper().grid(), |x| [x.sin().powi(2), x.cos() + 0.5 * x]);
    let basis = eigenbasis(&prob, -100, 100, 1e-12).map_err(err)?;
    let c = expand(&f, &basis).map_err(err)?;
    let d: Vec<f64> = [10, 50, 100].iter().map(|&n| parseval_defect(&f, &c, n)).collect();
    ensure(d[2] < 1e-2 && d.windows(2).all(|w| w[1] <= w[0]), format!("defects {:?}", d.iter().map(|v| format!("{v:.1e}")).collect::<Vec<_>>()))
}

fn two_spectra_rate() -> Check {
    let prob = Problem::new(&PotentialMatrix::sin_q(), 0.0, 0.0, &cfg()).map_err(err)?;
    let sa = prob.spectral_data(-200, 200, 1e-12).map_err(err)?;
    let se = prob.with_alpha(FRAC_PI_2).map_err(err)?.eigenvalues(-200, 200, 1e-12).map_err(err)?;
    let direct = sa.a(0).map_err(err)?;
    let e = |n: i64| -> Result<f64, String> {
        let input = TwoSpectraInput::new(sa.clone(), se.clone(), n).map_err(err)?.with_tail(Tail::None);
        Ok((norming_from_two_spectra(&input, 0).map_err(err)? - direct).abs())
    };
    let r = e(100)? / e(200)?;
    ensure(r > 1.7 && r < 2.3, format!("error ratio N = 100 to 200: {r:.2}"))
}

fn herglotz() -> Check {
    let pot = PotentialMatrix::sin_q();
    for mu in [-5.0, -0.1, 0.2, 3.0] {
        let m = weyl_m(&pot, 0.0, FRAC_PI_2, 0.0, Complex64::new(0.5, mu), &cfg()).map_err(err)?.m_value;
        if !(m.im * mu > 0.0) {
            return Err(format!("Im m · μ <= 0 at μ = {mu}"));
        }
    }
    Ok("Im m(ν + iμ)·μ > 0 on 4 samples".into())
}

fn pairing() -> Check {
    let input = TwoSpectraInput::new(SpectralData::lattice(0.0, 0.0, -400, 400), SpectralData::lattice(1.0, 0.0, -400, 400), 400)
        .map_err(err)?
        .with_tail(Tail::None);
    let d = (two_spectra_product(&input, 0, true).map_err(err)? - two_spectra_product(&input, 0, false).map_err(err)?).abs();
    ensure(d < 1e-6, format!("paired vs one-sided {d:.1e}"))
}

fn isospectral() -> Check {
    let base = IsoBase::new(&PotentialMatrix::sin_q(), 0.0, -10, 10, &cfg()).map_err(err)?;
    let r = shift_one(&base, 2, 0.7).map_err(err)?;
    let s = Problem::new(&r.omega_t, 0.0, 0.0, &cfg()).map_err(err)?.spectral_data(-10, 10, 1e-13).map_err(err)?;
    let (mut dl, mut da): (f64, f64) = (0.0, 0.0);
    for n in -10..=10 {
        dl = dl.max((s.lambda(n).unwrap() - base.lambda[&n]).abs());
        let want = base.norming[&n] * if n == 2 { (-0.7f64).exp() } else { 1.0 };
        da = da.max((s.a(n).unwrap() - want).abs());
    }
    let l1 = (l1_distance(&r.omega_t, &base.potential().map_err(err)?, &base.grid).map_err(err)? - 0.7).abs();
    ensure(dl < 1e-6 && da < 1e-6 && l1 < 1e-6, format!("|dλ| {dl:.1e}, |Δa| {da:.1e}, |L1 - t| {l1:.1e}"))
}

fn transformed_eigenfunctions() -> Check {
    let base = IsoBase::new(&PotentialMatrix::zero(), 0.0, -3, 3, &cfg()).map_err(err)?;
    let t = TSequence::new([(0, 0.3), (1, -0.2)]).map_err(err)?;
    let rec = shift_finite_recurrent(&base, &t).map_err(err)?;
    let exp = shift_finite_explicit(&base, &t).map_err(err)?;
    let g = base.grid;
    let (p1, q1) = rec.omega_t.sample(&g).map_err(err)?;
    let (p2, q2) = exp.omega_t.sample(&g).map_err(err)?;
    let d = (0..g.len()).map(|i| (p1[i] - p2[i]).abs().max((q1[i] - q2[i]).abs())).fold(0.0, f64::max);
    let unit = rec.eigenfunctions.values().map(|h| (h.norm_sq() - 1.0).abs()).fold(0.0, f64::max);
    ensure(d < 1e-8 && unit < 1e-8, format!("recurrent vs explicit {d:.1e}, norm defect {unit:.1e}"))
}

fn gl_round_trip() -> Check {
    let grid = Grid::unit(2048).unwrap();
    let rec = reconstruct(&SpectralData::lattice(0.0, 0.0, -20, 20), &grid, 20, 1e-6).map_err(err)?;
    let zero = sup_distance(&rec.potential, &PotentialMatrix::zero(), &grid, 0.0, PI).map_err(err)?;
    let mut data = SpectralData::lattice(0.0, 0.0, -20, 20);
    data.items.get_mut(&0).unwrap().a = Some(PI * 0.6f64.exp());
    let rec = reconstruct(&data, &grid, 20, 1e-6).map_err(err)?;
    let fam = sup_distance(&rec.potential, &zero_family(0, -0.6), &grid, 0.0, PI).map_err(err)?;
    ensure(zero < 1e-6 && fam < 1e-10, format!("lattice {zero:.1e}, rank-one family {fam:.1e}"))
}

fn hermite() -> Check {
    let b = HermiteBasis::new(40, Grid::new(-12.0, 12.0, 4800).unwrap());
    let g = b.gram();
    let mut worst: f64 = 0.0;
    for i in 0..=40 {
        for j in 0..=40 {
            worst = worst.max((g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    ensure(worst < 1e-10, format!("Gram defect {worst:.1e} up to n = 40"))
}

fn surgery_contract() -> Check {
    let g = Grid::new(0.0, 12.0, HALF_M).unwrap();
    let z = ModelSpectrum::new(Flavor::HalfBc0, -3, 3).map_err(err)?;
    let res = surgery(&z, &SurgeryPlan { remove: vec![0], ..Default::default() }, &g).map_err(err)?;
    let prob = HalfAxisProblem::new(&res.potential, 12.0, HALF_M).map_err(err)?;
    let inner = prob.eigenvalues_in(0.0, -0.5, 0.5, 1e-12).map_err(err)?;
    let found = prob.eigenvalues_in(0.0, 1.5, 3.0, 1e-12).map_err(err)?;
    let ok = inner.is_empty() && found.len() == 2 && (found[0] - 2.0).abs() < 1e-4 && (found[1] - 8f64.sqrt()).abs() < 1e-4;
    let a0 = z.a(0).map_err(err)?;
    let plan = SurgeryPlan { rescale: vec![Rescaling { n: 0, b: a0 / 2.0 }], ..Default::default() };
    let res = surgery(&z, &plan, &g).map_err(err)?;
    let prob = HalfAxisProblem::new(&res.potential, 12.0, HALF_M).map_err(err)?;
    let l = prob.eigenvalues_in(0.0, -3.0, 3.0, 1e-12).map_err(err)?;
    let same = l.len() == 5 && l.iter().zip(-2..=2).all(|(v, n)| (v - z.lambda(n).unwrap()).abs() < 1e-4);
    let a = prob.norming_constant(l[2], 0.0).map_err(err)?;
    let a1 = prob.norming_constant(l[3], 0.0).map_err(err)?;
    let targeted = (a - a0 / 2.0).abs() < 1e-3 && (a1 - z.a(1).unwrap()).abs() < 1e-3;
    ensure(ok && same && targeted, format!("removal {ok}, spectrum kept {same}, only a0 changed {targeted}"))
}

fn weyl_asymptotics() -> Check {
    let pot = linear_potential(12.0);
    let i = Complex64::new(0.0, 1.0);
    let errs: Vec<f64> = [10.0, 20.0, 40.0, 80.0]
        .iter()
        .map(|mu| weyl_m0(&pot, 0.0, *mu, 12.0).map(|m| (m - i).norm()))
        .collect::<dirac::Result<_>>()
        .map_err(err)?;
    ensure(errs.windows(2).all(|w| w[1] < w[0]), format!("errors {:?}", errs.iter().map(|v| format!("{v:.1e}")).collect::<Vec<_>>()))
}

fn recurrent_surgery() -> Check {
    let g = Grid::new(0.0, 12.0, HALF_M).unwrap();
    let z = ModelSpectrum::new(Flavor::HalfBc0, -3, 3).map_err(err)?;
    let plan = SurgeryPlan { rescale: vec![Rescaling { n: 1, b: 3.0 }], ..Default::default() };
    let (p1, q1) = surgery(&z, &plan, &g).map_err(err)?.potential.sample(&g).map_err(err)?;
    let (p2, q2) = model_finite_perturbation(&z, &plan, &g).map_err(err)?.sample(&g).map_err(err)?;
    let d = (0..g.len()).map(|i| (p1[i] - p2[i]).abs().max((q1[i] - q2[i]).abs())).fold(0.0, f64::max);
    ensure(d < 1e-8, format!("max discrepancy {d:.1e}"))
}

fn io_round_trip() -> Check {
    let s = SpectralData::lattice(0.3, -0.2, -10, 10);
    let ok_s = io::parse_spectral_json(&io::emit_spectral_json(&s)).map_err(err)? == s;
    let g = Grid::unit(64).unwrap();
    let pot = PotentialMatrix::sin_q();
    let text = io::emit_potential_csv(&pot, &g).map_err(err)?;
    let back = io::parse_potential_csv(&text).map_err(err)?;
    let ok_p = back.sample(&g).map_err(err)? == pot.sample(&g).map_err(err)?;
    let unsorted = r#"{"alpha":0,"beta":0,"items":[{"n":1,"lambda":1},{"n":0,"lambda":0}]}"#;
    let rejects = io::parse_spectral_json(unsorted).is_err();
    let t = cumulative(&[1.0, 1.0, 1.0], 0.5, Rule::Trapezoid);
    ensure(ok_s && ok_p && rejects && t[2] == 1.0, format!("spectral {ok_s}, potential {ok_p}, unsorted rejected {rejects}"))
}

/// Runs every check, printing one line each; returns `(passed, total)`.
pub fn run_all() -> (usize, usize) {
    let checks: &[(&str, fn() -> Check)] = &[
        ("pauli algebra", pauli),
        ("trapezoid second order", quadrature),
        ("cumulative c monotone", cumulative_c_monotone),
        ("inner product positive", inner_product_positive),
        ("integrator fourth order", fourth_order),
        ("terminal round trip", terminal_round_trip),
        ("wronskian constant", wronskian_constant),
        ("zero-potential lattice", zero_lattice),
        ("interlacing", interlacing),
        ("eigenvalue gradient", gradient),
        ("orthonormality", orthonormality),
        ("evf monotone", evf_monotone),
        ("parseval", parseval),
        ("two-spectra rate", two_spectra_rate),
        ("weyl herglotz sign", herglotz),
        ("principal-value pairing", pairing),
        ("isospectral shift", isospectral),
        ("recurrent vs explicit", transformed_eigenfunctions),
        ("gelfand-levitan round trip", gl_round_trip),
        ("hermite orthonormality", hermite),
        ("surgery contract", surgery_contract),
        ("weyl m0 asymptotics", weyl_asymptotics),
        ("recurrent vs surgery", recurrent_surgery),
        ("file round trips", io_round_trip),
    ];
    let mut passed = 0;
    for (name, f) in checks {
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match r {
            Ok(d) => {
                passed += 1;
                println!("PASS {name}: {d}");
            }
            Err(d) => println!("FAIL {name}: {d}"),
        }
    }
    (passed, checks.len())
}

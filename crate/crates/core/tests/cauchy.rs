use std::f64::consts::PI;

use dirac::cauchy::*;
use dirac::grid::{cumulative, Grid, Rule};
use dirac::{PotentialMatrix, Trajectory2};
use nalgebra::Matrix2;
use num_complex::Complex64;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn expm(a: Matrix2<f64>, x: f64) -> Matrix2<f64> {
    (a * x).exp()
}

#[test]
fn free_solution_is_a_rotation() {
    for (lambda, alpha) in [(2.7, 0.4), (-11.3, -1.0), (0.0, 0.0)] {
        let phi = solve_cauchy(&PotentialMatrix::zero(), lambda, alpha, &cfg()).unwrap();
        for (i, x) in phi.grid.nodes().into_iter().enumerate() {
            let th = lambda * x + alpha;
            assert!((phi.y1[i] - th.sin()).abs() < 1e-12);
            assert!((phi.y2[i] + th.cos()).abs() < 1e-12);
        }
    }
    let phi = solve_cauchy(&PotentialMatrix::zero(), 0.0, 0.0, &cfg()).unwrap();
    assert!(phi.y1.iter().all(|v| v.abs() < 1e-15));
    assert!(phi.y2.iter().all(|v| (v + 1.0).abs() < 1e-15));
}

#[test]
fn constant_potential_matches_matrix_exponential() {
    let (p0, q0) = (0.0, 1.7);
    let pot = PotentialMatrix::constant(p0, q0);
    for lambda in [0.0, 0.8, 4.5] {
        let a = Matrix2::new(q0, -(p0 + lambda), lambda - p0, -q0);
        let phi = solve_cauchy(&pot, lambda, 0.0, &cfg()).unwrap();
        let psi = solve_terminal(&pot, lambda, 0.3, &cfg()).unwrap();
        let v0 = nalgebra::Vector2::new(0.0, -1.0);
        let vb = nalgebra::Vector2::new(0.3f64.sin(), -0.3f64.cos());
        for (i, x) in phi.grid.nodes().into_iter().enumerate().step_by(97) {
            let e = expm(a, x) * v0;
            assert!((phi.y1[i] - e[0]).abs() < 1e-11 * (1.0 + e.norm()));
            assert!((phi.y2[i] - e[1]).abs() < 1e-11 * (1.0 + e.norm()));
            let t = expm(a, x - PI) * vb;
            assert!((psi.y1[i] - t[0]).abs() < 1e-11 * (1.0 + t.norm()));
            assert!((psi.y2[i] - t[1]).abs() < 1e-11 * (1.0 + t.norm()));
        }
    }
}

#[test]
fn free_terminal_solution() {
    let (lambda, beta) = (3.3, -0.7);
    let psi = solve_terminal(&PotentialMatrix::zero(), lambda, beta, &cfg()).unwrap();
    for (i, x) in psi.grid.nodes().into_iter().enumerate() {
        let th = lambda * (x - PI) + beta;
        assert!((psi.y1[i] - th.sin()).abs() < 1e-12);
        assert!((psi.y2[i] + th.cos()).abs() < 1e-12);
    }
    let psi = solve_terminal(&PotentialMatrix::zero(), 0.0, 0.0, &cfg()).unwrap();
    assert!(psi.y2.iter().all(|v| (v + 1.0).abs() < 1e-15));
}

/// Successive approximations `y_{k+1}(x) = y₀ + ∫₀ˣ A(s) y_k(s) ds`.
fn picard(p: impl Fn(f64) -> f64, q: impl Fn(f64) -> f64, lambda: f64, alpha: f64, m: usize) -> Trajectory2 {
    let g = Grid::unit(m).unwrap();
    let xs = g.nodes();
    let y0 = [alpha.sin(), -alpha.cos()];
    let mut y1 = vec![y0[0]; xs.len()];
    let mut y2 = vec![y0[1]; xs.len()];
    for _ in 0..80 {
        let f1: Vec<f64> = (0..xs.len())
            .map(|i| q(xs[i]) * y1[i] - (p(xs[i]) + lambda) * y2[i])
            .collect();
        let f2: Vec<f64> = (0..xs.len())
            .map(|i| (lambda - p(xs[i])) * y1[i] - q(xs[i]) * y2[i])
            .collect();
        let c1 = cumulative(&f1, g.h(), Rule::Cubic);
        let c2 = cumulative(&f2, g.h(), Rule::Cubic);
        y1 = c1.iter().map(|c| y0[0] + c).collect();
        y2 = c2.iter().map(|c| y0[1] + c).collect();
    }
    Trajectory2::new(g, y1, y2).unwrap()
}

#[test]
fn agrees_with_picard_iteration() {
    let pot = PotentialMatrix::custom("picard", 0.0, PI, |x| (0.5 * (2.0 * x).cos(), x.sin()));
    let oracle = picard(|x| 0.5 * (2.0 * x).cos(), f64::sin, 1.3, 0.5, 4096);
    let phi = solve_cauchy(&pot, 1.3, 0.5, &SolverConfig { m: 4096 }).unwrap();
    assert!(phi.max_abs_diff(&oracle).unwrap() < 1e-9);
}

#[test]
fn global_error_is_fourth_order() {
    let pot = PotentialMatrix::custom("smooth", 0.0, PI, |x| (x.cos(), 1.0 + x * x / 4.0));
    let end = |m| solve_cauchy(&pot, 2.1, 0.2, &SolverConfig { m }).unwrap().last();
    let r = end(4096);
    let e1 = (end(64)[0] - r[0]).hypot(end(64)[1] - r[1]);
    let e2 = (end(128)[0] - r[0]).hypot(end(128)[1] - r[1]);
    let ratio = e1 / e2;
    assert!(ratio > 13.0 && ratio < 19.0, "ratio {ratio}");
}

#[test]
fn terminal_then_forward_returns_to_terminal_value() {
    let pot = PotentialMatrix::sin_q();
    let psi = solve_terminal(&pot, 2.5, 0.9, &cfg()).unwrap();
    let st = Stepper::with_config(&pot, &cfg()).unwrap();
    let back = st.forward(2.5, psi.first());
    let end = back[back.len() - 1];
    assert!((end[0] - 0.9f64.sin()).abs() < 1e-9);
    assert!((end[1] + 0.9f64.cos()).abs() < 1e-9);
}

#[test]
fn real_and_complex_paths_agree() {
    let pot = PotentialMatrix::custom("mix", 0.0, PI, |x| (0.3 - x.cos(), x.sin()));
    for lambda in [-7.0, 0.0, 0.01, 3.9] {
        let r = solve_cauchy(&pot, lambda, 0.7, &cfg()).unwrap();
        let c = solve_cauchy_c(&pot, Complex64::new(lambda, 0.0), 0.7, &cfg()).unwrap();
        for i in 0..r.grid.len() {
            assert!((c.y1[i] - r.y1[i]).norm() < 1e-12);
            assert!((c.y2[i] - r.y2[i]).norm() < 1e-12);
        }
    }
}

#[test]
fn sampled_potential_tracks_closed_form() {
    let g = Grid::unit(2048).unwrap();
    let sampled = PotentialMatrix::sin_q().to_sampled(&g).unwrap();
    let a = solve_cauchy(&sampled, 1.9, 0.1, &cfg()).unwrap();
    let b = solve_cauchy(&PotentialMatrix::sin_q(), 1.9, 0.1, &cfg()).unwrap();
    assert!(a.max_abs_diff(&b).unwrap() < 1e-10);
}

#[test]
fn fundamental_matrix_properties() {
    let lambda = 1.3;
    let fm = fundamental_matrix(&PotentialMatrix::zero(), Complex64::new(lambda, 0.0), &cfg()).unwrap();
    let id = fm.at(0);
    assert_eq!(id[0][0], Complex64::new(1.0, 0.0));
    assert_eq!(id[0][1], Complex64::new(0.0, 0.0));
    for (i, x) in fm.grid.nodes().into_iter().enumerate() {
        // E cos λx − B sin λx
        let (c, s) = ((lambda * x).cos(), (lambda * x).sin());
        let m = fm.at(i);
        assert!((m[0][0].re - c).abs() < 1e-12 && (m[1][1].re - c).abs() < 1e-12);
        assert!((m[0][1].re + s).abs() < 1e-12 && (m[1][0].re - s).abs() < 1e-12);
    }
    let fm = fundamental_matrix(&PotentialMatrix::sin_q(), Complex64::new(1.3, 0.0), &cfg()).unwrap();
    assert!((fm.det(fm.grid.m()) - 1.0).norm() < 1e-8);
    let fm = fundamental_matrix(&PotentialMatrix::sin_q(), Complex64::new(1.3, 2.0), &cfg()).unwrap();
    assert!(fm.det_defect() < 1e-8);
}

#[test]
fn wronskian_examples() {
    let (lambda, alpha, beta) = (1.7, 0.3, -0.4);
    let zero = PotentialMatrix::zero();
    let phi = solve_cauchy(&zero, lambda, alpha, &cfg()).unwrap();
    let psi = solve_terminal(&zero, lambda, beta, &cfg()).unwrap();
    let w = wronskian(&phi, &psi).unwrap();
    let expect = -(lambda * PI + alpha - beta).sin();
    assert!(w.values.iter().all(|v| (v - expect).abs() < 1e-12));
    assert!(wronskian(&phi, &phi).unwrap().values.iter().all(|v| v.abs() < 1e-15));

    let pot = PotentialMatrix::custom("bumpy", 0.0, PI, |x| ((3.0 * x).sin(), x.sin() + 0.5));
    let phi = solve_cauchy(&pot, 4.2, alpha, &cfg()).unwrap();
    let psi = solve_terminal(&pot, 4.2, beta, &cfg()).unwrap();
    assert!(wronskian(&phi, &psi).unwrap().deviation < 1e-8);

    let phi = solve_cauchy_c(&pot, Complex64::new(4.2, 1.0), alpha, &cfg()).unwrap();
    let psi = solve_terminal_c(&pot, Complex64::new(4.2, 1.0), beta, &cfg()).unwrap();
    assert!(wronskian_c(&phi, &psi).unwrap().deviation < 1e-8);
}

#[test]
fn wronskian_rejects_grid_mismatch() {
    let a = solve_cauchy(&PotentialMatrix::zero(), 1.0, 0.0, &SolverConfig { m: 128 }).unwrap();
    let b = solve_cauchy(&PotentialMatrix::zero(), 1.0, 0.0, &SolverConfig { m: 256 }).unwrap();
    assert!(wronskian(&a, &b).is_err());
}

//! 2×2 matrices over the Pauli basis used by the canonical system.
//!
//! Conventions: `σ₁ = ((0, i), (−i, 0))`, `σ₂ = diag(1, −1)`, `σ₃ = ((0, 1), (1, 0))`,
//! `B = σ₁/i = ((0, 1), (−1, 0))`, `Ω = p·σ₂ + q·σ₃`.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);
    pub const E: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const B: Mat2 = Mat2([[0.0, 1.0], [-1.0, 0.0]]);
    pub const SIGMA2: Mat2 = Mat2([[1.0, 0.0], [0.0, -1.0]]);
    pub const SIGMA3: Mat2 = Mat2([[0.0, 1.0], [1.0, 0.0]]);

    /// Potential matrix `p·σ₂ + q·σ₃`.
    pub fn omega(p: f64, q: f64) -> Mat2 {
        Mat2([[p, q], [q, -p]])
    }

    /// Inverse of [`Mat2::omega`] for a symmetric trace-free matrix.
    pub fn pq(&self) -> (f64, f64) {
        (0.5 * (self.0[0][0] - self.0[1][1]), 0.5 * (self.0[0][1] + self.0[1][0]))
    }

    pub fn outer(u: [f64; 2], v: [f64; 2]) -> Mat2 {
        Mat2([[u[0] * v[0], u[0] * v[1]], [u[1] * v[0], u[1] * v[1]]])
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let m = self.0;
        Mat2([[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]])
    }

    pub fn transpose(&self) -> Mat2 {
        let m = self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn commutator(&self, other: &Mat2) -> Mat2 {
        *self * *other - *other * *self
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// `K·B − B·K`, the potential increment carried by a transformation kernel diagonal.
    pub fn kb_minus_bk(&self) -> Mat2 {
        *self * Mat2::B - Mat2::B * *self
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(c)
    }
}

/// Gaussian integers, enough to check the algebra exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Gi(i64, i64);

impl Gi {
    fn add(self, o: Gi) -> Gi {
        Gi(self.0 + o.0, self.1 + o.1)
    }
    fn mul(self, o: Gi) -> Gi {
        Gi(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
}

type GMat = [[Gi; 2]; 2];

fn gmul(a: GMat, b: GMat) -> GMat {
    let mut c = [[Gi(0, 0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0].mul(b[0][j]).add(a[i][1].mul(b[1][j]));
        }
    }
    c
}

fn gadd(a: GMat, b: GMat) -> GMat {
    let mut c = a;
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][j].add(b[i][j]);
        }
    }
    c
}

fn gneg(a: GMat) -> GMat {
    gmul([[Gi(-1, 0), Gi(0, 0)], [Gi(0, 0), Gi(-1, 0)]], a)
}

/// Checks the multiplication table of `σ₁, σ₂, σ₃, B` in exact arithmetic.
pub fn pauli_algebra_selftest() -> bool {
    let z = Gi(0, 0);
    let one = Gi(1, 0);
    let e: GMat = [[one, z], [z, one]];
    let zero: GMat = [[z, z], [z, z]];
    let s1: GMat = [[z, Gi(0, 1)], [Gi(0, -1), z]];
    let s2: GMat = [[one, z], [z, Gi(-1, 0)]];
    let s3: GMat = [[z, one], [one, z]];
    let b: GMat = [[z, one], [Gi(-1, 0), z]];
    let sig = [s1, s2, s3];

    let mut ok = true;
    for s in sig {
        ok &= gmul(s, s) == e;
    }
    for k in 0..3 {
        for j in 0..3 {
            if k != j {
                ok &= gadd(gmul(sig[k], sig[j]), gmul(sig[j], sig[k])) == zero;
            }
        }
    }
    // B = σ₁/i, i.e. i·B = σ₁
    ok &= gmul([[Gi(0, 1), z], [z, Gi(0, 1)]], b) == s1;
    ok &= gmul(b, b) == gneg(e);
    ok &= gmul(s2, b) == s3;
    ok &= gmul(s3, b) == gneg(s2);
    ok
}

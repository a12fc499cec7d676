//! Linear systems with a finite-rank kernel, `gₖ + wₖ Σᵢ Iᵢₖ gᵢ = −wₖ fₖ`,
//! solved independently at every grid node.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest system solved by determinant ratios.
pub const CRAMER_MAX: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Cramer's rule for small systems, an LU solve otherwise.
    #[default]
    Auto,
    Cramer,
    Lu,
}

/// Solution at one node together with `det(δᵢₖ + wₖ Iᵢₖ)`.
#[derive(Debug, Clone)]
pub struct NodeSolution {
    pub g: Vec<[f64; 2]>,
    pub det: f64,
}

/// `ints[(i, k)] = Iᵢₖ`, `f[k]` the two-component right-hand side.
pub fn solve_node(w: &[f64], ints: &DMatrix<f64>, f: &[[f64; 2]], method: Method, x: f64) -> Result<NodeSolution> {
    let n = w.len();
    if ints.nrows() != n || ints.ncols() != n || f.len() != n {
        return Err(Error::Shape(format!("degenerate system of size {n} with {}x{} integrals", ints.nrows(), ints.ncols())));
    }
    if n == 0 {
        return Ok(NodeSolution { g: Vec::new(), det: 1.0 });
    }
    let m = DMatrix::from_fn(n, n, |k, i| if i == k { 1.0 } else { 0.0 } + w[k] * ints[(i, k)]);
    let rhs = DMatrix::from_fn(n, 2, |k, p| -w[k] * f[k][p]);
    let cramer = match method {
        Method::Auto => n <= CRAMER_MAX,
        Method::Cramer => true,
        Method::Lu => false,
    };
    let lu = m.clone().lu();
    let det = lu.determinant();
    if !(det.abs() >= 1e-12) {
        return Err(Error::Singular(x));
    }
    let mut g = vec![[0.0; 2]; n];
    if cramer {
        for i in 0..n {
            for p in 0..2 {
                let mut mi = m.clone();
                mi.set_column(i, &DVector::from_fn(n, |k, _| rhs[(k, p)]));
                g[i][p] = mi.lu().determinant() / det;
            }
        }
    } else {
        let sol = lu.solve(&rhs).ok_or(Error::Singular(x))?;
        for (i, gi) in g.iter_mut().enumerate() {
            *gi = [sol[(i, 0)], sol[(i, 1)]];
        }
    }
    Ok(NodeSolution { g, det })
}

//! Direct and inverse spectral problems for the canonical Dirac system
//! `B y' + Ω(x) y = λ y` with `Ω = p·σ₂ + q·σ₃`.

pub mod cauchy;
pub mod degenerate;
pub mod eigen;
pub mod error;
pub mod glreconstruct;
pub mod grid;
pub mod halfaxis;
pub mod io;
pub mod isospectral;
pub mod pauli;
pub mod potential;
pub mod roots;
pub mod traj;
pub mod twospectra;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, Rule};
pub use pauli::{pauli_algebra_selftest, Mat2};
pub use potential::{BoundaryAngles, PotentialMatrix, Shape};
pub use traj::{inner_product, CTrajectory2, Trajectory2};

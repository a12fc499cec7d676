use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("x = {x} lies outside the domain [{a}, {b}]")]
    Domain { x: f64, a: f64, b: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite potential sample at x = {0}")]
    NonFinite(f64),
    #[error("no sign change of the characteristic function found for n = {0}")]
    Bracket(i64),
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("degenerate normalization for n = {0}")]
    Degenerate(i64),
    #[error("coincident spectra at n = {0}")]
    Coincident(i64),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("lambda = {0} is within tolerance of a pole")]
    Pole(f64),
    #[error("singular system at x = {0}")]
    Singular(f64),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("inconsistent spectral data at (n, m) = ({0}, {1})")]
    Inconsistent(i64, i64),
    #[error("not applicable: {0}")]
    Inapplicable(String),
    #[error("log-domain error: |phi(pi)| vanishes for n = {0}")]
    LogDomain(i64),
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

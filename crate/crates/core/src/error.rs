use thiserror::Error;

/// Errors raised by geometric and chart operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("tangent vectors are based at different points")]
    BaseMismatch,
    #[error("points are on the cut locus (distance {distance})")]
    CutLocus { distance: f64 },
    #[error("invalid ambient space: {0}")]
    InvalidAmbient(String),
    #[error("invalid grid size {0}: must be even and at least 16")]
    InvalidGrid(usize),
    #[error("curve shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("curve is not an embedding (min speed {min_speed:.3e}, separation {separation:.3e})")]
    NotEmbedding { min_speed: f64, separation: f64 },
    #[error("normal frame construction failed at node {0}")]
    DegenerateFrame(usize),
    #[error("section norm {norm:.6e} is outside the chart domain (rho = {rho:.6e})")]
    OutsideDomain { norm: f64, rho: f64 },
    #[error("curve leaves the tubular neighborhood (distance {distance:.6e}, rho = {rho:.6e})")]
    OutsideTube { distance: f64, rho: f64 },
    #[error("normal projection failed to converge at node {0}")]
    ProjectionFailed(usize),
    #[error("fiber assignment is not monotone at node {0}")]
    NonMonotone(usize),
    #[error("reparameterization is invalid: {0}")]
    InvalidReparam(String),
    #[error("functional term is not supported on this ambient space: {0}")]
    UnsupportedAmbient(String),
    #[error("line search failed to find an Armijo step at iteration {0}")]
    LineSearchFailed(usize),
    #[error("re-centered curve is not an embedding at iteration {0}")]
    ChartBreakdown(usize),
    #[error("Newton system is singular beyond the kernel regularization")]
    SingularSystem,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

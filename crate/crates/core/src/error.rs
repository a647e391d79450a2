use thiserror::Error;

use crate::solver::SolveError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {0:?} lies outside the effective domain of the energy")]
    OutsideDomain(Vec<f64>),

    #[error("Frechet subdifferential is empty at {0:?}")]
    EmptySubdifferential(Vec<f64>),

    #[error("conditioned subdifferential is empty (Fenchel certificate {certificate:.3e})")]
    Infeasible { certificate: f64 },

    #[error("{0} needs a radially differentiable potential")]
    NotRadiallyDifferentiable(&'static str),

    #[error("conjugate is infinite at {0}")]
    InfiniteConjugate(f64),

    #[error("energy is not lambda-convex with positive modulus")]
    NotUniformlyConvex,

    #[error("search window is unbounded: neither the dissipation nor the energy is coercive")]
    NonCoercive,

    #[error("trace inconsistency: {0}")]
    Trace(String),

    #[error(transparent)]
    Solve(#[from] SolveError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

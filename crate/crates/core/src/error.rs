use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least {min}, got {got}")]
    Dimension { min: usize, got: usize },

    #[error("point has {got} coordinates, space expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("need at least {min} points/nodes, got {got}")]
    TooFew { min: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("(z={z}, theta={theta}) lies outside the integration domain z >= (2 cos theta)_+")]
    OutsideDomain { z: f64, theta: f64 },

    #[error("quadrature did not reach tolerance {tol:e} within {budget} evaluations (estimate {estimate:e})")]
    NoConvergence {
        tol: f64,
        budget: usize,
        estimate: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

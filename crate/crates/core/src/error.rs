use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("homodyne readout is blind to the signal (|H.R| = {0:e})")]
    SignalNull(f64),
    #[error("rotation fit residual {residual:e} exceeds {limit:e}; tan(theta) is not rational of degree {degree}")]
    ResidualExceeded { residual: f64, limit: f64, degree: usize },
    #[error("companion matrix ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("no root with positive bandwidth")]
    NoPositiveRoot,
    #[error("fit did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged { iterations: usize, gradient_norm: f64, best: Box<crate::coupled_equivalence::CoupledCavitySpec> },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            Error::NoSolution(_) | Error::NoPositiveRoot => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

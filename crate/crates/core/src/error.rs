use thiserror::Error;

use crate::fan::ValidationReport;

#[derive(Debug, Error)]
pub enum ToricError {
    #[error("input error: {0}")]
    Input(String),
    #[error("invalid fan: {0}")]
    InvalidFan(ValidationReport),
    #[error("not a polarization: {0}")]
    NotAPolarization(String),
    #[error("divisibility error: m = {m} does not clear the denominator of a_{ray} = {coeff}")]
    Divisibility { m: u64, ray: usize, coeff: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("trivial polarization: every ray has vanishing expected order")]
    TrivialPolarization,
    #[error("decomposition error: {0}")]
    Decomposition(String),
    #[error("no soliton vector: {0}")]
    NoSolitonVector(String),
    #[error("nonconvergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        trace: Vec<(usize, f64)>,
    },
    #[error("rank error: {0}")]
    Rank(String),
}

impl ToricError {
    /// True for errors that stem from rejected input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            ToricError::Input(_)
                | ToricError::InvalidFan(_)
                | ToricError::NotAPolarization(_)
                | ToricError::Divisibility { .. }
                | ToricError::Decomposition(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, ToricError>;

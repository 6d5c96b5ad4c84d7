use deltam_core::ToricError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BergmanError {
    #[error(transparent)]
    Toric(#[from] ToricError),
    #[error("quadrature reached relative error {achieved:e}, wanted {tol:e}")]
    Quadrature { achieved: f64, tol: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("slope indeterminate: {0}")]
    Indeterminate(String),
    #[error("inconclusive classification: {detail}")]
    Inconclusive {
        detail: String,
        trace: Vec<(f64, String)>,
    },
}

impl BergmanError {
    /// True for failures of numerical procedures rather than of the input.
    pub fn is_numeric(&self) -> bool {
        match self {
            BergmanError::Toric(e) => !e.is_validation(),
            BergmanError::Domain(_) | BergmanError::Unsupported(_) => false,
            _ => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, BergmanError>;

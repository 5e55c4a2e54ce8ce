use thiserror::Error;

/// A single violated parameter bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub name: &'static str,
    pub value: f64,
    pub constraint: &'static str,
}

impl std::fmt::Display for BoundViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} = {} violates {}", self.name, self.value, self.constraint)
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameters: {}", join(.0))]
    InvalidParams(Vec<BoundViolation>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("value iteration did not converge after {iterations} sweeps (last sweep delta {last_delta:e} > tolerance {tolerance:e})")]
    NonConvergence {
        iterations: usize,
        last_delta: f64,
        tolerance: f64,
    },

    #[error("{value} outside range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
}

impl ModelError {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            ModelError::InvalidParams(_) => "invalid_params",
            ModelError::Domain(_) => "domain",
            ModelError::Numerical(_) => "numerical",
            ModelError::NonConvergence { .. } => "non_convergence",
            ModelError::OutOfRange { .. } => "out_of_range",
        }
    }
}

fn join(v: &[BoundViolation]) -> String {
    v.iter().map(|b| b.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, ModelError>;

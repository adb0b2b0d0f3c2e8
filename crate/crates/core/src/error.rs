use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T> = std::result::Result<T, CssError>;

#[derive(Debug, Error)]
pub enum CssError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error: expected {expected} values, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("fiber root not bracketed in [{lo:e}, {hi:e}]")]
    FiberNotBracketed { lo: f64, hi: f64 },

    #[error("no tail: field vanishes on the tail window [{r_lo}, {r_hi}]")]
    NoTail { r_lo: f64, r_hi: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Box<SolveReport>,
    },

    #[error("continuation failed at eps = {eps:e}: {source}")]
    Continuation {
        eps: f64,
        #[source]
        source: Box<CssError>,
    },
}

impl CssError {
    /// Best iterate carried by a non-convergence error, looking through
    /// continuation wrappers.
    pub fn best_iterate(&self) -> Option<&SolveReport> {
        match self {
            CssError::NonConvergence { best, .. } => Some(best),
            CssError::Continuation { source, .. } => source.best_iterate(),
            _ => None,
        }
    }
}

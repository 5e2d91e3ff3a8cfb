use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain an operation is defined on.
    #[error("domain error: {name} = {value} ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// The truncated Fock space lost more norm than the oracle tolerates.
    #[error(
        "precision error: truncated norm deficit {deficit:.3e} at cutoff {cutoff}, try cutoff >= {suggested_cutoff}"
    )]
    Precision {
        deficit: f64,
        cutoff: usize,
        suggested_cutoff: usize,
    },

    #[error("numerical failure: {0}")]
    Computation(String),

    /// Local search ran out of iterations. Carries the best iterate found.
    #[error("solver did not converge after {iterations} iterations (best objective {best_value:.6e})")]
    NotConverged {
        iterations: usize,
        best_value: f64,
        best_point: Vec<f64>,
    },

    #[error("fit failed: {message} (residual {residual:.3e})")]
    Fit { message: String, residual: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    lo_inclusive: bool,
    hi_inclusive: bool,
    expected: &'static str,
) -> Result<()> {
    let lo_ok = if lo_inclusive { value >= lo } else { value > lo };
    let hi_ok = if hi_inclusive { value <= hi } else { value < hi };
    if value.is_finite() && lo_ok && hi_ok {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}

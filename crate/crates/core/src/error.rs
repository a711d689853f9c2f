use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what}: argument {value} outside the domain ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("{what}: argument {value} would overflow (limit {limit})")]
    Overflow {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid contour: {0}")]
    Contour(String),

    #[error("distance profile: {0}")]
    Profile(String),

    #[error("meshing failed: {0}")]
    Mesh(String),

    /// The shifted pencil `K - sigma M` was not positive definite.
    #[error("factorization of K - ({shift}) M failed: shift is inside the spectrum")]
    IndefiniteShift { shift: f64 },

    #[error("invalid parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

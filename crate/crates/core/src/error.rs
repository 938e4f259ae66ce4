use thiserror::Error;

/// Errors raised by the scattering, reconstruction and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Green's function evaluated at zero separation")]
    Singularity,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("step size degenerate at iteration {iteration}: |Ag| = 0 with |g| > 0")]
    StepDegeneracy { iteration: usize },

    #[error("resonance degeneracy in radial coefficients at order {order}")]
    ResonanceDegeneracy { order: i64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("reference has zero norm")]
    UndefinedReference,

    #[error("Rytov transform: incident field vanishes at sensor {sensor}")]
    ZeroIncident { sensor: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no measurements selected: {0}")]
    EmptySet(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

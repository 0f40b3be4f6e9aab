use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its domain; `field` names it as `section.key`.
    #[error("{field}: {constraint}")]
    InvalidParameter {
        field: &'static str,
        constraint: String,
    },

    #[error("{0}")]
    WrongVariant(&'static str),

    #[error("cross-spectrum exceeds Schwarz bound (bracket = {bracket:e})")]
    SchwarzViolation { bracket: f64 },

    #[error(
        "undamped resonance: gamma = 0 with omega0^2 = Omega0^2 {sign} k gives infinite variance"
    )]
    UndampedResonance { sign: char },

    #[error("quadrature did not converge: estimated error {estimated_error:e} exceeds tolerance {tolerance:e}")]
    QuadratureNotConverged {
        estimated_error: f64,
        tolerance: f64,
    },

    #[error("noiseless SNR undefined")]
    NoiselessSnr,

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("series too short: need {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

impl Error {
    /// True for failures of a numerical procedure rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNotConverged { .. }
                | Error::NoiselessSnr
                | Error::UndampedResonance { .. }
                | Error::SchwarzViolation { .. }
        )
    }

    pub(crate) fn invalid(field: &'static str, constraint: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            constraint: constraint.into(),
        }
    }
}

use thiserror::Error;

/// Errors raised by the covariance, channel, key-rate and optimizer routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sub-shot-noise variance {0} (must be >= 1 SNU)")]
    SubShotNoise(f64),

    #[error("duplicate mode label `{0}`")]
    DuplicateMode(String),

    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    #[error("matrix dimension {rows}x{cols} does not match {modes} modes")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        modes: usize,
    },

    #[error("matrix is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("unphysical state: symplectic eigenvalue {0} < 1")]
    Unphysical(f64),

    #[error("eigen-solver did not converge")]
    NoConvergence,

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("non-positive determinant in {0}")]
    NonPositiveDeterminant(&'static str),

    #[error("active channel: singular value {0} exceeds 1")]
    ActiveChannel(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("transmissivity {0} outside (0, 1]")]
    InvalidTransmissivity(f64),

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("unidentifiable channel column {0}: modulation variance must exceed 1")]
    UnidentifiableColumn(usize),

    #[error("empty feasible set for the power budget")]
    EmptyFeasibleSet,

    #[error("{context}: {source}")]
    AtPoint {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach the parameter point at which a computation failed.
    pub fn at(self, context: impl Into<String>) -> Self {
        Error::AtPoint {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

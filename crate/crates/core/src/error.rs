use thiserror::Error;

/// Errors raised by the linear algebra, tensor and certification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("matrix is singular: pivot {pivot:.3e} below threshold {threshold:.3e}")]
    Singular { pivot: f64, threshold: f64 },

    #[error("factor {factor} of the group element is not invertible")]
    NonInvertibleFactor { factor: &'static str },

    #[error("QR iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("simultaneous diagonalization inconclusive after {tries} generic combinations")]
    Inconclusive { tries: usize },

    #[error("every sampled slice combination was singular after {tries} draws")]
    AllSliceCombinationsSingular { tries: usize },

    #[error("no admissible perturbation found after {attempts} attempts")]
    PerturbationFailed { attempts: usize },

    #[error("certification of the approximant failed: {0}")]
    CertificationFailed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

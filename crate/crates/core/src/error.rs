use thiserror::Error;

use crate::outcome::Outcome;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unphysical state: Bloch vector length {norm} exceeds 1")]
    UnphysicalState { norm: f64 },

    #[error("not a unit vector: length {norm}")]
    NotUnitVector { norm: f64 },

    #[error("measurement axes are not orthogonal (dot product {dot:e})")]
    NonOrthogonalAxes { dot: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("observable not measured ({name} = 0); inversion impossible")]
    ZeroGamma { name: &'static str },

    #[error("negative probability {value:e} at outcome {outcome}")]
    NegativeProbability { outcome: Outcome, value: f64 },

    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error(
        "identity state: no violating measurement exists; \
         only states different from the identity admit one"
    )]
    IdentityState,

    #[error("correlation channel closed (phi = 0): nonclassicality factor is infinite, no violation possible")]
    ClosedCorrelationChannel,

    #[error("kernel does not factorize (defect {defect:e})")]
    NotFactorized { defect: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: u64, got: u64 },
}

use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimensions(String),

    #[error("patch at offset ({row}, {col}) of size {size} exceeds the {width}x{height} image")]
    OutOfBounds {
        row: usize,
        col: usize,
        size: usize,
        width: usize,
        height: usize,
    },

    #[error("zero-energy patch")]
    ZeroEnergy,

    #[error("odd dimension: {width}x{height}")]
    OddDimension { width: usize, height: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty sample")]
    EmptySample,

    #[error("non-positive sample {0}")]
    NonPositiveSample(f64),

    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("degenerate sample")]
    DegenerateSample,

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("quadrature did not converge")]
    Quadrature,

    #[error("numeric overflow in {0}")]
    Overflow(&'static str),

    #[error("config mismatch: {0}")]
    ConfigMismatch(String),

    #[error("subband {path}: {source}")]
    Subband {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error("normalized representation has no scattering norm")]
    NormalizedRep,

    #[error("unequal class sizes: {0}")]
    UnequalClassSizes(String),

    #[error("class {0} has a single member")]
    SingletonClass(String),

    #[error("duplicate record ({class}, {patch_id})")]
    DuplicateRecord { class: String, patch_id: u32 },

    #[error("empty database")]
    EmptyDatabase,
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("weight vector must contain at least one coordinate")]
    EmptyWeights,
    #[error("weight {index} is zero; drop zero-weight coordinates before constructing the function")]
    ZeroWeight { index: usize },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("dimension mismatch: function has {expected} coordinates, point has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("flip probability {0} is outside [0, 1]")]
    InvalidEpsilon(f64),
    #[error("invalid rational flip probability {num}/{den}")]
    InvalidRational { num: u64, den: u64 },
    #[error("{operation} requires {requirement}, got eps = {epsilon}")]
    EpsilonOutOfRange {
        operation: &'static str,
        requirement: &'static str,
        epsilon: f64,
    },
    #[error("threshold is already zero; no reduction needed")]
    ThresholdAlreadyZero,
    #[error("operation requires threshold zero (apply reduce_threshold first)")]
    NonZeroThreshold,
    #[error("enumeration over n = {n} coordinates exceeds the cap of {cap}; use the dp engine for integer weights or Monte Carlo")]
    EnumerationCap { n: usize, cap: usize },
    #[error("total weight {total} exceeds the dp cap of {cap}; use the enum engine (n <= enumeration cap) or Monte Carlo")]
    WeightCap { total: u64, cap: u64 },
    #[error("{what} exceeds its cap of {cap} (got {value})")]
    Cap {
        what: &'static str,
        value: u64,
        cap: u64,
    },
    #[error("dp engine requires integer weights and threshold")]
    NonIntegerWeights,
    #[error("exempt coordinate {index} out of range for n = {n}")]
    ExemptOutOfRange { index: usize, n: usize },
    #[error("bit-parallel path requires all weights equal to 1")]
    NonUnitWeights,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("bound violated, counterexample to p <= 2 sqrt(eps): {0}")]
    CounterExample(String),
}

impl Error {
    /// True for errors caused by an engine size cap rather than bad input.
    pub fn is_cap_violation(&self) -> bool {
        matches!(
            self,
            Error::EnumerationCap { .. } | Error::WeightCap { .. } | Error::Cap { .. }
        )
    }
}

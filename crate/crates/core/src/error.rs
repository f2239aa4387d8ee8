//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "quadrature did not converge after {doublings} panel doublings \
         (last estimate {estimate:e}, gap {gap:e})"
    )]
    QuadratureDidNotConverge {
        estimate: f64,
        gap: f64,
        doublings: u32,
    },

    #[error("integral over the half line diverges: {context}")]
    TailDivergence { context: String },

    #[error("integrand is not finite at t = {at:e} while computing {what}")]
    NonFinite { what: String, at: f64 },

    #[error("moment of order {order} of density `{density}` diverges")]
    DivergentMoment { density: String, order: f64 },

    #[error("Mellin transform of `{density}` is not defined on the line c = {c}")]
    MellinLineInvalid { density: String, c: f64 },

    #[error("error-density Mellin transform vanishes near t = {t:e}")]
    ErrorTransformVanishes { t: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sample of size {n} is too small (need at least {required})")]
    SampleTooSmall { n: usize, required: usize },

    #[error("observation {index} is not a positive real: {value}")]
    ObservationNotPositive { index: usize, value: f64 },

    #[error("observation {index} = {value:e} overflows y^(c-1); rescale the data or change c")]
    ObservationOverflow { index: usize, value: f64 },

    #[error("unknown density spec `{spec}` (expected e.g. lognormal:0:1, pareto:2, powerlaw2x)")]
    UnknownDensity { spec: String },

    #[error("dimension collection is empty")]
    CollectionEmpty,

    #[error("dimension collection is not strictly increasing at index {index}")]
    CollectionNotIncreasing { index: usize },

    #[error("log log n is not positive for n = {n}; the double-log collection needs n >= 3")]
    LogLogUndefined { n: usize },

    #[error("no tabulated rate for regularity `{regularity}` with error smoothness `{error}`")]
    UntabulatedRegime {
        regularity: &'static str,
        error: &'static str,
    },

    #[error(
        "declared {kind} smoothness {declared} disagrees with the fitted transform decay \
         {fitted} by more than {tolerance_pct}%"
    )]
    RegimeMismatch {
        kind: &'static str,
        declared: f64,
        fitted: f64,
        tolerance_pct: f64,
    },

    #[error("computation for k = {k} failed: {source}")]
    AtDimension {
        k: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attaches the dimension parameter at which a nested computation failed.
    pub fn at_dimension(self, k: f64) -> Self {
        Error::AtDimension {
            k,
            source: Box::new(self),
        }
    }
}

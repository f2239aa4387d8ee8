//! Goodness-of-fit testing for the density of a positive random variable
//! observed under multiplicative measurement error.
//!
//! Observations are Y = X·U with X the quantity of interest and U a known
//! positive noise factor. The library estimates the weighted quadratic
//! distance between Mellin transforms of the data-generating density and a
//! prescribed null density, and turns the estimate into hypothesis tests:
//! single-dimension tests with explicit critical values, empirically
//! calibrated tests, and an adaptive Bonferroni max-test over a collection
//! of dimension parameters. Radius-of-testing calculators and a Monte Carlo
//! simulation harness round out the toolkit.
//!
//! All numeric code is generic over the scalar type via [`scalar::Scalar`];
//! the `*64` aliases below fix the production `f64` instantiation.

pub mod error;
pub mod maxtest;
pub mod mellin;
pub mod numerics;
pub mod rates;
pub mod statistic;
pub mod thresholds;
pub mod scalar;
pub mod simulation;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Production scalar type.
pub type Real = f64;

/// `f64` instantiations of the main domain types.
pub type Density64 = mellin::Density<Real>;
pub type WeightFunction64 = mellin::WeightFunction<Real>;
pub type TestProblem64 = mellin::TestProblem<Real>;
pub type Sample64 = statistic::Sample<Real>;
pub type ModelConstants64 = thresholds::ModelConstants<Real>;
pub type TestOutcome64 = thresholds::TestOutcome<Real>;
pub type SimConfig64 = simulation::SimConfig<Real>;
pub type SimResult64 = simulation::SimResult<Real>;

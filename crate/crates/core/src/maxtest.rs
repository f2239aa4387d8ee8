//! Collections of dimension parameters, the adaptive factor δ_𝒦, and the
//! Bonferroni max-test.
//!
//! The max-test runs one level-α/|𝒦| test per dimension parameter k ∈ 𝒦 and
//! rejects as soon as any member rejects; the union bound keeps the overall
//! level at α while the power matches the best member. The price of
//! adaptation is the factor δ_𝒦 = (1 + log|𝒦|)^{-1/2}, which shrinks the
//! effective sample size of the aggregated procedure.

use crate::error::{Error, Result};
use crate::mellin::TestProblem;
use crate::rates::RegularityClass;
use crate::scalar::Scalar;
use crate::statistic::Sample;
use crate::thresholds::{delta4, deltainf, model_constants, tau_k_bonferroni, TestMode, TestOutcome};

/// How a collection of dimension parameters is generated.
#[derive(Debug, Clone, PartialEq)]
pub enum CollectionKind<T> {
    /// {1, …, n²}, capped at [`NAIVE_CAP`] members.
    Naive,
    /// {1} ∪ {2^j : j = 1..⌊log(n²)⌋}.
    Geometric,
    /// {1} ∪ {2^j : j = 1..⌊m⁻¹·log log n⌋}.
    DoubleLog { m: T },
    /// User-supplied, strictly increasing positive reals.
    Explicit(Vec<T>),
}

/// Base of the logarithm in the collection-size bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    fn log<T: Scalar>(self, x: T) -> T {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

/// Cap on the naive collection: {1..n²} is a theoretical device and grids
/// beyond this size add nothing at desk scale.
pub const NAIVE_CAP: usize = 10_000;

/// A finite, strictly increasing collection of dimension parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection<T> {
    kind: CollectionKind<T>,
    members: Vec<T>,
    /// Set when the naive collection was truncated at [`NAIVE_CAP`].
    capped: bool,
}

impl<T: Scalar> Collection<T> {
    pub fn members(&self) -> &[T] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn kind(&self) -> &CollectionKind<T> {
        &self.kind
    }

    pub fn capped(&self) -> bool {
        self.capped
    }

    /// δ_𝒦 = (1 + log|𝒦|)^{-1/2} ∈ (0, 1]; equals 1 only for singletons.
    pub fn delta_k(&self) -> T {
        delta_k_of_size(self.size())
    }
}

/// δ_𝒦 for a collection of the given size (natural logarithm).
pub fn delta_k_of_size<T: Scalar>(size: usize) -> T {
    debug_assert!(size >= 1);
    (T::one() + T::from_usize(size).unwrap().ln()).powf(T::of(-0.5))
}

/// Builds a collection for sample size n under the given log base.
pub fn build_collection<T: Scalar>(
    kind: CollectionKind<T>,
    n: usize,
    log_base: LogBase,
) -> Result<Collection<T>> {
    if n < 2 {
        return Err(Error::SampleTooSmall { n, required: 2 });
    }
    let (members, capped) = match &kind {
        CollectionKind::Naive => {
            let full = n.saturating_mul(n);
            let len = full.min(NAIVE_CAP);
            let members = (1..=len).map(|i| T::from_usize(i).unwrap()).collect();
            (members, full > NAIVE_CAP)
        }
        CollectionKind::Geometric => {
            let n2 = T::from_usize(n).unwrap() * T::from_usize(n).unwrap();
            let bound = log_base.log(n2).floor().to_usize().unwrap_or(0);
            let mut members = vec![T::one()];
            for j in 1..=bound {
                members.push(T::of(2.0).powi(j as i32));
            }
            (members, false)
        }
        CollectionKind::DoubleLog { m } => {
            if !(*m > T::zero()) {
                return Err(Error::InvalidParameter {
                    name: "m",
                    reason: "double-log collection parameter must be positive".into(),
                });
            }
            let loglog = log_base.log(log_base.log(T::from_usize(n).unwrap()));
            if !(loglog > T::zero()) {
                return Err(Error::LogLogUndefined { n });
            }
            let bound = (loglog / *m).floor().to_usize().unwrap_or(0);
            let mut members = vec![T::one()];
            for j in 1..=bound {
                members.push(T::of(2.0).powi(j as i32));
            }
            (members, false)
        }
        CollectionKind::Explicit(list) => {
            if list.is_empty() {
                return Err(Error::CollectionEmpty);
            }
            for (index, pair) in list.windows(2).enumerate() {
                if !(pair[0] < pair[1]) {
                    return Err(Error::CollectionNotIncreasing { index: index + 1 });
                }
            }
            if !(list[0] > T::zero()) {
                return Err(Error::InvalidParameter {
                    name: "collection",
                    reason: "members must be positive".into(),
                });
            }
            (list.clone(), false)
        }
    };
    Ok(Collection {
        kind,
        members,
        capped,
    })
}

/// Threshold source for the max-test.
#[derive(Debug, Clone, PartialEq)]
pub enum MaxTestMode<T> {
    /// Per-k Bonferroni critical value τ_{k|α} with moment order p.
    Theoretical { p: T },
    /// Per-k empirical null (1-α)-quantiles (one per collection member, same
    /// order), each scaled by δ_𝒦^{-1}. `b` records the calibration size.
    Empirical { quantiles: Vec<T>, b: usize },
}

/// Aggregated decision record.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxTestOutcome<T> {
    pub per_k: Vec<TestOutcome<T>>,
    pub reject: bool,
    pub delta_k: T,
}

/// Runs the Bonferroni max-test over the collection: per-k tests at level
/// α/|𝒦|, rejecting iff any member rejects.
pub fn max_test<T: Scalar>(
    sample: &Sample<T>,
    problem: &TestProblem<T>,
    collection: &Collection<T>,
    alpha: T,
    mode: &MaxTestMode<T>,
    scale: T,
) -> Result<MaxTestOutcome<T>> {
    let delta = collection.delta_k();
    let size = collection.size();
    if let MaxTestMode::Empirical { quantiles, .. } = mode {
        if quantiles.len() != size {
            return Err(Error::InvalidParameter {
                name: "quantiles",
                reason: format!(
                    "expected one empirical quantile per collection member ({size}), got {}",
                    quantiles.len()
                ),
            });
        }
    }
    let constants = match mode {
        MaxTestMode::Theoretical { p } => Some(model_constants(problem, *p)?),
        MaxTestMode::Empirical { .. } => None,
    };
    let mut per_k = Vec::with_capacity(size);
    for (i, &k) in collection.members().iter().enumerate() {
        let (threshold, outcome_mode) = match mode {
            MaxTestMode::Theoretical { p } => {
                let tau = tau_k_bonferroni(
                    problem,
                    constants.as_ref().unwrap(),
                    k,
                    sample.n(),
                    alpha,
                    size,
                    scale,
                )
                .map_err(|e| e.at_dimension(k.lossy_f64()))?;
                (
                    tau,
                    TestMode::TheoreticalBonferroni {
                        p: *p,
                        collection_size: size,
                    },
                )
            }
            MaxTestMode::Empirical { quantiles, b } => {
                let q = quantiles[i];
                (
                    q / delta,
                    TestMode::Empirical { quantile: q, b: *b },
                )
            }
        };
        let value = crate::statistic::statistic(sample, problem, k)
            .map_err(|e| e.at_dimension(k.lossy_f64()))?
            .value;
        per_k.push(TestOutcome {
            k,
            statistic: value,
            threshold,
            alpha,
            mode: outcome_mode,
            reject: value >= threshold,
        });
    }
    let reject = per_k.iter().any(|o| o.reject);
    Ok(MaxTestOutcome {
        per_k,
        reject,
        delta_k: delta,
    })
}

/// Selected dimension and attained adaptive radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveRadius<T> {
    pub k_sel: T,
    pub r2: T,
}

/// Adaptive radius of the max-test over the collection:
/// r²ₖ(n) = w²(k)/s²(k) ∨ (δ_𝒦^{-1}√Δ₄(k) ∨ δ_𝒦^{-2}√Δ∞(k))/n per member,
/// minimised over 𝒦.
pub fn adaptive_radius<T: Scalar>(
    regularity: &RegularityClass<T>,
    collection: &Collection<T>,
    problem: &TestProblem<T>,
    n: usize,
) -> Result<AdaptiveRadius<T>> {
    if n < 2 {
        return Err(Error::SampleTooSmall { n, required: 2 });
    }
    let delta = collection.delta_k();
    let nf = T::from_usize(n).unwrap();
    let mut best: Option<AdaptiveRadius<T>> = None;
    for &k in collection.members() {
        let s = regularity.s_of(k);
        let bias = problem.weight().w2(k) / (s * s);
        let d4 = delta4(problem, k, T::of(crate::numerics::DEFAULT_RELTOL))
            .map_err(|e| e.at_dimension(k.lossy_f64()))?;
        let dinf = deltainf(problem, k).map_err(|e| e.at_dimension(k.lossy_f64()))?;
        let variance = (d4.sqrt() / delta).max(dinf.sqrt() / (delta * delta)) / nf;
        let r2 = bias.max(variance);
        if best.map_or(true, |b| r2 < b.r2) {
            best = Some(AdaptiveRadius { k_sel: k, r2 });
        }
    }
    best.ok_or(Error::CollectionEmpty)
}

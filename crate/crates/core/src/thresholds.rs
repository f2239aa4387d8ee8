//! Model constants, the ill-posedness penalties Δ₄(k) and Δ∞(k), the
//! critical values τₖ(α) and τ_{k|α}, and the single-dimension test.
//!
//! The explicit critical value controlling the null quantiles of q̂²ₖ is
//!
//! ```text
//! τₖ(α) = (18·c_U·V² + 69493·(√(2k)/n)·(L_{α/2}/α))·L_{α/2}^{1/2}·√Δ₄(k)/n
//!         + 52·V·c_U·L_{α/2}·√Δ∞(k)/n,        L_α = 1 - log α,
//! ```
//!
//! and its Bonferroni variant for a collection 𝒦 of dimension parameters
//! sharpens the |𝒦| dependence to |𝒦|^{1/(p-1)} under a p-th moment
//! condition:
//!
//! ```text
//! τ_{k|α} = (18·c_U·V(p) + 69493·(√(2k)·|𝒦|^{1/(p-1)}/n)·(L²_{α/2|𝒦|}/α))
//!             ·L^{1/2}_{α/2|𝒦|}·√Δ₄(k)/n
//!           + 52·V·c_U·L_{α/2|𝒦|}·√Δ∞(k)/n.
//! ```
//!
//! Both brackets can be multiplied by a configurable `scale`; the explicit
//! constants are conservative and a global damping factor is the standard
//! desk adjustment at small sample sizes.

use crate::error::{Error, Result};
use crate::mellin::TestProblem;
use crate::numerics::{integrate_zero_to_k, sup_on_interval, DEFAULT_SUP_GRID};
use crate::scalar::Scalar;
use crate::statistic::{statistic, Sample};

/// Moment constants of the null observation density f₀ ∗ g_U entering the
/// critical values. Each is clamped below by 1.
///
/// * `c_u`: ‖g_U‖_{L∞(x^{2c-1})} / ‖g_U‖_{L¹(x^{2(c-1)})} ∨ 1.
/// * `v1`:  E[Y^{2(c-1)}] ∨ 1 under the null.
/// * `v2`:  E[Y^{4(c-1)}] ∨ 1 under the null.
/// * `vp`:  E[Y^{2p(c-1)}] ∨ 1 under the null, for the Bonferroni variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants<T> {
    pub c_u: T,
    pub v1: T,
    pub v2: T,
    pub vp: T,
    pub p: T,
}

/// Computes the model constants for a problem; moments factorise over the
/// independent product Y = X·U and come from the catalog closed forms.
/// A divergent moment is reported with the offending order, signalling that
/// the moment assumptions fail for this (null, error, c, p) combination.
pub fn model_constants<T: Scalar>(problem: &TestProblem<T>, p: T) -> Result<ModelConstants<T>> {
    if !(p >= T::of(2.0)) {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: "moment order must be at least 2".into(),
        });
    }
    let c = problem.c();
    let error = problem.error();
    let null = problem.null();
    let one = T::one();
    let two = T::of(2.0);

    let sup_norm = error
        .weighted_sup(two * c - one)
        .finite()
        .ok_or_else(|| Error::DivergentMoment {
            density: error.to_string(),
            order: (two * c - one).lossy_f64(),
        })?;
    let moment_of = |order: T| -> Result<T> {
        let mx = null.moment(order).finite().ok_or(Error::DivergentMoment {
            density: null.to_string(),
            order: order.lossy_f64(),
        })?;
        let mu = error.moment(order).finite().ok_or(Error::DivergentMoment {
            density: error.to_string(),
            order: order.lossy_f64(),
        })?;
        Ok(mx * mu)
    };
    let l1_norm = error
        .moment(two * (c - one))
        .finite()
        .ok_or_else(|| Error::DivergentMoment {
            density: error.to_string(),
            order: (two * (c - one)).lossy_f64(),
        })?;

    Ok(ModelConstants {
        c_u: (sup_norm / l1_norm).max(one),
        v1: moment_of(two * (c - one))?.max(one),
        v2: moment_of(T::of(4.0) * (c - one))?.max(one),
        vp: moment_of(two * p * (c - one))?.max(one),
        p,
    })
}

/// L_α = 1 - log α ≥ 1 for α ∈ (0, 1).
pub fn l_alpha<T: Scalar>(alpha: T) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("level must lie in (0,1), got {}", alpha.lossy_f64()),
        });
    }
    Ok(T::one() - alpha.ln())
}

/// Δ₄(k) = ∫_{-k}^{k} |M_c[g_U](t)|^{-4} w⁴(t) dt with w⁴ = (w²)².
pub fn delta4<T: Scalar>(problem: &TestProblem<T>, k: T, reltol: T) -> Result<T> {
    if !(k > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "must be positive".into(),
        });
    }
    let c = problem.c();
    let v = integrate_zero_to_k(
        |t| {
            let w2 = problem.weight().w2(t);
            let m2 = problem.error().mellin(c, t).norm_sqr();
            (w2 / m2).powi(2)
        },
        k,
        reltol,
    )?;
    Ok(T::of(2.0) * v)
}

/// Δ∞(k) = ‖1_{[-k,k]} w / M_c[g_U]‖⁴_{L∞}: the sup of w²/|M_c[g_U]|² over
/// [0, k] (the objective is even), squared.
pub fn deltainf<T: Scalar>(problem: &TestProblem<T>, k: T) -> Result<T> {
    let c = problem.c();
    let sup = sup_on_interval(
        |t| {
            let w2 = problem.weight().w2(t);
            let m2 = problem.error().mellin(c, t).norm_sqr();
            w2 / m2
        },
        k,
        DEFAULT_SUP_GRID,
    )?;
    Ok(sup * sup)
}

fn require_n_alpha_scale<T: Scalar>(n: usize, alpha: T, scale: T) -> Result<()> {
    if n < 2 {
        return Err(Error::SampleTooSmall { n, required: 2 });
    }
    l_alpha(alpha)?;
    if !(scale > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "scale",
            reason: "threshold multiplier must be positive".into(),
        });
    }
    Ok(())
}

/// Critical value τₖ(α), scaled by `scale` (the multiplier acts on the whole
/// bracket).
pub fn tau_k<T: Scalar>(
    problem: &TestProblem<T>,
    constants: &ModelConstants<T>,
    k: T,
    n: usize,
    alpha: T,
    scale: T,
) -> Result<T> {
    require_n_alpha_scale(n, alpha, scale)?;
    let nf = T::from_usize(n).unwrap();
    let l_half = l_alpha(alpha / T::of(2.0))?;
    let d4 = delta4(problem, k, T::of(crate::numerics::DEFAULT_RELTOL))?;
    let dinf = deltainf(problem, k)?;
    let two_k = T::of(2.0) * k;
    let first = (T::of(18.0) * constants.c_u * constants.v2
        + T::of(69_493.0) * (two_k.sqrt() / nf) * (l_half / alpha))
        * l_half.sqrt()
        * d4.sqrt()
        / nf;
    let second = T::of(52.0) * constants.v1 * constants.c_u * l_half * dinf.sqrt() / nf;
    Ok(scale * (first + second))
}

/// Bonferroni critical value τ_{k|α} for a collection of `collection_size`
/// dimension parameters, using the p-th moment constant `vp`.
pub fn tau_k_bonferroni<T: Scalar>(
    problem: &TestProblem<T>,
    constants: &ModelConstants<T>,
    k: T,
    n: usize,
    alpha: T,
    collection_size: usize,
    scale: T,
) -> Result<T> {
    require_n_alpha_scale(n, alpha, scale)?;
    if collection_size == 0 {
        return Err(Error::CollectionEmpty);
    }
    let nf = T::from_usize(n).unwrap();
    let m = T::from_usize(collection_size).unwrap();
    let l_k = l_alpha(alpha / (T::of(2.0) * m))?;
    let d4 = delta4(problem, k, T::of(crate::numerics::DEFAULT_RELTOL))?;
    let dinf = deltainf(problem, k)?;
    let two_k = T::of(2.0) * k;
    let size_pow = m.powf(T::one() / (constants.p - T::one()));
    let first = (T::of(18.0) * constants.c_u * constants.vp
        + T::of(69_493.0) * (two_k.sqrt() * size_pow / nf) * (l_k * l_k / alpha))
        * l_k.sqrt()
        * d4.sqrt()
        / nf;
    let second = T::of(52.0) * constants.v1 * constants.c_u * l_k * dinf.sqrt() / nf;
    Ok(scale * (first + second))
}

/// How the rejection threshold of a test is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestMode<T> {
    /// Explicit critical value τₖ(α) with the global `scale` multiplier.
    Theoretical,
    /// Bonferroni critical value τ_{k|α} for a collection of the given size.
    TheoreticalBonferroni { p: T, collection_size: usize },
    /// Empirical null quantile, calibrated by Monte Carlo with `b`
    /// replications (see the simulation module). The quantile is used as-is;
    /// `scale` does not apply.
    Empirical { quantile: T, b: usize },
}

/// Decision record of a single-dimension test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome<T> {
    pub k: T,
    pub statistic: T,
    pub threshold: T,
    pub alpha: T,
    pub mode: TestMode<T>,
    pub reject: bool,
}

/// Runs the level-α test at one dimension parameter k: reject iff
/// q̂²ₖ ≥ threshold(mode).
pub fn test_single<T: Scalar>(
    sample: &Sample<T>,
    problem: &TestProblem<T>,
    k: T,
    alpha: T,
    mode: TestMode<T>,
    scale: T,
) -> Result<TestOutcome<T>> {
    let threshold = match mode {
        TestMode::Theoretical => {
            let constants = model_constants(problem, T::of(2.0))?;
            tau_k(problem, &constants, k, sample.n(), alpha, scale)?
        }
        TestMode::TheoreticalBonferroni { p, collection_size } => {
            let constants = model_constants(problem, p)?;
            tau_k_bonferroni(problem, &constants, k, sample.n(), alpha, collection_size, scale)?
        }
        TestMode::Empirical { quantile, .. } => {
            l_alpha(alpha)?;
            quantile
        }
    };
    let value = statistic(sample, problem, k)?.value;
    Ok(TestOutcome {
        k,
        statistic: value,
        threshold,
        alpha,
        mode,
        reject: value >= threshold,
    })
}

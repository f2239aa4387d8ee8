//! Density catalog with closed-form Mellin transforms, weight functions,
//! and the weighted quadratic functionals q² and q²ₖ.
//!
//! The Mellin transform along the line Re = c is
//!
//! ```text
//! M_c[h](t) = ∫_0^∞ x^{c-1+2πit} h(x) dx,
//! ```
//!
//! the multiplicative analogue of the Fourier transform. For independent
//! positive variables it factorises over multiplicative convolution:
//! M_c[f ∗ g] = M_c[f]·M_c[g], which is what makes deconvolution of a
//! product Y = X·U tractable. The quadratic functional
//!
//! ```text
//! q²(h) = ∫_ℝ |M_c[h](t)|² w²(t) dt
//! ```
//!
//! measures separation between densities; the weight w² selects whether the
//! distance targets the density itself, its survival function, or a
//! derivative.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{integrate_halfline, integrate_interval, integrate_zero_to_k};
use crate::scalar::Scalar;

/// A power moment E[X^s], which may fail to exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment<T> {
    Finite(T),
    Divergent,
}

impl<T: Scalar> Moment<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Moment::Finite(v) => Some(v),
            Moment::Divergent => None,
        }
    }
}

/// Catalogued positive-support density: pdf, closed-form Mellin transform,
/// closed-form power moments, and an inverse-CDF sampler.
///
/// * `LogNormal(μ, σ²)`: M_c(t) = exp((c-1+2πit)μ + (c-1+2πit)²σ²/2).
/// * `Pareto(θ)` on (1, ∞) with pdf (θ-1)·x^{-θ}: M_c(t) = (θ-1)/(θ-c-2πit),
///   defined for c < θ. `pareto:2` is the unit-shape case with pdf x^{-2}
///   and M_{1/2}(t) = (1.5 - 2πit)^{-1}.
/// * `PowerLaw2x` with pdf 2x on (0, 1): M_c(t) = 2/(c+1+2πit) for c > -1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density<T> {
    LogNormal { mu: T, sigma2: T },
    Pareto { theta: T },
    PowerLaw2x,
}

impl<T: Scalar> fmt::Display for Density<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::LogNormal { mu, sigma2 } => write!(f, "lognormal:{mu}:{sigma2}"),
            Density::Pareto { theta } => write!(f, "pareto:{theta}"),
            Density::PowerLaw2x => write!(f, "powerlaw2x"),
        }
    }
}

impl<T: Scalar> FromStr for Density<T> {
    type Err = Error;

    /// Parses catalog specs of the form `lognormal:<mu>:<sigma2>`,
    /// `pareto:<theta>`, `powerlaw2x`.
    fn from_str(spec: &str) -> Result<Self> {
        let unknown = || Error::UnknownDensity { spec: spec.into() };
        let mut parts = spec.split(':');
        let name = parts.next().ok_or_else(unknown)?.trim().to_lowercase();
        let mut num = |field: &'static str| -> Result<T> {
            let raw = parts.next().ok_or_else(unknown)?.trim();
            let v: f64 = raw.parse().map_err(|_| Error::InvalidParameter {
                name: field,
                reason: format!("`{raw}` is not a number"),
            })?;
            Ok(T::of(v))
        };
        let density = match name.as_str() {
            "lognormal" => {
                let mu = num("mu")?;
                let sigma2 = num("sigma2")?;
                if !(sigma2 > T::zero()) {
                    return Err(Error::InvalidParameter {
                        name: "sigma2",
                        reason: "log-normal variance must be positive".into(),
                    });
                }
                Density::LogNormal { mu, sigma2 }
            }
            "pareto" => {
                let theta = num("theta")?;
                if !(theta > T::one()) {
                    return Err(Error::InvalidParameter {
                        name: "theta",
                        reason: "pareto exponent must exceed 1".into(),
                    });
                }
                Density::Pareto { theta }
            }
            "powerlaw2x" => Density::PowerLaw2x,
            _ => return Err(unknown()),
        };
        if parts.next().is_some() {
            return Err(unknown());
        }
        Ok(density)
    }
}

impl<T: Scalar> Density<T> {
    /// Lebesgue density on (0, ∞).
    pub fn pdf(&self, x: T) -> T {
        if !(x > T::zero()) {
            return T::zero();
        }
        match *self {
            Density::LogNormal { mu, sigma2 } => {
                let sigma = sigma2.sqrt();
                let z = (x.ln() - mu) / sigma;
                (-(z * z) / T::of(2.0)).exp()
                    / (x * sigma * (T::of(2.0) * T::PI()).sqrt())
            }
            Density::Pareto { theta } => {
                if x > T::one() {
                    (theta - T::one()) * x.powf(-theta)
                } else {
                    T::zero()
                }
            }
            Density::PowerLaw2x => {
                if x < T::one() {
                    T::of(2.0) * x
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Cumulative distribution function (used by samplers and their tests).
    pub fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        match *self {
            Density::LogNormal { mu, sigma2 } => {
                let z = (x.ln() - mu) / sigma2.sqrt();
                standard_normal_cdf(z)
            }
            Density::Pareto { theta } => {
                if x <= T::one() {
                    T::zero()
                } else {
                    T::one() - x.powf(T::one() - theta)
                }
            }
            Density::PowerLaw2x => (x * x).min(T::one()),
        }
    }

    /// True iff the Mellin transform exists along the line Re = c.
    pub fn mellin_line_valid(&self, c: T) -> bool {
        match *self {
            Density::LogNormal { .. } => true,
            Density::Pareto { theta } => c < theta,
            Density::PowerLaw2x => c > -T::one(),
        }
    }

    fn require_line(&self, c: T) -> Result<()> {
        if self.mellin_line_valid(c) {
            Ok(())
        } else {
            Err(Error::MellinLineInvalid {
                density: self.to_string(),
                c: c.lossy_f64(),
            })
        }
    }

    /// Closed-form Mellin transform M_c(t). The line must be valid; see
    /// [`Density::mellin_line_valid`].
    pub fn mellin(&self, c: T, t: T) -> Complex<T> {
        let two_pi_t = T::of(2.0) * T::PI() * t;
        match *self {
            Density::LogNormal { mu, sigma2 } => {
                let z = Complex::new(c - T::one(), two_pi_t);
                ((z * mu) + z * z * Complex::new(sigma2 / T::of(2.0), T::zero())).exp()
            }
            Density::Pareto { theta } => {
                (Complex::new(theta - T::one(), T::zero()))
                    / Complex::new(theta - c, -two_pi_t)
            }
            Density::PowerLaw2x => {
                Complex::new(T::of(2.0), T::zero())
                    / Complex::new(c + T::one(), two_pi_t)
            }
        }
    }

    /// Closed-form power moment E[X^s].
    pub fn moment(&self, s: T) -> Moment<T> {
        match *self {
            Density::LogNormal { mu, sigma2 } => {
                Moment::Finite((s * mu + s * s * sigma2 / T::of(2.0)).exp())
            }
            Density::Pareto { theta } => {
                if s < theta - T::one() {
                    Moment::Finite((theta - T::one()) / (theta - T::one() - s))
                } else {
                    Moment::Divergent
                }
            }
            Density::PowerLaw2x => {
                if s > T::of(-2.0) {
                    Moment::Finite(T::of(2.0) / (s + T::of(2.0)))
                } else {
                    Moment::Divergent
                }
            }
        }
    }

    /// Essential supremum of x^s·pdf(x) over the support, the weighted sup
    /// norm entering the model constant c_U.
    pub fn weighted_sup(&self, s: T) -> Moment<T> {
        match *self {
            Density::LogNormal { mu, sigma2 } => {
                // x^s pdf(x) = exp((s-1)u - (u-mu)^2/(2 sigma^2)) / (sigma sqrt(2 pi))
                // in u = ln x, maximised at u = mu + (s-1) sigma^2.
                let sm1 = s - T::one();
                let peak = (sm1 * mu + sm1 * sm1 * sigma2 / T::of(2.0)).exp()
                    / (sigma2.sqrt() * (T::of(2.0) * T::PI()).sqrt());
                Moment::Finite(peak)
            }
            Density::Pareto { theta } => {
                if s <= theta {
                    Moment::Finite(theta - T::one())
                } else {
                    Moment::Divergent
                }
            }
            Density::PowerLaw2x => {
                if s >= -T::one() {
                    Moment::Finite(T::of(2.0))
                } else {
                    Moment::Divergent
                }
            }
        }
    }

    /// Inverse-CDF draw (log-normal goes through exp of a standard normal).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match *self {
            Density::LogNormal { mu, sigma2 } => {
                (mu + sigma2.sqrt() * T::standard_normal(rng)).exp()
            }
            Density::Pareto { theta } => {
                // V uniform on [0,1): 1-V in (0,1], X = (1-V)^{-1/(theta-1)} >= 1.
                let v = rng.random_range(T::zero()..T::one());
                (T::one() - v).powf(-(T::one() / (theta - T::one())))
            }
            Density::PowerLaw2x => {
                // F(x) = x^2 on (0,1): X = sqrt(1-V) keeps the draw strictly positive.
                let v = rng.random_range(T::zero()..T::one());
                (T::one() - v).sqrt()
            }
        }
    }
}

/// Φ, via the error function relation Φ(z) = (1 + erf(z/√2))/2.
pub fn standard_normal_cdf<T: Scalar>(z: T) -> T {
    T::of(0.5) * (T::one() + erf(z / T::of(2.0).sqrt()))
}

/// Error function, evaluated in `f64` (every supported scalar fits).
pub fn erf<T: Scalar>(x: T) -> T {
    T::of(libm::erf(x.lossy_f64()))
}

/// Symmetric weight w²(t) selecting the testing variant.
///
/// * `Unit`: w² ≡ 1 targets the density itself (asymptotic exponent a = 0).
/// * `Survival(c)`: w²(t) = 1/((c-1)² + 4π²t²) targets the survival
///   function (a = -1); requires c ≠ 1.
/// * `Derivative(β, c)`: w²(t) = ∏_{j=1..β} ((c+β-j)² + 4π²t²) targets the
///   β-th derivative (a = β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFunction<T> {
    Unit,
    Survival { c: T },
    Derivative { beta: u32, c: T },
}

impl<T: Scalar> WeightFunction<T> {
    pub fn survival(c: T) -> Result<Self> {
        if c == T::one() {
            return Err(Error::InvalidParameter {
                name: "weight",
                reason: "survival weight has a pole at c = 1".into(),
            });
        }
        Ok(WeightFunction::Survival { c })
    }

    pub fn derivative(beta: u32, c: T) -> Result<Self> {
        if beta == 0 {
            return Err(Error::InvalidParameter {
                name: "weight",
                reason: "derivative order must be at least 1".into(),
            });
        }
        Ok(WeightFunction::Derivative { beta, c })
    }

    /// w²(t).
    pub fn w2(&self, t: T) -> T {
        let four_pi2_t2 = T::of(4.0) * T::PI() * T::PI() * t * t;
        match *self {
            WeightFunction::Unit => T::one(),
            WeightFunction::Survival { c } => {
                let cm1 = c - T::one();
                T::one() / (cm1 * cm1 + four_pi2_t2)
            }
            WeightFunction::Derivative { beta, c } => {
                let mut prod = T::one();
                for j in 1..=beta {
                    let base = c + T::from_u32(beta - j).unwrap();
                    prod = prod * (base * base + four_pi2_t2);
                }
                prod
            }
        }
    }

    /// Exponent a in the asymptotic w²(t) ~ (1+t²)^a, consumed by the rate
    /// calculators.
    pub fn decay_exponent(&self) -> T {
        match *self {
            WeightFunction::Unit => T::zero(),
            WeightFunction::Survival { .. } => -T::one(),
            WeightFunction::Derivative { beta, .. } => T::from_u32(beta).unwrap(),
        }
    }
}

impl<T: Scalar> fmt::Display for WeightFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFunction::Unit => write!(f, "unit"),
            WeightFunction::Survival { .. } => write!(f, "survival"),
            WeightFunction::Derivative { beta, .. } => write!(f, "derivative:{beta}"),
        }
    }
}

/// Number of probes used to check that the error transform does not vanish.
const ERROR_TRANSFORM_PROBES: usize = 257;
const ERROR_TRANSFORM_PROBE_RANGE: f64 = 8.0;
/// Magnitudes below this are treated as tail underflow of a super-smooth
/// transform rather than a genuine zero.
const ERROR_TRANSFORM_UNDERFLOW: f64 = 1e-250;

/// One goodness-of-fit task: the Mellin line c, the weight variant, the
/// null density f₀ and the known error density g_U.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestProblem<T> {
    c: T,
    weight: WeightFunction<T>,
    null: Density<T>,
    error: Density<T>,
}

impl<T: Scalar> TestProblem<T> {
    /// Validates the Mellin lines of both catalog densities and probes the
    /// error transform for zeros on a dense grid before accepting the task.
    pub fn new(
        c: T,
        weight: WeightFunction<T>,
        null: Density<T>,
        error: Density<T>,
    ) -> Result<Self> {
        null.require_line(c)?;
        error.require_line(c)?;
        if let WeightFunction::Survival { c: wc } = weight {
            if wc == T::one() {
                return Err(Error::InvalidParameter {
                    name: "weight",
                    reason: "survival weight has a pole at c = 1".into(),
                });
            }
        }
        let probes = ERROR_TRANSFORM_PROBES;
        let step = T::of(ERROR_TRANSFORM_PROBE_RANGE) / T::from_usize(probes - 1).unwrap();
        let underflow = T::of(ERROR_TRANSFORM_UNDERFLOW);
        let mut prev = T::infinity();
        for i in 0..probes {
            let t = step * T::from_usize(i).unwrap();
            let mag = error.mellin(c, t).norm();
            if !mag.is_finite() {
                return Err(Error::ErrorTransformVanishes { t: t.lossy_f64() });
            }
            if mag <= T::zero() {
                // A decaying transform may underflow in its far tail; only a
                // drop from a representable magnitude to zero marks a real zero.
                if prev > underflow {
                    return Err(Error::ErrorTransformVanishes { t: t.lossy_f64() });
                }
                break;
            }
            prev = mag;
        }
        Ok(TestProblem {
            c,
            weight,
            null,
            error,
        })
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn weight(&self) -> &WeightFunction<T> {
        &self.weight
    }

    pub fn null(&self) -> &Density<T> {
        &self.null
    }

    pub fn error(&self) -> &Density<T> {
        &self.error
    }
}

/// Numeric Mellin transform of an arbitrary pdf via half-line quadrature of
/// the real and imaginary parts. The closed forms in the catalog are checked
/// against this routine.
pub fn mellin_numeric<T: Scalar>(
    pdf: impl Fn(T) -> T,
    c: T,
    t: T,
    reltol: T,
) -> Result<Complex<T>> {
    let two_pi_t = T::of(2.0) * T::PI() * t;
    let re = integrate_halfline(
        |x: T| x.powf(c - T::one()) * pdf(x) * (two_pi_t * x.ln()).cos(),
        reltol,
    )?;
    let im = integrate_halfline(
        |x: T| x.powf(c - T::one()) * pdf(x) * (two_pi_t * x.ln()).sin(),
        reltol,
    )?;
    Ok(Complex::new(re, im))
}

/// Numeric power moment E[X^s] with divergence detection, the fallback for
/// densities without a catalogued closed form.
pub fn moment_numeric<T: Scalar>(pdf: impl Fn(T) -> T, s: T, reltol: T) -> Result<T> {
    integrate_halfline(|x: T| x.powf(s) * pdf(x), reltol)
}

/// Transform of the observation density: M_c[density ∗ g_U](t) =
/// M_c[density](t) · M_c[g_U](t), the multiplicative convolution theorem.
pub fn mellin_product<T: Scalar>(
    problem: &TestProblem<T>,
    density: &Density<T>,
    t: T,
) -> Result<Complex<T>> {
    density.require_line(problem.c)?;
    Ok(density.mellin(problem.c, t) * problem.error.mellin(problem.c, t))
}

/// Truncated quadratic functional q²ₖ(h) = ∫_{-k}^{k} |ΔM(t)|² w²(t) dt,
/// computed as 2·∫_0^k by symmetry (transforms of real densities have even
/// modulus).
pub fn q2_truncated<T: Scalar>(
    delta_m: impl Fn(T) -> Complex<T>,
    weight: &WeightFunction<T>,
    k: T,
    reltol: T,
) -> Result<T> {
    if !(k > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "truncation point must be positive".into(),
        });
    }
    let v = integrate_zero_to_k(|t| delta_m(t).norm_sqr() * weight.w2(t), k, reltol)?;
    Ok(T::of(2.0) * v)
}

const Q2_FULL_INITIAL_K: f64 = 8.0;
const Q2_FULL_MAX_GROWTH: u32 = 26;

/// Full quadratic functional q²(h) = ∫_ℝ |ΔM|² w² dt. The truncation point
/// doubles from 8 until the tail increment is below `reltol` relative to
/// the running estimate; increments that stop shrinking raise a divergence
/// error naming the violated integrability.
pub fn q2_full<T: Scalar>(
    delta_m: impl Fn(T) -> Complex<T>,
    weight: &WeightFunction<T>,
    reltol: T,
) -> Result<T> {
    let integrand = |t: T| delta_m(t).norm_sqr() * weight.w2(t);
    let mut k = T::of(Q2_FULL_INITIAL_K);
    let mut total = integrate_interval(&integrand, T::zero(), k, reltol)?;
    let floor = T::of(1e-14).max(T::epsilon() * T::of(8.0));
    let mut prev_inc = T::infinity();
    let mut growing = 0u32;
    for _ in 0..Q2_FULL_MAX_GROWTH {
        let next = k * T::of(2.0);
        let inc = integrate_interval(&integrand, k, next, reltol)?;
        total = total + inc;
        k = next;
        if inc.abs() <= (reltol * total.abs()).max(floor) {
            return Ok(T::of(2.0) * total);
        }
        if inc.abs() >= prev_inc.abs() {
            growing += 1;
            if growing >= 2 {
                return Err(Error::TailDivergence {
                    context: format!(
                        "weighted transform |ΔM|² w² is not integrable: tail increments \
                         are non-decreasing past k = {} (weight grows faster than the \
                         transform decays)",
                        k.lossy_f64()
                    ),
                });
            }
        } else {
            growing = 0;
        }
        prev_inc = inc;
    }
    Err(Error::TailDivergence {
        context: format!(
            "q² tail not converged after growing the truncation point to {}",
            k.lossy_f64()
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ln01() -> Density<f64> {
        Density::LogNormal { mu: 0.0, sigma2: 1.0 }
    }

    fn pareto2() -> Density<f64> {
        Density::Pareto { theta: 2.0 }
    }

    fn sec6_problem() -> TestProblem<f64> {
        TestProblem::new(0.5, WeightFunction::Unit, ln01(), pareto2()).unwrap()
    }

    #[test]
    fn parses_catalog_specs() {
        assert_eq!("lognormal:0:1".parse::<Density<f64>>().unwrap(), ln01());
        assert_eq!("pareto:2".parse::<Density<f64>>().unwrap(), pareto2());
        assert_eq!(
            "powerlaw2x".parse::<Density<f64>>().unwrap(),
            Density::PowerLaw2x
        );
        assert!("pareto:1".parse::<Density<f64>>().is_err());
        assert!("cauchy".parse::<Density<f64>>().is_err());
        assert!("lognormal:0".parse::<Density<f64>>().is_err());
    }

    #[test]
    fn pdfs_integrate_to_one() {
        for d in [ln01(), pareto2(), Density::PowerLaw2x] {
            let mass = integrate_halfline(|x| d.pdf(x), 1e-10).unwrap();
            assert_relative_eq!(mass, 1.0, max_relative = 1e-8);
        }
    }

    #[test]
    fn mellin_at_zero_matches_moment() {
        let c = 0.5;
        for d in [ln01(), pareto2(), Density::PowerLaw2x] {
            let m0 = d.mellin(c, 0.0);
            let mom = d.moment(c - 1.0).finite().unwrap();
            assert_relative_eq!(m0.re, mom, max_relative = 1e-12);
            assert!(m0.im.abs() < 1e-15);
        }
    }

    #[test]
    fn sec6_closed_forms() {
        // M_{1/2}[2x](t) = 2/(1.5+2πit), M_{1/2}[pareto:2](t) = 1/(1.5-2πit),
        // M_{1/2}[lognormal:0:1](t) = exp((-0.5+2πit)²/2).
        let t = 0.73;
        let tp = 2.0 * std::f64::consts::PI * t;
        let m = Density::PowerLaw2x.mellin(0.5, t);
        let want = Complex64::new(2.0, 0.0) / Complex64::new(1.5, tp);
        assert_relative_eq!((m - want).norm(), 0.0, epsilon = 1e-15);

        let m = pareto2().mellin(0.5, t);
        let want = Complex64::new(1.0, 0.0) / Complex64::new(1.5, -tp);
        assert_relative_eq!((m - want).norm(), 0.0, epsilon = 1e-15);

        let m = ln01().mellin(0.5, t);
        let want = (Complex64::new(-0.5, tp).powi(2) / 2.0).exp();
        assert_relative_eq!((m - want).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn moment_bound_on_transform_modulus() {
        let c = 0.5;
        for d in [ln01(), pareto2(), Density::PowerLaw2x] {
            let bound = d.moment(c - 1.0).finite().unwrap();
            for i in 0..200 {
                let t = -10.0 + 0.1 * i as f64;
                assert!(
                    d.mellin(c, t).norm() <= bound * (1.0 + 1e-12),
                    "modulus bound violated for {d} at t = {t}"
                );
            }
        }
    }

    #[test]
    fn mellin_numeric_t0_values() {
        // PowerLaw2x at c = 1/2, t = 0: ∫_0^1 2 x^{1/2} dx = 4/3.
        let v: Complex64 =
            mellin_numeric(|x| Density::PowerLaw2x.pdf(x), 0.5, 0.0, 1e-10).unwrap();
        assert_relative_eq!(v.re, 4.0 / 3.0, max_relative = 1e-8);
        assert!(v.im.abs() < 1e-12);

        // Pareto at t = 0: 1/1.5 = 2/3.
        let v = mellin_numeric(|x| pareto2().pdf(x), 0.5, 0.0, 1e-10).unwrap();
        assert_relative_eq!(v.re, 2.0 / 3.0, max_relative = 1e-8);

        // LogNormal at t = 0: e^{1/8}.
        let v = mellin_numeric(|x| ln01().pdf(x), 0.5, 0.0, 1e-10).unwrap();
        assert_relative_eq!(v.re, (0.125f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn mellin_numeric_matches_closed_forms_off_zero() {
        for d in [ln01(), pareto2(), Density::PowerLaw2x] {
            for t in [0.25, 1.0] {
                let numeric = mellin_numeric(|x| d.pdf(x), 0.5, t, 1e-10).unwrap();
                let closed = d.mellin(0.5, t);
                let err = (numeric - closed).norm();
                let tol = 1e-6 * closed.norm().max(1e-12);
                assert!(err <= tol, "{d} at t={t}: err {err:e} > tol {tol:e}");
            }
        }
    }

    #[test]
    fn mellin_product_is_pointwise_product() {
        let problem = sec6_problem();
        let d = Density::PowerLaw2x;
        let t = 0.4;
        let v = mellin_product(&problem, &d, t).unwrap();
        let want = d.mellin(0.5, t) * pareto2().mellin(0.5, t);
        assert_relative_eq!((v - want).norm(), 0.0, epsilon = 1e-16);
        // t = 0 product of the catalogued values: e^{1/8} * 2/3.
        let v = mellin_product(&problem, &ln01(), 0.0).unwrap();
        assert_relative_eq!(v.re, (0.125f64).exp() * 2.0 / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn convolution_theorem_against_explicit_convolution_density() {
        // PowerLaw2x ∗ pareto:2 has the closed form (2/3) min(1,y)³ / y².
        let problem = sec6_problem();
        let conv = |y: f64| {
            if y <= 0.0 {
                0.0
            } else {
                2.0 / 3.0 * y.min(1.0).powi(3) / (y * y)
            }
        };
        for t in [0.0, 0.25, 1.0] {
            let lhs = mellin_numeric(conv, 0.5, t, 1e-9).unwrap();
            let rhs = mellin_product(&problem, &Density::PowerLaw2x, t).unwrap();
            assert!(
                (lhs - rhs).norm() <= 1e-4,
                "convolution theorem violated at t = {t}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn weight_variants() {
        let w: WeightFunction<f64> = WeightFunction::Unit;
        assert_eq!(w.w2(3.4), 1.0);
        assert_eq!(w.decay_exponent(), 0.0);

        let w = WeightFunction::survival(0.5f64).unwrap();
        let t = 0.9;
        assert_relative_eq!(
            w.w2(t),
            1.0 / (0.25 + 4.0 * std::f64::consts::PI.powi(2) * t * t),
            max_relative = 1e-15
        );
        assert_eq!(w.decay_exponent(), -1.0);
        assert!(WeightFunction::survival(1.0f64).is_err());

        let w = WeightFunction::derivative(2, 0.5f64).unwrap();
        let p = |t: f64| {
            ((0.5 + 1.0f64).powi(2) + 4.0 * std::f64::consts::PI.powi(2) * t * t)
                * (0.5f64.powi(2) + 4.0 * std::f64::consts::PI.powi(2) * t * t)
        };
        assert_relative_eq!(w.w2(t), p(t), max_relative = 1e-15);
        assert_eq!(w.decay_exponent(), 2.0);
    }

    #[test]
    fn problem_rejects_invalid_lines() {
        // Pareto transform needs c < theta.
        assert!(TestProblem::new(2.5, WeightFunction::Unit, ln01(), pareto2()).is_err());
        // PowerLaw2x as null needs c > -1.
        assert!(TestProblem::new(
            -1.5,
            WeightFunction::Unit,
            Density::PowerLaw2x,
            pareto2()
        )
        .is_err());
        assert!(sec6_problem().c() == 0.5);
    }

    #[test]
    fn q2_truncated_zero_and_arctan_oracle() {
        let w = WeightFunction::Unit;
        let zero = q2_truncated(|_t| Complex64::new(0.0, 0.0), &w, 1.0, 1e-9).unwrap();
        assert!(zero.abs() < 1e-14);

        // |M_{1/2}[2x](t)|² = 4/(2.25 + 4π²t²), whose truncated integral has
        // the antiderivative (8/(3π)) atan(4πk/3).
        let d = Density::PowerLaw2x;
        for k in [0.5, 1.0, 7.0] {
            let v = q2_truncated(|t| d.mellin(0.5, t), &w, k, 1e-10).unwrap();
            let truth =
                8.0 / (3.0 * std::f64::consts::PI) * (4.0 * std::f64::consts::PI * k / 3.0).atan();
            assert_relative_eq!(v, truth, max_relative = 1e-9);
        }
    }

    #[test]
    fn q2_full_plancherel_for_each_catalog_density() {
        let w = WeightFunction::Unit;
        // ∫ h² x^{2c-1} dx at c = 1/2 computed by independent quadrature.
        for d in [ln01(), pareto2(), Density::PowerLaw2x] {
            let direct = integrate_halfline(|x| d.pdf(x).powi(2), 1e-10).unwrap();
            let via_transform = q2_full(|t| d.mellin(0.5, t), &w, 1e-9).unwrap();
            assert_relative_eq!(via_transform, direct, max_relative = 1e-6);
        }
    }

    #[test]
    fn q2_full_separation_value_for_reference_pair() {
        // Closed form by expanding ∫ (f₂ - f₀)² dx:
        //   ∫(2x)² dx = 4/3,   ∫ f₀² = e^{1/4}/(2√π),
        //   ∫ 2x f₀ = 2 e^{1/2} Φ(-1),
        // so the separation is 4/3 + e^{1/4}/(2√π) - 4 e^{1/2} Φ(-1) ≈ 0.649237.
        let truth = 4.0 / 3.0 + 0.25f64.exp() / (2.0 * std::f64::consts::PI.sqrt())
            - 4.0 * 0.5f64.exp() * standard_normal_cdf(-1.0);
        let f2 = Density::PowerLaw2x;
        let f0 = ln01();
        let v = q2_full(
            |t| f2.mellin(0.5, t) - f0.mellin(0.5, t),
            &WeightFunction::Unit,
            1e-9,
        )
        .unwrap();
        assert_relative_eq!(v, truth, max_relative = 1e-6);
        // Same density: separation is zero.
        let z = q2_full(
            |t| f0.mellin(0.5, t) - f0.mellin(0.5, t),
            &WeightFunction::Unit,
            1e-9,
        )
        .unwrap();
        assert!(z.abs() < 1e-13);
    }

    #[test]
    fn q2_full_detects_non_integrable_weight() {
        // |M[pareto]|² ~ t^{-2} against a derivative weight growing like t²:
        // the weighted integrand tends to a constant.
        let w = WeightFunction::derivative(1, 0.5f64).unwrap();
        let err = q2_full(|t| pareto2().mellin(0.5, t), &w, 1e-9);
        assert!(matches!(err, Err(Error::TailDivergence { .. })));
    }

    #[test]
    fn erf_reference_values() {
        // Hard-coded from standard tables.
        assert_relative_eq!(erf(0.5f64), 0.5204998778130465, max_relative = 1e-13);
        assert_relative_eq!(erf(1.0f64), 0.8427007929497149, max_relative = 1e-13);
        assert_relative_eq!(erf(2.0f64), 0.9953222650189527, max_relative = 1e-13);
        assert_relative_eq!(
            standard_normal_cdf(-1.0f64),
            0.15865525393145705,
            max_relative = 1e-12
        );
        assert_relative_eq!(erf(-1.0f64), -0.8427007929497149, max_relative = 1e-13);
    }

    #[test]
    fn samplers_are_positive_and_bounded_where_expected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [ln01(), pareto2(), Density::PowerLaw2x] {
            for _ in 0..2000 {
                let x: f64 = d.sample(&mut rng);
                assert!(x > 0.0, "{d} produced non-positive draw");
                if let Density::Pareto { .. } = d {
                    assert!(x >= 1.0);
                }
                if let Density::PowerLaw2x = d {
                    assert!(x <= 1.0);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn hermitian_symmetry(t in -20.0f64..20.0) {
            for d in [ln01(), pareto2(), Density::PowerLaw2x] {
                let plus = d.mellin(0.5, t);
                let minus = d.mellin(0.5, -t);
                prop_assert!((minus - plus.conj()).norm() <= 1e-12 * (1.0 + plus.norm()));
            }
        }

        #[test]
        fn weights_are_symmetric_and_nonnegative(t in -50.0f64..50.0) {
            let ws = [
                WeightFunction::Unit,
                WeightFunction::survival(0.5f64).unwrap(),
                WeightFunction::derivative(2, 0.5f64).unwrap(),
            ];
            for w in ws {
                prop_assert!(w.w2(t) >= 0.0);
                prop_assert!((w.w2(t) - w.w2(-t)).abs() <= 1e-12 * (1.0 + w.w2(t)));
            }
        }
    }
}

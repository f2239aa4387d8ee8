//! Deterministic quadrature and sup-norm search used by every statistical
//! module. No statistical content lives here.
//!
//! The workhorse is composite Gauss-Legendre quadrature of order 64 with
//! adaptive panel doubling: the panel count doubles until two successive
//! composite estimates agree to the requested relative tolerance (with a
//! small absolute floor guarding integrals near zero). All integrands in
//! this crate are smooth, so the high-order rule converges after very few
//! doublings.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default Gauss-Legendre order per panel.
pub const GAUSS_ORDER: usize = 64;

/// Maximum number of panel doublings before giving up.
pub const MAX_DOUBLINGS: u32 = 12;

/// Default relative tolerance used when a caller does not override it.
pub const DEFAULT_RELTOL: f64 = 1e-9;

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    // Three-term recurrence for P_n and its derivative.
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=order {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn gauss_legendre_f64(order: usize) -> Vec<(f64, f64)> {
    let mut pairs = Vec::with_capacity(order);
    let half = order.div_ceil(2);
    for i in 0..half {
        // Tricomi-style initial guess, then Newton.
        let mut x =
            (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(order, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(order, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        pairs.push((-x, w));
    }
    // Mirror to cover the full node set (drop the duplicate at 0 for odd order).
    for i in (0..half).rev() {
        let (x, w) = pairs[i];
        if x.abs() > 1e-300 {
            pairs.push((-x, w));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs
}

fn gl64_master() -> &'static Vec<(f64, f64)> {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_f64(GAUSS_ORDER))
}

/// A Gauss-Legendre rule on the reference interval [-1, 1].
///
/// Invariants: nodes are strictly increasing and interior to the interval,
/// and the weights sum to the interval length 2.
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> QuadratureRule<T> {
    pub fn gauss_legendre(order: usize) -> Self {
        let pairs = if order == GAUSS_ORDER {
            gl64_master().clone()
        } else {
            gauss_legendre_f64(order)
        };
        QuadratureRule {
            nodes: pairs.iter().map(|&(x, _)| T::of(x)).collect(),
            weights: pairs.iter().map(|&(_, w)| T::of(w)).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

fn default_rule<T: Scalar>() -> QuadratureRule<T> {
    QuadratureRule::gauss_legendre(GAUSS_ORDER)
}

/// Quadrature nodes and weights tiling an interval with uniform panels.
///
/// Statistic evaluation shares one grid across several integrands so that
/// exact algebraic identities between them survive discretisation; the grid
/// is therefore part of the public surface.
#[derive(Debug, Clone)]
pub struct PanelGrid<T> {
    points: Vec<(T, T)>,
    panels: usize,
}

impl<T: Scalar> PanelGrid<T> {
    pub fn new(rule: &QuadratureRule<T>, a: T, b: T, panels: usize) -> Self {
        let mut points = Vec::with_capacity(panels * rule.order());
        let width = (b - a) / T::from_usize(panels).unwrap();
        let half = T::of(0.5) * width;
        for p in 0..panels {
            let left = a + T::from_usize(p).unwrap() * width;
            let mid = left + half;
            for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
                points.push((mid + half * x, half * w));
            }
        }
        PanelGrid { points, panels }
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    /// Integrates `N` integrands simultaneously on this grid.
    pub fn integrate_many<const N: usize>(
        &self,
        mut f: impl FnMut(T) -> [T; N],
    ) -> Result<[T; N]> {
        let mut acc = [T::zero(); N];
        for &(t, w) in &self.points {
            let values = f(t);
            for (a, v) in acc.iter_mut().zip(values) {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        what: "quadrature integrand".into(),
                        at: t.lossy_f64(),
                    });
                }
                *a += w * v;
            }
        }
        Ok(acc)
    }
}

fn abs_floor<T: Scalar>() -> T {
    // 1e-14 for f64; widened for narrower scalars so convergence stays reachable.
    T::of(1e-14).max(T::epsilon() * T::of(8.0))
}

fn converged<T: Scalar, const N: usize>(coarse: &[T; N], fine: &[T; N], reltol: T) -> bool {
    let floor = abs_floor::<T>();
    coarse
        .iter()
        .zip(fine)
        .all(|(&c, &f)| (f - c).abs() <= (reltol * f.abs()).max(floor))
}

/// Adaptive composite Gauss-Legendre integration of `N` integrands that
/// share one evaluation grid. Returns the estimates together with the final
/// grid so callers can evaluate further quantities on identical nodes.
pub fn integrate_many_adaptive<T: Scalar, const N: usize>(
    mut f: impl FnMut(T) -> [T; N],
    a: T,
    b: T,
    reltol: T,
) -> Result<([T; N], PanelGrid<T>)> {
    if !(a < b) {
        return Err(Error::InvalidParameter {
            name: "interval",
            reason: format!("need a < b, got [{}, {}]", a.lossy_f64(), b.lossy_f64()),
        });
    }
    if !(reltol > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "reltol",
            reason: "must be positive".into(),
        });
    }
    let rule = default_rule::<T>();
    let mut panels = 1usize;
    let mut grid = PanelGrid::new(&rule, a, b, panels);
    let mut coarse = grid.integrate_many(&mut f)?;
    for _ in 0..MAX_DOUBLINGS {
        panels *= 2;
        let fine_grid = PanelGrid::new(&rule, a, b, panels);
        let fine = fine_grid.integrate_many(&mut f)?;
        if converged(&coarse, &fine, reltol) {
            return Ok((fine, fine_grid));
        }
        coarse = fine;
        grid = fine_grid;
    }
    let gap = {
        let half = PanelGrid::new(&rule, a, b, panels / 2).integrate_many(&mut f)?;
        coarse
            .iter()
            .zip(half)
            .map(|(&f, c)| (f - c).abs())
            .fold(T::zero(), T::max)
    };
    let _ = grid;
    Err(Error::QuadratureDidNotConverge {
        estimate: coarse[0].lossy_f64(),
        gap: gap.lossy_f64(),
        doublings: MAX_DOUBLINGS,
    })
}

/// Composite Gauss-Legendre estimate of ∫_a^b f, panel count doubled until
/// successive estimates agree to `reltol` (relative, absolute floor 1e-14).
pub fn integrate_interval<T: Scalar>(
    f: impl Fn(T) -> T,
    a: T,
    b: T,
    reltol: T,
) -> Result<T> {
    let ([v], _) = integrate_many_adaptive(|t| [f(t)], a, b, reltol)?;
    Ok(v)
}

const MULTISCALE_SPLIT: f64 = 8.0;

/// Integrates f over [0, k], splitting the range dyadically above 8 so that
/// integrands with a sharp feature near zero and slow variation far out
/// converge segment by segment instead of demanding one globally fine panel
/// set. Intended for nonnegative integrands, where per-segment relative
/// control implies relative control of the total.
pub fn integrate_zero_to_k<T: Scalar>(
    f: impl Fn(T) -> T,
    k: T,
    reltol: T,
) -> Result<T> {
    let split = T::of(MULTISCALE_SPLIT);
    if k <= split * T::of(2.0) {
        return integrate_interval(&f, T::zero(), k, reltol);
    }
    let mut total = integrate_interval(&f, T::zero(), split, reltol)?;
    let mut lo = split;
    while lo < k {
        let hi = (lo * T::of(2.0)).min(k);
        total = total + integrate_interval(&f, lo, hi, reltol)?;
        lo = hi;
    }
    Ok(total)
}

const HALFLINE_INITIAL_T: f64 = 8.0;
const HALFLINE_MAX_GROWTH: u32 = 14;

/// Integrates f over (0, ∞) by the substitution x = exp(u), truncating the
/// transformed integral to [-T, T] and growing T until the tail increment is
/// negligible against the running estimate.
///
/// Divergent tails are detected by increments that fail to shrink.
pub fn integrate_halfline<T: Scalar>(f: impl Fn(T) -> T, reltol: T) -> Result<T> {
    let g = |u: T| {
        let x = u.exp();
        if x.is_infinite() || x <= T::zero() {
            // exp underflow/overflow: an integrable f has already decayed.
            T::zero()
        } else {
            f(x) * x
        }
    };
    let mut t_cut = T::of(HALFLINE_INITIAL_T);
    let mut total = integrate_interval(&g, -t_cut, t_cut, reltol)?;
    let floor = abs_floor::<T>();
    let mut prev_inc = T::infinity();
    let mut growing = 0u32;
    for _ in 0..HALFLINE_MAX_GROWTH {
        let next = t_cut * T::of(2.0);
        let left = integrate_interval(&g, -next, -t_cut, reltol)?;
        let right = integrate_interval(&g, t_cut, next, reltol)?;
        let inc = left + right;
        total = total + inc;
        t_cut = next;
        if inc.abs() <= (reltol * total.abs()).max(floor) {
            return Ok(total);
        }
        if inc.abs() >= prev_inc.abs() {
            growing += 1;
            if growing >= 2 {
                return Err(Error::TailDivergence {
                    context: format!(
                        "tail increments stopped shrinking near x = exp({})",
                        t_cut.lossy_f64()
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
            "estimate is not Cauchy in the truncation point after {} growth steps",
            HALFLINE_MAX_GROWTH
        ),
    })
}

/// Minimum grid resolution accepted by [`sup_on_interval`].
pub const MIN_SUP_GRID: usize = 64;

/// Default grid resolution for the sup search.
pub const DEFAULT_SUP_GRID: usize = 4096;

const GOLDEN_BRACKET_TOL: f64 = 1e-10;

/// Maximum of f over [0, k]: dense grid scan followed by golden-section
/// refinement around the best cell. Every use site in this crate applies it
/// to even functions of t, hence the one-sided interval.
pub fn sup_on_interval<T: Scalar>(f: impl Fn(T) -> T, k: T, grid: usize) -> Result<T> {
    if !(k > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "must be positive".into(),
        });
    }
    if grid < MIN_SUP_GRID {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!("need at least {MIN_SUP_GRID} probes, got {grid}"),
        });
    }
    let probe = |t: T| -> Result<T> {
        let v = f(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                what: "sup-search objective".into(),
                at: t.lossy_f64(),
            })
        }
    };
    let step = k / T::from_usize(grid - 1).unwrap();
    let mut best_i = 0usize;
    let mut best = probe(T::zero())?;
    for i in 1..grid {
        let t = step * T::from_usize(i).unwrap();
        let v = probe(t)?;
        if v > best {
            best = v;
            best_i = i;
        }
    }
    // Golden-section on the bracket spanning the neighbouring cells.
    let mut lo = step * T::from_usize(best_i.saturating_sub(1)).unwrap();
    let mut hi = (step * T::from_usize(best_i + 1).unwrap()).min(k);
    let inv_phi = T::of(0.618_033_988_749_894_9);
    let tol = T::of(GOLDEN_BRACKET_TOL) * T::one().max(k);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = probe(x1)?;
    let mut f2 = probe(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = probe(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = probe(x1)?;
        }
        best = best.max(f1).max(f2);
    }
    Ok(best)
}

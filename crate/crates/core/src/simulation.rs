//! Samplers, the Monte Carlo engine, empirical-quantile calibration, and
//! the reproduction harness for the reference experiment.
//!
//! Randomness contract: every replication draws from a ChaCha stream derived
//! from `(seed, stream_id)`. Streams are independent of worker scheduling,
//! so a simulation is bit-reproducible at any parallelism level.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::maxtest::delta_k_of_size;
use crate::mellin::{q2_full, Density, TestProblem, WeightFunction};
use crate::scalar::Scalar;
use crate::statistic::{statistic, Sample};
use crate::thresholds::{model_constants, tau_k, tau_k_bonferroni};

/// Stream ids at and above this offset are reserved for calibration runs;
/// the main replication loop uses ids starting at zero.
pub const CALIBRATION_STREAM_OFFSET: u64 = 1 << 33;

/// Seed plus stream-family offset; cheap to copy into worker threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngHandle {
    seed: u64,
    stream_base: u64,
}

impl RngHandle {
    pub fn new(seed: u64) -> Self {
        RngHandle {
            seed,
            stream_base: 0,
        }
    }

    /// A handle whose streams are disjoint from this one's (distinct bases).
    pub fn offset(self, delta: u64) -> Self {
        RngHandle {
            seed: self.seed,
            stream_base: self.stream_base.wrapping_add(delta),
        }
    }

    /// The generator for one replication.
    pub fn stream(self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_base.wrapping_add(index));
        rng
    }
}

/// Draws n independent products X·U.
pub fn draw_sample<T: Scalar, R: Rng + ?Sized>(
    density: &Density<T>,
    error: &Density<T>,
    n: usize,
    rng: &mut R,
) -> Result<Sample<T>> {
    Sample::new(
        (0..n)
            .map(|_| density.sample(rng) * error.sample(rng))
            .collect(),
    )
}

/// Empirical (1-α)-quantile of the null statistic at dimension k: simulates
/// `b` null samples of size n and returns the ⌈(1-α)·b⌉-th order statistic.
pub fn calibrate_quantile<T: Scalar>(
    problem: &TestProblem<T>,
    k: T,
    n: usize,
    alpha: T,
    b: usize,
    rng: RngHandle,
) -> Result<T> {
    let stats = calibrate_statistics(problem, &[k], n, b, rng)?;
    Ok(upper_order_statistic(&mut stats.into_iter().map(|row| row[0]).collect::<Vec<_>>(), alpha))
}

/// Null statistics for a whole k-grid from shared calibration samples:
/// row r holds the statistic of calibration sample r at each k.
fn calibrate_statistics<T: Scalar>(
    problem: &TestProblem<T>,
    k_grid: &[T],
    n: usize,
    b: usize,
    rng: RngHandle,
) -> Result<Vec<Vec<T>>> {
    if b < 100 {
        return Err(Error::InvalidParameter {
            name: "calib_B",
            reason: format!("need at least 100 calibration replications, got {b}"),
        });
    }
    let null = *problem.null();
    let error = *problem.error();
    (0..b)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.stream(i as u64);
            let sample = draw_sample(&null, &error, n, &mut stream)?;
            k_grid
                .iter()
                .map(|&k| Ok(statistic(&sample, problem, k)?.value))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// ⌈(1-α)·b⌉-th order statistic (1-indexed); the sample maximum as α → 0.
fn upper_order_statistic<T: Scalar>(values: &mut [T], alpha: T) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    let b = values.len();
    let rank = ((T::one() - alpha) * T::from_usize(b).unwrap())
        .ceil()
        .to_usize()
        .unwrap_or(b)
        .clamp(1, b);
    values[rank - 1]
}

/// Full simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub n: usize,
    pub reps: usize,
    pub k_grid: Vec<T>,
    pub alpha: T,
    pub seed: u64,
    pub scale: T,
    pub calib_b: usize,
    pub null_name: String,
    pub alt_name: String,
    pub error_name: String,
    pub c: T,
    pub weight: WeightFunction<T>,
}

impl<T: Scalar> SimConfig<T> {
    /// The shipped reference preset: log-normal null, unit-shape Pareto
    /// error, c = 1/2, unit weight, k-grid {0.5, 0.6, …, 1.4}, level 0.1,
    /// threshold scale 0.6, 50 replications. Example 1 draws from the null;
    /// example 2 from the 2x power-law alternative.
    pub fn paper_sec6(example: u8, n: usize) -> Result<Self> {
        let alt_name = match example {
            1 => "lognormal:0:1",
            2 => "powerlaw2x",
            _ => {
                return Err(Error::InvalidParameter {
                    name: "example",
                    reason: "preset defines examples 1 and 2".into(),
                })
            }
        };
        Ok(SimConfig {
            n,
            reps: 50,
            k_grid: (5..=14).map(|i| T::of(i as f64 / 10.0)).collect(),
            alpha: T::of(0.1),
            seed: 1,
            scale: T::of(0.6),
            calib_b: 2000,
            null_name: "lognormal:0:1".into(),
            alt_name: alt_name.into(),
            error_name: "pareto:2".into(),
            c: T::of(0.5),
            weight: WeightFunction::Unit,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::SampleTooSmall {
                n: self.n,
                required: 2,
            });
        }
        if self.reps == 0 {
            return Err(Error::InvalidParameter {
                name: "reps",
                reason: "need at least one replication".into(),
            });
        }
        if self.calib_b < 100 {
            return Err(Error::InvalidParameter {
                name: "calib_B",
                reason: format!("need at least 100, got {}", self.calib_b),
            });
        }
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: "level must lie in (0,1)".into(),
            });
        }
        if !(self.scale > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "scale",
                reason: "must be positive".into(),
            });
        }
        if self.k_grid.is_empty() {
            return Err(Error::CollectionEmpty);
        }
        for (index, pair) in self.k_grid.windows(2).enumerate() {
            if !(pair[0] < pair[1]) {
                return Err(Error::CollectionNotIncreasing { index: index + 1 });
            }
        }
        if !(self.k_grid[0] > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "k_grid",
                reason: "dimension parameters must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<TestProblem<T>> {
        TestProblem::new(
            self.c,
            self.weight,
            self.null_name.parse()?,
            self.error_name.parse()?,
        )
    }
}

/// One recorded statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatRow<T> {
    pub k: T,
    pub rep: usize,
    pub statistic: T,
}

/// Per-dimension thresholds (four flavours) and single-k rejection rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRow<T> {
    pub k: T,
    pub tau_theoretical: T,
    pub tau_bonferroni: T,
    pub q_emp: T,
    pub q_emp_max: T,
    pub rej_theoretical: T,
    pub rej_empirical: T,
}

/// Complete simulation output.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult<T> {
    pub rows: Vec<StatRow<T>>,
    pub thresholds: Vec<ThresholdRow<T>>,
    /// Mode label → rejection rate; includes both max-tests and the per-k
    /// single tests.
    pub rejection_rates: Vec<(String, T)>,
    pub separation_truth: T,
    pub delta_k: T,
}

impl<T: Scalar> SimResult<T> {
    pub fn rejection_rate(&self, mode: &str) -> Option<T> {
        self.rejection_rates
            .iter()
            .find(|(m, _)| m == mode)
            .map(|&(_, r)| r)
    }
}

/// Runs the experiment: per replication one sample of size n from the
/// alternative (which may equal the null), evaluated at every k; thresholds
/// of all four flavours per k; rejection rates of the single-k tests and of
/// both max-tests; and the true separation q²(alt - null).
pub fn run_simulation<T: Scalar>(config: &SimConfig<T>) -> Result<SimResult<T>> {
    config.validate()?;
    let problem = config.problem()?;
    let alt: Density<T> = config.alt_name.parse()?;
    if !alt.mellin_line_valid(config.c) {
        return Err(Error::MellinLineInvalid {
            density: alt.to_string(),
            c: config.c.lossy_f64(),
        });
    }
    let error = *problem.error();
    let size = config.k_grid.len();
    let delta = delta_k_of_size::<T>(size);
    let rng = RngHandle::new(config.seed);

    // Calibration: per-k empirical quantiles from shared null draws.
    let calib = calibrate_statistics(
        &problem,
        &config.k_grid,
        config.n,
        config.calib_b,
        rng.offset(CALIBRATION_STREAM_OFFSET),
    )?;
    let mut q_emp = Vec::with_capacity(size);
    for ki in 0..size {
        let mut column: Vec<T> = calib.iter().map(|row| row[ki]).collect();
        q_emp.push(upper_order_statistic(&mut column, config.alpha));
    }
    let q_emp_max: Vec<T> = q_emp.iter().map(|&q| q / delta).collect();

    // Main replications.
    let stats: Vec<Vec<T>> = (0..config.reps)
        .into_par_iter()
        .map(|rep| {
            let mut stream = rng.stream(rep as u64);
            let sample = draw_sample(&alt, &error, config.n, &mut stream)
                .map_err(|e| e.at_dimension(rep as f64))?;
            config
                .k_grid
                .iter()
                .map(|&k| {
                    Ok(statistic(&sample, &problem, k)
                        .map_err(|e| e.at_dimension(k.lossy_f64()))?
                        .value)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    // Explicit thresholds.
    let constants = model_constants(&problem, T::of(2.0))?;
    let reps_f = T::from_usize(config.reps).unwrap();
    let mut thresholds = Vec::with_capacity(size);
    let mut rejection_rates = Vec::new();
    let mut reject_any_theory = vec![false; config.reps];
    let mut reject_any_empirical = vec![false; config.reps];
    for (ki, &k) in config.k_grid.iter().enumerate() {
        let tau_theory = tau_k(&problem, &constants, k, config.n, config.alpha, config.scale)
            .map_err(|e| e.at_dimension(k.lossy_f64()))?;
        let tau_bonf = tau_k_bonferroni(
            &problem,
            &constants,
            k,
            config.n,
            config.alpha,
            size,
            config.scale,
        )
        .map_err(|e| e.at_dimension(k.lossy_f64()))?;
        let mut hits_theory = 0usize;
        let mut hits_empirical = 0usize;
        for (rep, row) in stats.iter().enumerate() {
            let v = row[ki];
            hits_theory += (v >= tau_theory) as usize;
            hits_empirical += (v >= q_emp[ki]) as usize;
            reject_any_theory[rep] |= v >= tau_bonf;
            reject_any_empirical[rep] |= v >= q_emp_max[ki];
        }
        let rej_theoretical = T::from_usize(hits_theory).unwrap() / reps_f;
        let rej_empirical = T::from_usize(hits_empirical).unwrap() / reps_f;
        thresholds.push(ThresholdRow {
            k,
            tau_theoretical: tau_theory,
            tau_bonferroni: tau_bonf,
            q_emp: q_emp[ki],
            q_emp_max: q_emp_max[ki],
            rej_theoretical,
            rej_empirical,
        });
        rejection_rates.push((
            format!("single_theoretical:k={}", k.lossy_f64()),
            rej_theoretical,
        ));
        rejection_rates.push((
            format!("single_empirical:k={}", k.lossy_f64()),
            rej_empirical,
        ));
    }
    let rate_of = |flags: &[bool]| {
        T::from_usize(flags.iter().filter(|&&b| b).count()).unwrap() / reps_f
    };
    rejection_rates.push(("maxtest_theoretical".into(), rate_of(&reject_any_theory)));
    rejection_rates.push(("maxtest_empirical".into(), rate_of(&reject_any_empirical)));

    // True separation in the weighted quadratic distance.
    let null: Density<T> = config.null_name.parse()?;
    let separation_truth = q2_full(
        |t| alt.mellin(config.c, t) - null.mellin(config.c, t),
        problem.weight(),
        T::of(1e-9),
    )?;

    let mut rows = Vec::with_capacity(size * config.reps);
    for (ki, &k) in config.k_grid.iter().enumerate() {
        for (rep, row) in stats.iter().enumerate() {
            rows.push(StatRow {
                k,
                rep,
                statistic: row[ki],
            });
        }
    }
    Ok(SimResult {
        rows,
        thresholds,
        rejection_rates,
        separation_truth,
        delta_k: delta,
    })
}

/// Locale-independent decimal rendering with 17 significant digits.
pub fn csv_number<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.lossy_f64())
}

/// Writes `stats.csv`, `thresholds.csv` and `summary.csv` into `dir`.
pub fn write_csvs<T: Scalar>(result: &SimResult<T>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut stats = fs::File::create(dir.join("stats.csv"))?;
    writeln!(stats, "k,rep,statistic")?;
    for row in &result.rows {
        writeln!(
            stats,
            "{},{},{}",
            csv_number(row.k),
            row.rep,
            csv_number(row.statistic)
        )?;
    }
    let mut thresholds = fs::File::create(dir.join("thresholds.csv"))?;
    writeln!(
        thresholds,
        "k,tau_theoretical,tau_bonferroni,q_emp,q_emp_max"
    )?;
    for row in &result.thresholds {
        writeln!(
            thresholds,
            "{},{},{},{},{}",
            csv_number(row.k),
            csv_number(row.tau_theoretical),
            csv_number(row.tau_bonferroni),
            csv_number(row.q_emp),
            csv_number(row.q_emp_max)
        )?;
    }
    let mut summary = fs::File::create(dir.join("summary.csv"))?;
    writeln!(summary, "mode,rejection_rate,separation_truth")?;
    for (mode, rate) in &result.rejection_rates {
        writeln!(
            summary,
            "{},{},{}",
            mode,
            csv_number(*rate),
            csv_number(result.separation_truth)
        )?;
    }
    Ok(())
}

fn quartiles<T: Scalar>(sorted: &[T], p: f64) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::of(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Self-contained vector boxplots of the statistic per k with triangle
/// markers for the four threshold flavours and a horizontal line at the true
/// separation. Thresholds above the plotted range are clamped to the top
/// edge so the structure stays visible.
pub fn write_boxplot_svg<T: Scalar>(result: &SimResult<T>, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let (w, h) = (880.0f64, 520.0f64);
    let (ml, mr, mt, mb) = (74.0f64, 22.0, 34.0, 48.0);
    let plot_w = w - ml - mr;
    let plot_h = h - mt - mb;
    let ks: Vec<f64> = result.thresholds.iter().map(|r| r.k.lossy_f64()).collect();
    let m = ks.len().max(1);

    let mut per_k: Vec<Vec<f64>> = vec![Vec::new(); m];
    for row in &result.rows {
        if let Some(i) = ks
            .iter()
            .position(|&k| (k - row.k.lossy_f64()).abs() < 1e-12)
        {
            per_k[i].push(row.statistic.lossy_f64());
        }
    }
    for column in &mut per_k {
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let sep = result.separation_truth.lossy_f64();
    let data_lo = per_k
        .iter()
        .filter_map(|c| c.first().copied())
        .fold(f64::INFINITY, f64::min)
        .min(0.0)
        .min(sep);
    let data_hi = per_k
        .iter()
        .filter_map(|c| c.last().copied())
        .fold(f64::NEG_INFINITY, f64::max)
        .max(sep);
    let emp_hi = result
        .thresholds
        .iter()
        .map(|r| r.q_emp_max.lossy_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    let span = (data_hi.max(emp_hi) - data_lo).max(1e-12);
    let lo = data_lo - 0.06 * span;
    let hi = data_hi.max(emp_hi) + 0.10 * span;
    let sy = |v: f64| -> f64 {
        let clamped = v.clamp(lo, hi);
        mt + plot_h * (hi - clamped) / (hi - lo)
    };
    let sx = |i: usize| -> f64 { ml + plot_w * (i as f64 + 0.5) / m as f64 };
    let box_w = (plot_w / m as f64 * 0.46).min(34.0);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + plot_h,
        ml + plot_w,
        mt + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + plot_h
    ));
    for i in 0..=5 {
        let v = lo + (hi - lo) * i as f64 / 5.0;
        let y = sy(v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{ml}\" y2=\"{y}\" stroke=\"black\"/>\n",
            ml - 4.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>\n",
            ml - 7.0,
            y + 3.5,
            v
        ));
    }
    // Separation line.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"#555\" \
         stroke-dasharray=\"6 4\" class=\"separation\"/>\n",
        sy(sep),
        ml + plot_w
    ));
    // Boxes, whiskers, medians, threshold triangles.
    let colors = ["#1f3b99", "#7f9ae6", "#5b3318", "#c49a6c"];
    for (i, column) in per_k.iter().enumerate() {
        let x = sx(i);
        if !column.is_empty() {
            let q1 = quartiles(column, 0.25);
            let q2 = quartiles(column, 0.5);
            let q3 = quartiles(column, 0.75);
            let (min, max) = (column[0], *column.last().unwrap());
            svg.push_str(&format!(
                "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
                sy(max),
                sy(q3)
            ));
            svg.push_str(&format!(
                "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
                sy(q1),
                sy(min)
            ));
            for v in [min, max] {
                svg.push_str(&format!(
                    "<line x1=\"{x1:.2}\" y1=\"{y:.2}\" x2=\"{x2:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
                    x1 = x - box_w / 3.0,
                    y = sy(v),
                    x2 = x + box_w / 3.0
                ));
            }
            svg.push_str(&format!(
                "<rect class=\"box\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" \
                 fill=\"#e8e8f2\" stroke=\"black\"/>\n",
                x - box_w / 2.0,
                sy(q3),
                box_w,
                (sy(q1) - sy(q3)).max(0.5)
            ));
            svg.push_str(&format!(
                "<line x1=\"{x1:.2}\" y1=\"{y:.2}\" x2=\"{x2:.2}\" y2=\"{y:.2}\" stroke=\"black\" \
                 stroke-width=\"1.6\"/>\n",
                x1 = x - box_w / 2.0,
                y = sy(q2),
                x2 = x + box_w / 2.0
            ));
        }
        let row = &result.thresholds[i];
        let marks = [
            row.tau_theoretical.lossy_f64(),
            row.tau_bonferroni.lossy_f64(),
            row.q_emp.lossy_f64(),
            row.q_emp_max.lossy_f64(),
        ];
        for (j, (&v, color)) in marks.iter().zip(colors).enumerate() {
            let xo = x - 16.5 + 11.0 * j as f64;
            let y = sy(v);
            svg.push_str(&format!(
                "<polygon class=\"threshold\" points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" \
                 fill=\"{color}\"/>\n",
                xo - 4.5,
                y - 8.0,
                xo + 4.5,
                y - 8.0,
                xo,
                y
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            mt + plot_h + 16.0,
            ks[i]
        ));
    }
    // Legend with the max-test rejection rates in brackets.
    let legend = [
        ("explicit", 0),
        ("explicit max", 1),
        ("empirical", 2),
        ("empirical max", 3),
    ];
    let rate = |mode: &str| {
        result
            .rejection_rate(mode)
            .map(|r| format!(" ({:.2})", r.lossy_f64()))
            .unwrap_or_default()
    };
    for (j, (name, ci)) in legend.iter().enumerate() {
        let lx = ml + plot_w - 150.0;
        let ly = mt + 8.0 + 15.0 * j as f64;
        svg.push_str(&format!(
            "<polygon points=\"{:.1},{:.1} {:.1},{:.1} {:.1},{:.1}\" fill=\"{}\"/>\n",
            lx - 4.0,
            ly - 7.0,
            lx + 4.0,
            ly - 7.0,
            lx,
            ly,
            colors[*ci]
        ));
        let suffix = match *name {
            "explicit max" => rate("maxtest_theoretical"),
            "empirical max" => rate("maxtest_empirical"),
            _ => String::new(),
        };
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{name}{suffix}</text>\n",
            lx + 9.0,
            ly
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">k</text>\n",
        ml + plot_w / 2.0,
        h - 12.0
    ));
    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(())
}

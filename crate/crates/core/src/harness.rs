//! Assembly of the main-term prediction `σ_∞ σ L^{d-2}`, convergence
//! tables against exact counts, and the module-level bound-check suites.

use std::f64::consts::PI;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::arith::{euler_phi, gcd_u64, mod_inverse};
use crate::counter::{enumerate_n_l, CountOptions, CountResult, DEFAULT_BUDGET};
use crate::delta_kernel::{h, DeltaKernel};
use crate::error::{arg, QcError, Result};
use crate::exp_sums::{
    local_density, ramanujan, s_q_factored, s_q_naive, sigma_dirichlet, sigma_euler_capped, sigma_euler_remark5,
    twist_vector, SigmaReport,
};
use crate::forms::{LatticeSpec, QuadraticFormF0};
use crate::quadrature::composite_rule;
use crate::sing_integral::{
    gaussian_closed_form, i_x_projection, i_x_projection_fn, i_y_projection, sigma_infty_with_error,
    IntegrandHints, QuadratureConfig,
};
use crate::summation::NeumaierSum;
use crate::weights::{Weight, WeightFamily, WeightFunction};

/// Truncation parameters of the singular series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoffs {
    /// Prime cutoff `P` of the Euler products.
    pub primes: u64,
    /// Modulus cutoff `X` of the Dirichlet sum.
    pub q: u64,
    /// Largest prime-power level in each local factor (`None`: as many as
    /// `rel_tol` requires).
    pub l: Option<u32>,
    /// Relative tolerance for the level truncation of each local factor.
    pub rel_tol: f64,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Self { primes: 10_000, q: 100_000, l: None, rel_tol: 1e-15 }
    }
}

/// One of the two singular-series variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SigmaVariant {
    /// Product of the definitional local series.
    Definitional,
    /// Product of the modulo-`p` densities.
    Remark5,
}

impl SigmaVariant {
    pub fn name(&self) -> &'static str {
        match self {
            SigmaVariant::Definitional => "definitional",
            SigmaVariant::Remark5 => "remark5",
        }
    }
}

/// `(N1, N2, N3)` of the main theorem; known for `epsilon >= 1/2`, where the
/// `epsilon = 1/2` values apply.
pub fn theorem_constants(d: usize, epsilon: f64) -> Option<(u32, u32, u32)> {
    if epsilon < 0.5 {
        return None;
    }
    let d = d as u32;
    let n1 = 2 * d * d - 2 * d;
    let n2 = 7 * (d + 1);
    Some((n1, n2, n1 + 3 * d + 4))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub d: usize,
    pub m: f64,
    pub l: f64,
    pub sigma_infty: f64,
    /// `|σ_∞(refined) - σ_∞|`.
    pub sigma_infty_error: f64,
    pub sigma_remark5: f64,
    pub sigma_remark5_tail: f64,
    pub sigma_definitional: f64,
    pub sigma_definitional_tail: f64,
    pub main_term_r5: f64,
    pub main_term_def: f64,
    /// `L^{d/2+ε} (‖w‖_{n1,N2} + ‖w‖_{0,N3})` with `n1 = envelope_norm_order`
    /// and unit implied constant.
    pub error_envelope: f64,
    /// Derivative order used in the envelope norms (at most 2).
    pub envelope_norm_order: usize,
    pub epsilon: f64,
    pub theorem_constants: Option<(u32, u32, u32)>,
}

impl PredictionReport {
    pub fn main_term(&self, variant: SigmaVariant) -> f64 {
        match variant {
            SigmaVariant::Definitional => self.main_term_def,
            SigmaVariant::Remark5 => self.main_term_r5,
        }
    }
}

/// The `L`-independent ingredients of a prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularData {
    pub sigma_infty: f64,
    pub sigma_infty_error: f64,
    pub remark5: SigmaReport,
    pub definitional: SigmaReport,
}

/// Both singular-series variants at `t`.
pub fn singular_series(d1: usize, t: i64, cutoffs: &Cutoffs) -> Result<(SigmaReport, SigmaReport)> {
    let r5 = sigma_euler_remark5(cutoffs.primes, d1, t)?;
    let def = sigma_euler_capped(cutoffs.primes, 2 * d1, t, cutoffs.rel_tol, cutoffs.l)?;
    Ok((r5, def))
}

/// `σ_∞(w; m)` and both singular series at `t`.
pub fn singular_data(
    w: &WeightFunction,
    m: f64,
    t: i64,
    cutoffs: &Cutoffs,
    cfg: &QuadratureConfig,
) -> Result<SingularData> {
    let (sigma_infty, sigma_infty_error) = if matches!(w.family(), WeightFamily::Zero) {
        (0.0, 0.0)
    } else {
        sigma_infty_with_error(w, m, cfg)?
    };
    let (remark5, definitional) = singular_series(w.d1(), t, cutoffs)?;
    Ok(SingularData { sigma_infty, sigma_infty_error, remark5, definitional })
}

fn check_pipeline(d1: usize) -> Result<()> {
    QuadraticFormF0::new(d1)?.ensure_pipeline()
}

/// Prediction from precomputed singular data.
pub fn predict_with(
    w: &WeightFunction,
    spec: &LatticeSpec,
    data: &SingularData,
    epsilon: f64,
) -> Result<PredictionReport> {
    let d1 = w.d1();
    check_pipeline(d1)?;
    if !(epsilon > 0.0) {
        return arg("epsilon must be positive");
    }
    let d = 2 * d1;
    let l = spec.l();
    let scale = l.powi(d as i32 - 2);
    let constants = theorem_constants(d, epsilon);
    let (n2, n3) = match constants.or_else(|| theorem_constants(d, 0.5)) {
        Some((_, n2, n3)) => (n2 as f64, n3 as f64),
        None => unreachable!(),
    };
    let order = 2;
    let norms = w.norm_bound(order, n2)? + w.norm_bound(0, n3)?;
    Ok(PredictionReport {
        d,
        m: spec.m(),
        l,
        sigma_infty: data.sigma_infty,
        sigma_infty_error: data.sigma_infty_error,
        sigma_remark5: data.remark5.value,
        sigma_remark5_tail: data.remark5.tail_bound,
        sigma_definitional: data.definitional.value,
        sigma_definitional_tail: data.definitional.tail_bound,
        main_term_r5: data.sigma_infty * data.remark5.value * scale,
        main_term_def: data.sigma_infty * data.definitional.value * scale,
        error_envelope: l.powf(d as f64 / 2.0 + epsilon) * norms,
        envelope_norm_order: order,
        epsilon,
        theorem_constants: constants,
    })
}

/// `σ_∞ σ L^{d-2}` for both σ variants, with the error envelope.
pub fn predict(
    w: &WeightFunction,
    spec: &LatticeSpec,
    cutoffs: &Cutoffs,
    cfg: &QuadratureConfig,
    epsilon: f64,
) -> Result<PredictionReport> {
    check_pipeline(w.d1())?;
    let data = singular_data(w, spec.m(), spec.t(), cutoffs, cfg)?;
    predict_with(w, spec, &data, epsilon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub l: f64,
    pub exact: f64,
    pub predicted_def: f64,
    pub predicted_r5: f64,
    /// `exact / predicted_def`; NaN when the prediction is 0.
    pub ratio_def: f64,
    pub ratio_r5: f64,
    /// Slope of `ln|exact - predicted|` against `ln L` over this and all
    /// smaller `L`, for the variant named by the verdict.
    pub fitted_error_exponent: Option<f64>,
    pub tail_estimate: f64,
    pub visited: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySummary {
    /// Variants whose extrapolated ratio limit lies within
    /// [`LIMIT_TOLERANCE`] of 1.
    pub converging: Vec<SigmaVariant>,
    /// The converging variant whose limit is closest to 1.
    pub best: Option<SigmaVariant>,
    /// `a` of the least-squares fit `ratio = a + b / L`.
    pub limit_def: Option<f64>,
    pub limit_r5: Option<f64>,
    /// Whether `|ratio - 1|` strictly decreases over the fitted rows.
    pub monotone_def: bool,
    pub monotone_r5: bool,
    pub fitted_exponent_def: Option<f64>,
    pub fitted_exponent_r5: Option<f64>,
    pub final_deviation_def: f64,
    pub final_deviation_r5: f64,
    /// `d/2 + ε`.
    pub predicted_exponent: f64,
}

impl VerifySummary {
    pub fn fitted_exponent(&self, v: SigmaVariant) -> Option<f64> {
        match v {
            SigmaVariant::Definitional => self.fitted_exponent_def,
            SigmaVariant::Remark5 => self.fitted_exponent_r5,
        }
    }

    pub fn limit(&self, v: SigmaVariant) -> Option<f64> {
        match v {
            SigmaVariant::Definitional => self.limit_def,
            SigmaVariant::Remark5 => self.limit_r5,
        }
    }

    pub fn verdict(&self) -> String {
        match self.best {
            Some(v) => format!(
                "ratio converges to 1 with the {} singular series (extrapolated limit {:.6}, final |ratio-1| = {:.6})",
                v.name(),
                self.limit(v).unwrap_or(f64::NAN),
                match v {
                    SigmaVariant::Definitional => self.final_deviation_def,
                    SigmaVariant::Remark5 => self.final_deviation_r5,
                }
            ),
            None => "no singular-series variant shows a ratio converging to 1".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub prediction: PredictionReport,
    pub rows: Vec<ConvergenceRow>,
    pub summary: VerifySummary,
}

/// Inputs of [`verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub m: f64,
    pub l_list: Vec<f64>,
    pub eps: f64,
    pub budget: f64,
    pub epsilon: f64,
    pub cutoffs: Cutoffs,
}

impl VerifyConfig {
    pub fn new(m: f64, l_list: Vec<f64>) -> Self {
        Self { m, l_list, eps: 1e-12, budget: DEFAULT_BUDGET, epsilon: 0.5, cutoffs: Cutoffs::default() }
    }
}

/// Least-squares slope of `ln y` against `ln x` over the points with
/// `y > 0`; `None` with fewer than two such points.
pub fn fit_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn ratio(exact: f64, predicted: f64) -> f64 {
    if predicted == 0.0 {
        f64::NAN
    } else {
        exact / predicted
    }
}

/// Largest distance from 1 of an extrapolated ratio limit counted as
/// convergence.
pub const LIMIT_TOLERANCE: f64 = 0.02;

/// Rows entering the trend analysis: all past the first when there are at
/// least three.
fn fitted_rows<T: Copy>(v: &[T]) -> &[T] {
    if v.len() >= 3 {
        &v[1..]
    } else {
        v
    }
}

/// `a` of the least-squares fit `ratio = a + b / L`.
pub fn extrapolate_ratio(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(l, r)| *l > 0.0 && r.is_finite())
        .map(|&(l, r)| (1.0 / l, r))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| my - sxy / sxx * mx)
}

fn strictly_decreasing(devs: &[f64]) -> bool {
    devs.len() >= 2 && devs.iter().all(|d| d.is_finite()) && devs.windows(2).all(|p| p[1] < p[0])
}

/// Exact counts against predictions for every `L` in `cfg.l_list`, rows in
/// ascending `L`.
pub fn verify(w: &WeightFunction, cfg: &VerifyConfig, quad: &QuadratureConfig) -> Result<VerifyReport> {
    verify_with_progress(w, cfg, quad, |_| {})
}

/// [`verify`] reporting each finished row.
pub fn verify_with_progress<P: FnMut(&ConvergenceRow)>(
    w: &WeightFunction,
    cfg: &VerifyConfig,
    quad: &QuadratureConfig,
    mut progress: P,
) -> Result<VerifyReport> {
    let d1 = w.d1();
    check_pipeline(d1)?;
    if cfg.l_list.is_empty() {
        return arg("the list of L values is empty");
    }
    let mut ls = cfg.l_list.clone();
    ls.sort_by(f64::total_cmp);
    ls.dedup();
    let specs = ls.iter().map(|&l| LatticeSpec::new(l, cfg.m)).collect::<Result<Vec<_>>>()?;
    let sigma_infty = if matches!(w.family(), WeightFamily::Zero) {
        (0.0, 0.0)
    } else {
        sigma_infty_with_error(w, cfg.m, quad)?
    };
    let mut series_cache: Vec<(i64, SigmaReport, SigmaReport)> = Vec::new();
    let mut rows = Vec::with_capacity(specs.len());
    let mut last_prediction = None;
    for spec in &specs {
        let t = spec.t();
        let (r5, def) = match series_cache.iter().find(|e| e.0 == t) {
            Some(e) => (e.1.clone(), e.2.clone()),
            None => {
                let (r5, def) = singular_series(d1, t, &cfg.cutoffs)?;
                series_cache.push((t, r5.clone(), def.clone()));
                (r5, def)
            }
        };
        let data = SingularData {
            sigma_infty: sigma_infty.0,
            sigma_infty_error: sigma_infty.1,
            remark5: r5,
            definitional: def,
        };
        let pred = predict_with(w, spec, &data, cfg.epsilon)?;
        let opts = CountOptions { budget: cfg.budget, ..CountOptions::new(cfg.eps) };
        let count: CountResult = enumerate_n_l(w, spec, &opts)?;
        let row = ConvergenceRow {
            l: spec.l(),
            exact: count.value,
            predicted_def: pred.main_term_def,
            predicted_r5: pred.main_term_r5,
            ratio_def: ratio(count.value, pred.main_term_def),
            ratio_r5: ratio(count.value, pred.main_term_r5),
            fitted_error_exponent: None,
            tail_estimate: count.tail_estimate,
            visited: count.lattice_points_visited,
        };
        progress(&row);
        rows.push(row);
        last_prediction = Some(pred);
    }
    let devs = |f: fn(&ConvergenceRow) -> f64| rows.iter().map(|r| (f(r) - 1.0).abs()).collect::<Vec<_>>();
    let dev_def = devs(|r| r.ratio_def);
    let dev_r5 = devs(|r| r.ratio_r5);
    let errs = |f: fn(&ConvergenceRow) -> f64| rows.iter().map(|r| (r.l, (r.exact - f(r)).abs())).collect::<Vec<_>>();
    let err_def = errs(|r| r.predicted_def);
    let err_r5 = errs(|r| r.predicted_r5);
    let ratios = |f: fn(&ConvergenceRow) -> f64| rows.iter().map(|r| (r.l, f(r))).collect::<Vec<_>>();
    let limit_def = extrapolate_ratio(fitted_rows(&ratios(|r| r.ratio_def)));
    let limit_r5 = extrapolate_ratio(fitted_rows(&ratios(|r| r.ratio_r5)));
    let gap = |v: Option<f64>| v.map_or(f64::INFINITY, |a| (a - 1.0).abs());
    let mut converging = Vec::new();
    if gap(limit_def) <= LIMIT_TOLERANCE {
        converging.push(SigmaVariant::Definitional);
    }
    if gap(limit_r5) <= LIMIT_TOLERANCE {
        converging.push(SigmaVariant::Remark5);
    }
    let final_def = *dev_def.last().unwrap_or(&f64::NAN);
    let final_r5 = *dev_r5.last().unwrap_or(&f64::NAN);
    let best = converging.iter().copied().min_by(|a, b| {
        let la = if *a == SigmaVariant::Definitional { limit_def } else { limit_r5 };
        let lb = if *b == SigmaVariant::Definitional { limit_def } else { limit_r5 };
        gap(la).total_cmp(&gap(lb))
    });
    let chosen = best.unwrap_or(SigmaVariant::Definitional);
    let chosen_errs = if chosen == SigmaVariant::Definitional { &err_def } else { &err_r5 };
    for (i, row) in rows.iter_mut().enumerate() {
        row.fitted_error_exponent = fit_log_slope(&chosen_errs[..=i]);
    }
    let prediction = last_prediction.ok_or_else(|| QcError::Internal("no rows".into()))?;
    let summary = VerifySummary {
        converging,
        best,
        limit_def,
        limit_r5,
        monotone_def: strictly_decreasing(fitted_rows(&dev_def)),
        monotone_r5: strictly_decreasing(fitted_rows(&dev_r5)),
        fitted_exponent_def: fit_log_slope(&err_def),
        fitted_exponent_r5: fit_log_slope(&err_r5),
        final_deviation_def: final_def,
        final_deviation_r5: final_r5,
        predicted_exponent: prediction.d as f64 / 2.0 + cfg.epsilon,
    };
    Ok(VerifyReport { prediction, rows, summary })
}

/// The three singular-series computations side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaComparison {
    pub remark5: SigmaReport,
    pub euler: SigmaReport,
    pub dirichlet: SigmaReport,
    /// `|euler - dirichlet|`.
    pub euler_dirichlet_gap: f64,
    pub euler_dirichlet_tails: f64,
    /// `|remark5 - euler|`.
    pub remark5_euler_gap: f64,
    pub remark5_euler_tails: f64,
}

impl SigmaComparison {
    pub fn euler_dirichlet_agree(&self) -> bool {
        self.euler_dirichlet_gap <= self.euler_dirichlet_tails
    }

    /// True when the Remark-5 and definitional products differ by more than
    /// their tails.
    pub fn remark5_gap_flagged(&self) -> bool {
        self.remark5_euler_gap > self.remark5_euler_tails
    }
}

pub fn compare_sigma(d1: usize, t: i64, cutoffs: &Cutoffs) -> Result<SigmaComparison> {
    let (remark5, euler) = singular_series(d1, t, cutoffs)?;
    let dirichlet = sigma_dirichlet(cutoffs.q, 2 * d1, t)?;
    Ok(SigmaComparison {
        euler_dirichlet_gap: (euler.value - dirichlet.value).abs(),
        euler_dirichlet_tails: euler.tail_bound + dirichlet.tail_bound,
        remark5_euler_gap: (remark5.value - euler.value).abs(),
        remark5_euler_tails: remark5.tail_bound + euler.tail_bound,
        remark5,
        euler,
        dirichlet,
    })
}

/// Result of one property check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    /// The measured quantity (residual, fitted constant, difference).
    pub measured: f64,
    /// The threshold the measurement is compared with, if any.
    pub threshold: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    fn run<F: FnOnce() -> Result<(bool, f64, Option<f64>)>>(&mut self, suite: &'static str, name: &str, f: F) {
        let start = Instant::now();
        let (passed, measured, threshold) = match f() {
            Ok(v) => v,
            Err(_) => (false, f64::NAN, None),
        };
        self.entries.push(CheckEntry {
            suite,
            name: name.to_string(),
            passed,
            measured,
            threshold,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
}

pub const SUITES: [&str; 4] = ["kernel", "sums", "integral", "all"];

/// Runs the property checks of `suite` (`kernel`, `sums`, `integral` or
/// `all`).
pub fn check_bounds(suite: &str) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    match suite {
        "kernel" => kernel_checks(&mut report),
        "sums" => sums_checks(&mut report),
        "integral" => integral_checks(&mut report),
        "all" => {
            kernel_checks(&mut report);
            sums_checks(&mut report);
            integral_checks(&mut report);
        }
        other => return arg(format!("unknown suite '{other}' (expected one of {})", SUITES.join(", "))),
    }
    Ok(report)
}

/// `max_n |delta_sum(n) - δ(n)|` over `n ∈ [-n_max, n_max]`.
pub fn delta_residual(q: f64, n_max: i64) -> Result<f64> {
    let k = DeltaKernel::calibrated(q)?;
    let mut worst = 0.0f64;
    for n in -n_max..=n_max {
        let target = if n == 0 { 1.0 } else { 0.0 };
        worst = worst.max((k.delta_sum(n)? - target).abs());
    }
    Ok(worst)
}

/// Scan of `h` on `nx` points of `[x_min, x_max]` times `ny` points of
/// `[-y_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelScan {
    /// `max x |h(x, y)|`.
    pub constant: f64,
    /// Grid points with `x > max(1, 2|y|)` and `h != 0`.
    pub support_violations: usize,
    /// Grid points with `x > max(1, 2|y|)`.
    pub support_points: usize,
}

pub fn kernel_scan(x_min: f64, x_max: f64, nx: usize, y_max: f64, ny: usize) -> Result<KernelScan> {
    if nx < 2 || ny < 2 {
        return arg("the grid needs at least two points per axis");
    }
    let mut scan = KernelScan { constant: 0.0, support_violations: 0, support_points: 0 };
    for i in 0..nx {
        let x = x_min + (x_max - x_min) * i as f64 / (nx - 1) as f64;
        for j in 0..ny {
            let y = -y_max + 2.0 * y_max * j as f64 / (ny - 1) as f64;
            let v = h(x, y)?;
            scan.constant = scan.constant.max(x * v.abs());
            if x > 1f64.max(2.0 * y.abs()) {
                scan.support_points += 1;
                if v != 0.0 {
                    scan.support_violations += 1;
                }
            }
        }
    }
    Ok(scan)
}

/// `max_x |∫_{-X}^{X} y h(x, y) dy| / (X (X x^{N-1} + (x/X)^N))`, `N = 3`.
pub fn moment_constant(xs: &[f64], big_x: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for &x in xs {
        let mut breaks: Vec<f64> = (0..=64).map(|i| -big_x + 2.0 * big_x * i as f64 / 64.0).collect();
        breaks.extend([-x / 2.0, x / 2.0, 0.0]);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut acc = NeumaierSum::new();
        for (y, wt) in composite_rule(&breaks, 16) {
            acc.add(wt * y * h(x, y)?);
        }
        let scale = big_x * (big_x * x * x + (x / big_x).powi(3));
        worst = worst.max(acc.value().abs() / scale);
    }
    Ok(worst)
}

fn kernel_checks(r: &mut CheckReport) {
    r.run("kernel", "delta_sum exactness, Q = 20, |n| <= 50", || {
        let v = delta_residual(20.0, 50)?;
        Ok((v <= 1e-9, v, Some(1e-9)))
    });
    r.run("kernel", "c_Q(40) closer to 1 than c_Q(10)", || {
        let c40 = DeltaKernel::calibrated(40.0)?.c_q().unwrap_or(f64::NAN);
        let c10 = DeltaKernel::calibrated(10.0)?.c_q().unwrap_or(f64::NAN);
        Ok(((c40 - 1.0).abs() < (c10 - 1.0).abs(), (c40 - 1.0).abs(), Some((c10 - 1.0).abs())))
    });
    r.run("kernel", "support of h: zero for x > max(1, 2|y|)", || {
        let s = kernel_scan(0.01, 12.0, 400, 5.0, 200)?;
        Ok((s.support_violations == 0 && s.support_points > 0, s.support_violations as f64, Some(0.0)))
    });
    r.run("kernel", "x |h(x, y)| <= C, stable under grid doubling", || {
        let a = kernel_scan(0.01, 1.0, 200, 5.0, 200)?.constant;
        let b = kernel_scan(0.01, 1.0, 400, 5.0, 400)?.constant;
        Ok(((b / a - 1.0).abs() <= 0.1, a, Some(b)))
    });
    r.run("kernel", "first moment of h, fitted constant", || {
        let xs: Vec<f64> = (1..=10).map(|i| 0.02 * i as f64).collect();
        let c = moment_constant(&xs, 1.0)?;
        Ok((c.is_finite(), c, None))
    });
}

fn random_c(rng: &mut StdRng, d: usize, range: i64) -> Vec<i64> {
    (0..d).map(|_| rng.gen_range(-range..=range)).collect()
}

fn sums_checks(r: &mut CheckReport) {
    let f = QuadraticFormF0::new(3).expect("d1 = 3 is valid");
    r.run("sums", "|S_q(c)| <= C q^{d/2+1}, c_x . c_y = 0, q <= 200", || {
        let mut rng = StdRng::seed_from_u64(11);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let mut c = random_c(&mut rng, 6, 30);
            c[3..].iter_mut().for_each(|v| *v = 0);
            for q in 1..=200u64 {
                let s = s_q_factored(&f, q, &c, 0)?;
                worst = worst.max(s.value_complex.norm() / (q as f64).powi(4));
            }
        }
        Ok((worst <= 1.0 + 1e-9, worst, Some(1.0 + 1e-9)))
    });
    r.run("sums", "sum_{q <= X} |S_q(c)| <= C X^{d/2+2}, X <= 200", || {
        let mut rng = StdRng::seed_from_u64(12);
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let c = random_c(&mut rng, 6, 30);
            let mut acc = 0.0;
            for q in 1..=200u64 {
                acc += s_q_factored(&f, q, &c, 1)?.value_complex.norm();
                worst = worst.max(acc / (q as f64).powi(5));
            }
        }
        Ok((worst.is_finite(), worst, None))
    });
    r.run("sums", "multiplicativity, 50 coprime pairs q, q' <= 30 (exact)", || {
        let failures = multiplicativity_failures(50, 30, 13)?;
        Ok((failures == 0, failures as f64, Some(0.0)))
    });
    r.run("sums", "S_q(0) = q^3 c_q(t) for q <= 50 (exact)", || {
        let failures = s_q_zero_failures(50, &[0, 1, -1, 6, -6])?;
        Ok((failures == 0, failures as f64, Some(0.0)))
    });
    r.run("sums", "truncated local series = local density (exact)", || {
        let (ok, _) = local_density_identity(&[(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3), (5, 1), (5, 2)], &[0, 1])?;
        Ok((ok, if ok { 0.0 } else { 1.0 }, Some(0.0)))
    });
    r.run("sums", "S_q naive = factored, q <= 20, relative", || {
        let v = naive_vs_factored(20, 10, 21)?;
        Ok((v <= 1e-8, v, Some(1e-8)))
    });
}

/// Number of failures of the exact relation
/// `S_{q q'}(c) = S_q(q̄' c) S_{q'}(q̄ c)` over `pairs` random coprime pairs
/// `q, q' <= q_max` with `d = 6`, `c_y = 0` and random `t`.
pub fn multiplicativity_failures(pairs: usize, q_max: u64, seed: u64) -> Result<usize> {
    let f = QuadraticFormF0::new(3)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut failures = 0usize;
    let mut done = 0;
    while done < pairs {
        let q = rng.gen_range(1..=q_max);
        let qp = rng.gen_range(1..=q_max);
        if gcd_u64(q, qp) != 1 {
            continue;
        }
        let qbar = mod_inverse(q as i64, qp).unwrap_or(0);
        let qpbar = mod_inverse(qp as i64, q).unwrap_or(0);
        let mut c = random_c(&mut rng, 6, 20);
        c[3..].iter_mut().for_each(|v| *v = 0);
        let t = rng.gen_range(-10..=10);
        let lhs = s_q_factored(&f, q * qp, &c, t)?.value_exact;
        let a = s_q_factored(&f, q, &twist_vector(&c, qpbar), t)?.value_exact;
        let b = s_q_factored(&f, qp, &twist_vector(&c, qbar), t)?.value_exact;
        match (lhs, a, b) {
            (Some(l), Some(a), Some(b)) if l == &a * &b => {}
            _ => failures += 1,
        }
        done += 1;
    }
    Ok(failures)
}

/// Number of `(q, t)`, `q <= q_max`, with `S_q(0) != q^3 c_q(t)` as integers
/// (`d = 6`).
pub fn s_q_zero_failures(q_max: u64, ts: &[i64]) -> Result<usize> {
    let f = QuadraticFormF0::new(3)?;
    let mut failures = 0usize;
    for q in 1..=q_max {
        for &t in ts {
            let s = s_q_factored(&f, q, &[0; 6], t)?.value_exact;
            let expect = BigInt::from(q).pow(3) * ramanujan(q, t)?;
            if s != Some(expect) {
                failures += 1;
            }
        }
    }
    Ok(failures)
}

/// Checks `sum_{l <= k} p^{-6l} S_{p^l}(0) = local_density(p, k)` for
/// `d = 6`; returns the verdict and the number of compared pairs.
pub fn local_density_identity(cases: &[(u64, u32)], ts: &[i64]) -> Result<(bool, usize)> {
    let f = QuadraticFormF0::new(3)?;
    let mut ok = true;
    let mut n = 0;
    for &(p, k) in cases {
        for &t in ts {
            let mut series = BigRational::one();
            for l in 1..=k {
                let q = p.pow(l);
                let s = s_q_factored(&f, q, &[0; 6], t)?
                    .value_exact
                    .ok_or_else(|| QcError::Internal("S_q(0) has no exact value".into()))?;
                series += BigRational::new(s, BigInt::from(q).pow(6));
            }
            ok &= series == local_density(p, k, 3, t)?;
            n += 1;
        }
    }
    Ok((ok, n))
}

/// Largest `|naive - factored| / max(|factored|, q^3 φ(q))` over `q <= q_max`,
/// `n_c` random frequency vectors and `t ∈ {0, ±1, ±6}` for `d = 6`.
pub fn naive_vs_factored(q_max: u64, n_c: usize, seed: u64) -> Result<f64> {
    let f = QuadraticFormF0::new(3)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let cs: Vec<Vec<i64>> = (0..n_c).map(|_| random_c(&mut rng, 6, 50)).collect();
    let mut worst = 0.0f64;
    for q in 1..=q_max {
        let scale = (q as f64).powi(3) * euler_phi(q) as f64;
        for c in &cs {
            for t in [0i64, 1, -1, 6, -6] {
                let a = s_q_naive(&f, q, c, t)?.value_complex;
                let b = s_q_factored(&f, q, c, t)?.value_complex;
                worst = worst.max((a - b).norm() / b.norm().max(scale));
            }
        }
    }
    Ok(worst)
}

/// Weights used for the projection-symmetry checks.
pub fn projection_test_weights() -> Vec<WeightFunction> {
    vec![
        WeightFunction::gaussian(1.0, 3).expect("valid"),
        WeightFunction::shifted_gaussian(1.0, vec![0.3, -0.2, 0.1, 0.0, 0.25, -0.4]).expect("valid"),
        WeightFunction::appendix_example(3),
    ]
}

/// `|I_x(t) - I_y(t)|` for `w`.
pub fn projection_gap(w: &WeightFunction, t: f64) -> Result<f64> {
    let cfg = QuadratureConfig::for_weight(w);
    Ok((i_x_projection(w, t, &cfg)? - i_y_projection(w, t, &cfg)?).abs())
}

fn integral_checks(r: &mut CheckReport) {
    let g = WeightFunction::gaussian(1.0, 3).expect("valid");
    let cfg = QuadratureConfig::for_weight(&g);
    r.run("integral", "Gaussian closed form, t = 0 and t = 1", || {
        let a = (i_x_projection(&g, 0.0, &cfg)? - gaussian_closed_form(1.0, 3, 0.0)?).abs();
        let b = (i_x_projection(&g, 1.0, &cfg)? - gaussian_closed_form(1.0, 3, 1.0)?).abs();
        let v = a.max(b);
        Ok((v <= 1e-6, v, Some(1e-6)))
    });
    r.run("integral", "projection symmetry I_x = I_y, three weights, t in {0, 1, 2}", || {
        let mut worst = 0.0f64;
        for w in projection_test_weights() {
            for t in [0.0, 1.0, 2.0] {
                worst = worst.max(projection_gap(&w, t)?);
            }
        }
        Ok((worst <= 2e-6, worst, Some(2e-6)))
    });
    r.run("integral", "shear invariance: I(t) from w o L_t on Σ_0", || {
        let mut worst = 0.0f64;
        for t in [0.5, 1.0, -1.5] {
            let sheared = |z: &[f64]| {
                let (x, y) = z.split_at(3);
                let nx: f64 = x.iter().map(|v| v * v).sum();
                let mut zz = z.to_vec();
                if nx > 0.0 {
                    for i in 0..3 {
                        zz[3 + i] = y[i] + t * x[i] / nx;
                    }
                }
                Weight::value(&g, &zz)
            };
            let a = i_x_projection_fn(&sheared, 3, 0.0, &cfg, &IntegrandHints::default())?;
            let b = i_x_projection(&g, t, &cfg)?;
            worst = worst.max((a - b).abs());
        }
        Ok((worst <= 1e-6, worst, Some(1e-6)))
    });
    r.run("integral", "apex cutoff: halving r_min changes I by <= 1e-6", || {
        let mut worst = 0.0f64;
        let mut half = cfg.clone();
        half.r_min /= 2.0;
        for t in [0.0, 1.0] {
            worst = worst.max((i_x_projection(&g, t, &cfg)? - i_x_projection(&g, t, &half)?).abs());
        }
        Ok((worst <= 1e-6, worst, Some(1e-6)))
    });
    r.run("integral", "decay: |I(4)| <= |I(2)|", || {
        let a = i_x_projection(&g, 4.0, &cfg)?.abs();
        let b = i_x_projection(&g, 2.0, &cfg)?.abs();
        Ok((a <= b, a, Some(b)))
    });
}

/// `4π K1(2π)`, the `d1 = 3`, `a = 1`, `t = 1` Gaussian value.
pub fn gaussian_i_at_one() -> f64 {
    4.0 * PI * crate::special::bessel_k1(2.0 * PI)
}

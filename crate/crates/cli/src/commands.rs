//! The `qc` subcommands. Each returns its CSV text; diagnostics go to
//! standard error.

use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};

use qc_core::counter::{enumerate_n_l, CountOptions, DEFAULT_BUDGET};
use qc_core::delta_kernel::DeltaKernel;
use qc_core::exp_sums::{
    s_q_factored, s_q_literal, s_q_naive, sigma_dirichlet, sigma_euler_capped, sigma_euler_remark5, sigma_p_capped,
};
use qc_core::format::{fmt_e, fmt_opt, Csv};
use qc_core::harness::{self, CheckReport, VerifyConfig};
use qc_core::sing_integral::{i_grid, sigma_infty, sigma_infty_with_error, QuadratureConfig};
use qc_core::{LatticeSpec, QuadraticFormF0, WeightFunction};

use crate::config::{ConfigFile, CutoffArgs, QuadratureArgs};
use crate::CliError;

/// Default relative tolerance of each local factor.
const SIGMA_P_REL_TOL: f64 = 1e-15;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact weighted lattice count N_L(w; F0, m).
    Count(CountArgs),
    /// Main-term prediction with both singular-series variants.
    Predict(PredictArgs),
    /// Convergence table of exact counts against the predictions.
    Verify(VerifyArgs),
    /// Truncated singular series.
    Sigma(SigmaArgs),
    /// One local factor sigma_p.
    #[command(name = "sigma-p")]
    SigmaP(SigmaPArgs),
    /// Singular integral sigma_infinity(w; F0, m).
    #[command(name = "sigma-infty")]
    SigmaInfty(SigmaInftyArgs),
    /// The function I(t) on a uniform grid.
    #[command(name = "i-grid")]
    IGrid(IGridArgs),
    /// The complete exponential sum S_q(c).
    #[command(name = "gauss-sum")]
    GaussSum(GaussSumArgs),
    /// The smooth delta identity at scale Q.
    Delta(DeltaArgs),
    /// Property-check suites.
    Check(CheckArgs),
}

/// Problem parameters shared by several commands.
#[derive(Debug, Clone, Default, Args)]
pub struct ProblemArgs {
    /// Half-dimension d1 (d = 2 d1).
    #[arg(long)]
    pub d1: Option<usize>,
    /// Level m of the quadric x . y = m.
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    /// Weight specification, e.g. gaussian:a=1 or appendix-example.
    #[arg(long)]
    pub weight: Option<String>,
}

impl ProblemArgs {
    fn d1(&self, file: &ConfigFile) -> Result<usize, CliError> {
        self.d1.or(file.d1).ok_or_else(|| CliError::Usage("--d1 is required".into()))
    }

    fn m(&self, file: &ConfigFile) -> f64 {
        self.m.or(file.m).unwrap_or(0.0)
    }

    fn weight(&self, file: &ConfigFile, d1: usize) -> Result<WeightFunction, CliError> {
        let spec = self
            .weight
            .clone()
            .or_else(|| file.weight.clone())
            .ok_or_else(|| CliError::Usage("--weight is required".into()))?;
        Ok(WeightFunction::parse(&spec, d1)?)
    }
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Lattice scale L.
    #[arg(long = "L")]
    pub l: Option<f64>,
    /// Integer level t = m L^2 (instead of --m).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "m")]
    pub t: Option<i64>,
    /// Weight decay threshold defining the truncation radius.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Largest predicted number of visited lattice points.
    #[arg(long)]
    pub budget: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Lattice scale L.
    #[arg(long = "L")]
    pub l: Option<f64>,
    /// Exponent epsilon of the error term.
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[command(flatten)]
    pub cutoffs: CutoffArgs,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated lattice scales.
    #[arg(long = "L-list", value_delimiter = ',')]
    pub l_list: Option<Vec<f64>>,
    /// Weight decay threshold defining the truncation radius.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Largest predicted number of visited lattice points per row.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Exponent epsilon of the error term.
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[command(flatten)]
    pub cutoffs: CutoffArgs,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SigmaMethodArg {
    Euler,
    Dirichlet,
    Remark5,
}

#[derive(Debug, Args)]
pub struct SigmaArgs {
    #[arg(long, value_enum)]
    pub method: SigmaMethodArg,
    /// Prime cutoff P (euler, remark5) or modulus cutoff X (dirichlet).
    #[arg(long)]
    pub cutoff: u64,
    /// Dimension d.
    #[arg(long)]
    pub d: usize,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    pub t: i64,
    /// Largest prime-power level in each local factor (euler).
    #[arg(long)]
    pub levels: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SigmaPArgs {
    #[arg(long)]
    pub p: u64,
    /// Dimension d.
    #[arg(long)]
    pub d: usize,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    pub t: i64,
    /// Relative tolerance for the level truncation.
    #[arg(long = "rel-tol", default_value_t = SIGMA_P_REL_TOL)]
    pub rel_tol: f64,
    /// Largest prime-power level.
    #[arg(long)]
    pub levels: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SigmaInftyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Also evaluate at the refined quadrature level and report the change.
    #[arg(long)]
    pub refine: bool,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
}

#[derive(Debug, Args)]
pub struct IGridArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Grid a:b:n (n equispaced points from a to b).
    #[arg(long, allow_hyphen_values = true)]
    pub t: String,
    #[command(flatten)]
    pub quadrature: QuadratureArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GaussSumMethod {
    Factored,
    Naive,
    Literal,
}

#[derive(Debug, Args)]
pub struct GaussSumArgs {
    #[arg(long)]
    pub q: u64,
    /// Comma-separated frequency vector of length 2 d1.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    pub c: Vec<i64>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    pub t: i64,
    #[arg(long)]
    pub d1: usize,
    #[arg(long, value_enum, default_value_t = GaussSumMethod::Factored)]
    pub method: GaussSumMethod,
}

#[derive(Debug, Args)]
pub struct DeltaArgs {
    /// Scale Q.
    #[arg(long = "Q")]
    pub q: f64,
    /// Integer range a:b (inclusive).
    #[arg(long, allow_hyphen_values = true)]
    pub n: String,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// One of kernel, sums, integral, all.
    #[arg(long)]
    pub suite: String,
}

/// Output of one command: CSV text, optional summary lines for standard
/// error, and whether every check passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub csv: String,
    pub summary: Vec<String>,
    pub passed: bool,
}

impl Output {
    fn csv(csv: Csv) -> Self {
        Self { csv: csv.into_string(), summary: Vec::new(), passed: true }
    }
}

pub fn run(command: &Command, config: Option<&PathBuf>) -> Result<Output, CliError> {
    let file = match config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match command {
        Command::Count(a) => count(a, &file),
        Command::Predict(a) => predict(a, &file),
        Command::Verify(a) => verify(a, &file),
        Command::Sigma(a) => sigma(a),
        Command::SigmaP(a) => sigma_p_cmd(a),
        Command::SigmaInfty(a) => sigma_infty_cmd(a, &file),
        Command::IGrid(a) => i_grid_cmd(a, &file),
        Command::GaussSum(a) => gauss_sum(a),
        Command::Delta(a) => delta(a),
        Command::Check(a) => check(a),
    }
}

fn require_l(l: Option<f64>, file: &ConfigFile) -> Result<f64, CliError> {
    l.or(file.l).ok_or_else(|| CliError::Usage("--L is required".into()))
}

fn count(a: &CountArgs, file: &ConfigFile) -> Result<Output, CliError> {
    let d1 = a.problem.d1(file)?;
    let w = a.problem.weight(file, d1)?;
    let l = require_l(a.l, file)?;
    let spec = match a.t {
        Some(t) => LatticeSpec::from_shift(l, t)?,
        None => LatticeSpec::new(l, a.problem.m(file))?,
    };
    let opts = CountOptions {
        budget: a.budget.or(file.budget).unwrap_or(DEFAULT_BUDGET),
        ..CountOptions::new(a.eps.or(file.eps).unwrap_or(1e-12))
    };
    let r = enumerate_n_l(&w, &spec, &opts)?;
    let mut csv = Csv::new(&["L", "m", "value", "tail_estimate", "visited"]);
    csv.row(&[
        fmt_e(spec.l()),
        fmt_e(spec.m()),
        fmt_e(r.value),
        fmt_e(r.tail_estimate),
        r.lattice_points_visited.to_string(),
    ]);
    Ok(Output::csv(csv))
}

fn predict(a: &PredictArgs, file: &ConfigFile) -> Result<Output, CliError> {
    let d1 = a.problem.d1(file)?;
    let w = a.problem.weight(file, d1)?;
    let spec = LatticeSpec::new(require_l(a.l, file)?, a.problem.m(file))?;
    let cutoffs = a.cutoffs.resolve(file);
    let quad = a.quadrature.resolve(file, QuadratureConfig::for_weight(&w))?;
    let p = harness::predict(&w, &spec, &cutoffs, &quad, a.epsilon)?;
    let mut csv = Csv::new(&[
        "d",
        "m",
        "L",
        "sigma_infty",
        "sigma_infty_error",
        "sigma_remark5",
        "sigma_remark5_tail",
        "sigma_definitional",
        "sigma_definitional_tail",
        "main_term_r5",
        "main_term_def",
        "error_envelope",
        "epsilon",
        "N1",
        "N2",
        "N3",
    ]);
    let consts = |i: usize| {
        p.theorem_constants
            .map_or("NA".to_string(), |c| [c.0, c.1, c.2][i].to_string())
    };
    csv.row(&[
        p.d.to_string(),
        fmt_e(p.m),
        fmt_e(p.l),
        fmt_e(p.sigma_infty),
        fmt_e(p.sigma_infty_error),
        fmt_e(p.sigma_remark5),
        fmt_e(p.sigma_remark5_tail),
        fmt_e(p.sigma_definitional),
        fmt_e(p.sigma_definitional_tail),
        fmt_e(p.main_term_r5),
        fmt_e(p.main_term_def),
        fmt_e(p.error_envelope),
        fmt_e(p.epsilon),
        consts(0),
        consts(1),
        consts(2),
    ]);
    Ok(Output::csv(csv))
}

fn verify(a: &VerifyArgs, file: &ConfigFile) -> Result<Output, CliError> {
    let d1 = a.problem.d1(file)?;
    let w = a.problem.weight(file, d1)?;
    let l_list = a
        .l_list
        .clone()
        .or_else(|| file.l_list.clone())
        .or_else(|| file.l.map(|l| vec![l]))
        .ok_or_else(|| CliError::Usage("--L-list is required".into()))?;
    let mut cfg = VerifyConfig::new(a.problem.m(file), l_list);
    cfg.eps = a.eps.or(file.eps).unwrap_or(cfg.eps);
    cfg.budget = a.budget.or(file.budget).unwrap_or(cfg.budget);
    cfg.epsilon = a.epsilon;
    cfg.cutoffs = a.cutoffs.resolve(file);
    let quad = a.quadrature.resolve(file, QuadratureConfig::for_weight(&w))?;
    let rep = harness::verify(&w, &cfg, &quad)?;
    let mut csv = Csv::new(&[
        "L",
        "exact",
        "predicted_def",
        "predicted_r5",
        "ratio_def",
        "ratio_r5",
        "fitted_error_exponent",
    ]);
    for r in &rep.rows {
        csv.row(&[
            fmt_e(r.l),
            fmt_e(r.exact),
            fmt_e(r.predicted_def),
            fmt_e(r.predicted_r5),
            fmt_e(r.ratio_def),
            fmt_e(r.ratio_r5),
            fmt_opt(r.fitted_error_exponent),
        ]);
    }
    let s = &rep.summary;
    let summary = vec![
        format!("verdict: {}", s.verdict()),
        format!(
            "sigma_definitional = {}, sigma_remark5 = {}, sigma_infty = {}",
            fmt_e(rep.prediction.sigma_definitional),
            fmt_e(rep.prediction.sigma_remark5),
            fmt_e(rep.prediction.sigma_infty)
        ),
        format!(
            "extrapolated ratio limit: definitional {}, remark5 {}",
            fmt_opt(s.limit_def),
            fmt_opt(s.limit_r5)
        ),
        format!(
            "fitted error exponent: definitional {}, remark5 {} (theorem: <= {})",
            fmt_opt(s.fitted_exponent_def),
            fmt_opt(s.fitted_exponent_r5),
            fmt_e(s.predicted_exponent)
        ),
    ];
    Ok(Output { csv: csv.into_string(), summary, passed: true })
}

fn sigma(a: &SigmaArgs) -> Result<Output, CliError> {
    let rep = match a.method {
        SigmaMethodArg::Euler => sigma_euler_capped(a.cutoff, a.d, a.t, SIGMA_P_REL_TOL, a.levels)?,
        SigmaMethodArg::Dirichlet => sigma_dirichlet(a.cutoff, a.d, a.t)?,
        SigmaMethodArg::Remark5 => {
            if a.d % 2 != 0 {
                return Err(CliError::Usage("d must be even".into()));
            }
            sigma_euler_remark5(a.cutoff, a.d / 2, a.t)?
        }
    };
    let mut csv = Csv::new(&["method", "cutoff", "value", "tail_bound"]);
    csv.row(&[
        rep.method.name().to_string(),
        rep.cutoff.to_string(),
        fmt_e(rep.value),
        fmt_e(rep.tail_bound),
    ]);
    Ok(Output::csv(csv))
}

fn sigma_p_cmd(a: &SigmaPArgs) -> Result<Output, CliError> {
    let f = sigma_p_capped(a.p, a.d, a.t, a.rel_tol, a.levels)?;
    let mut csv = Csv::new(&["p", "sigma_p", "l_max", "tail"]);
    csv.row(&[a.p.to_string(), fmt_e(f.value_f64()), f.l_max.to_string(), fmt_e(f.tail)]);
    Ok(Output { csv: csv.into_string(), summary: vec![format!("sigma_p = {} (exact)", f.value)], passed: true })
}

fn sigma_infty_cmd(a: &SigmaInftyArgs, file: &ConfigFile) -> Result<Output, CliError> {
    let d1 = a.problem.d1(file)?;
    let w = a.problem.weight(file, d1)?;
    let m = a.problem.m(file);
    let quad = a.quadrature.resolve(file, QuadratureConfig::for_weight(&w))?;
    let (value, err) = if a.refine {
        let (v, e) = sigma_infty_with_error(&w, m, &quad)?;
        (v, Some(e))
    } else {
        (sigma_infty(&w, m, &quad)?, None)
    };
    let mut csv = Csv::new(&["m", "value", "est_error"]);
    csv.row(&[fmt_e(m), fmt_e(value), fmt_opt(err)]);
    Ok(Output::csv(csv))
}

/// Parses `a:b:n` into `n` equispaced points.
pub fn parse_linspace(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Usage(format!("expected a:b:n, got '{s}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !(a.is_finite() && b.is_finite()) || (n > 1 && b <= a) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

/// Parses the inclusive integer range `a:b`.
pub fn parse_int_range(s: &str) -> Result<Vec<i64>, CliError> {
    let bad = || CliError::Usage(format!("expected a:b, got '{s}'"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: i64 = a.trim().parse().map_err(|_| bad())?;
    let b: i64 = b.trim().parse().map_err(|_| bad())?;
    if b < a {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

fn i_grid_cmd(a: &IGridArgs, file: &ConfigFile) -> Result<Output, CliError> {
    let d1 = a.problem.d1(file)?;
    let w = a.problem.weight(file, d1)?;
    let ts = parse_linspace(&a.t)?;
    let quad = a.quadrature.resolve(file, QuadratureConfig::for_weight(&w))?;
    let grid = i_grid(&w, &ts, &quad)?;
    let mut csv = Csv::new(&["t", "I"]);
    for (t, v) in grid.t_values.iter().zip(&grid.i_values) {
        csv.row(&[fmt_e(*t), fmt_e(*v)]);
    }
    Ok(Output::csv(csv))
}

fn gauss_sum(a: &GaussSumArgs) -> Result<Output, CliError> {
    let f = QuadraticFormF0::new(a.d1)?;
    let v = match a.method {
        GaussSumMethod::Factored => s_q_factored(&f, a.q, &a.c, a.t)?,
        GaussSumMethod::Naive => s_q_naive(&f, a.q, &a.c, a.t)?,
        GaussSumMethod::Literal => s_q_literal(&f, a.q, &a.c, a.t)?,
    };
    let mut csv = Csv::new(&["q", "t", "re", "im", "exact"]);
    csv.row(&[
        a.q.to_string(),
        a.t.to_string(),
        fmt_e(v.value_complex.re),
        fmt_e(v.value_complex.im),
        v.value_exact.map_or("NA".to_string(), |e| e.to_string()),
    ]);
    Ok(Output::csv(csv))
}

fn delta(a: &DeltaArgs) -> Result<Output, CliError> {
    let ns = parse_int_range(&a.n)?;
    let k = DeltaKernel::calibrated(a.q)?;
    let mut csv = Csv::new(&["n", "value", "abs_error"]);
    let mut worst = 0.0f64;
    for n in ns {
        let v = k.delta_sum(n)?;
        let e = (v - if n == 0 { 1.0 } else { 0.0 }).abs();
        worst = worst.max(e);
        csv.row(&[n.to_string(), fmt_e(v), fmt_e(e)]);
    }
    let summary = vec![
        format!("c_Q = {}", fmt_opt(k.c_q())),
        format!("max abs_error = {}", fmt_e(worst)),
    ];
    Ok(Output { csv: csv.into_string(), summary, passed: true })
}

fn check(a: &CheckArgs) -> Result<Output, CliError> {
    let rep: CheckReport = harness::check_bounds(&a.suite).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut csv = Csv::new(&["suite", "check", "status", "measured", "threshold"]);
    let mut summary = Vec::new();
    for e in &rep.entries {
        csv.row(&[
            e.suite.to_string(),
            format!("\"{}\"", e.name.replace('"', "'")),
            if e.passed { "PASS" } else { "FAIL" }.to_string(),
            fmt_e(e.measured),
            fmt_opt(e.threshold),
        ]);
        summary.push(format!("{}: {} ({:.2} s)", e.name, if e.passed { "PASS" } else { "FAIL" }, e.seconds));
    }
    Ok(Output { csv: csv.into_string(), summary, passed: rep.all_passed() })
}

//! Command-line front end. Parsing produces a [`RunConfig`]; [`run`] turns it
//! into a [`Report`], a plain table rendered as CSV or JSON.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    compare, predict_critical_both, predict_subcritical_pair, predict_supercritical_large,
    predict_supercritical_small, AsymptoticPrediction,
};
use crate::emden_fowler::EmdenFowlerProfile;
use crate::error::{Error, Result};
use crate::oracle_bvp::{
    default_starts, solve_multistart, FixedPointConfig, NonlocalParams, DEFAULT_GRID, MIN_GRID,
};
use crate::reduction::{gradient_ratio, reduced_coefficient, FullProblemParams};
use crate::scalar_map::{KirchhoffScalarProblem, Regime};
use crate::special_integrals::{IntegralRequest, DEFAULT_TOL};

#[derive(Debug, Parser)]
#[command(name = "logkirch", version, about = "Solution branches of the 1-D logarithmic Kirchhoff Emden–Fowler problem")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv, global = true)]
    pub format: OutputFormat,
    /// Absolute tolerance for the special integrals.
    #[arg(long, global = true)]
    pub tol_quad: Option<f64>,
    /// Relative tolerance for scalar root finding.
    #[arg(long, global = true)]
    pub tol_root: Option<f64>,
    /// Relative tolerance of the oracle fixed-point iteration.
    #[arg(long, global = true)]
    pub tol_fp: Option<f64>,
    /// Samples for `profile`, grid points for the shooting oracle.
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// L(p, q) and M(p, m) by quadrature, next to their Beta-function values.
    Integrals {
        #[arg(long)]
        p: f64,
        /// Weights q; defaults to 0, 1, 2, p.
        #[arg(long, num_args = 1..)]
        q: Vec<f64>,
        /// Orders m; defaults to 1, 2, 3.
        #[arg(long, num_args = 1..)]
        m: Vec<f64>,
    },
    /// Samples (x, W_p, W_p') on a uniform grid.
    Profile {
        #[arg(long)]
        p: f64,
    },
    /// Every solution for each λ.
    Branch {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
    },
    /// Fold location (t₂, ν) for p < 3.
    Fold {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Exact branch points against the asymptotic expansions.
    Asymptotics {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
    },
    /// Shooting oracle against the closed-form branch.
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
    },
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub p: f64,
    /// Reduced coefficient d in log(d‖u‖² + 1).
    #[arg(long, conflicts_with_all = ["a", "b"], required_unless_present = "b")]
    pub d: Option<f64>,
    /// Gradient weight a in log(a‖u'‖² + b‖u‖² + 1).
    #[arg(long, requires = "b")]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LambdaArgs {
    #[arg(long, conflicts_with = "lambda_sweep", required_unless_present = "lambda_sweep")]
    pub lambda: Option<f64>,
    /// Geometric sweep: MIN MAX COUNT.
    #[arg(long, num_args = 3, value_names = ["MIN", "MAX", "COUNT"])]
    pub lambda_sweep: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Integrals,
    Profile,
    Branch,
    Fold,
    Asymptotics,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Params {
    Reduced { d: f64, p: f64 },
    Full(FullProblemParams),
    /// Exponent only, for `integrals` and `profile`.
    Exponent { p: f64 },
}

impl Params {
    pub fn p(&self) -> f64 {
        match *self {
            Params::Reduced { p, .. } | Params::Exponent { p } => p,
            Params::Full(full) => full.p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LambdaSpec {
    Single(f64),
    Sweep { min: f64, max: f64, count: usize },
}

impl LambdaSpec {
    /// Sweep points are geometric and end exactly at `max`.
    pub fn values(&self) -> Vec<f64> {
        match *self {
            LambdaSpec::Single(l) => vec![l],
            LambdaSpec::Sweep { min, max, count } => {
                let (a, b) = (min.ln(), max.ln());
                let mut out: Vec<f64> = (0..count)
                    .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                    .collect();
                out[0] = min;
                out[count - 1] = max;
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub quad: f64,
    pub root: f64,
    pub fixed_point: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { quad: DEFAULT_TOL, root: 1e-14, fixed_point: FixedPointConfig::default().tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub params: Params,
    pub lambda: Option<LambdaSpec>,
    pub format: OutputFormat,
    pub tolerances: Tolerances,
    pub grid_n: usize,
    /// Explicit q and m lists for `integrals`.
    pub weights: Vec<f64>,
    pub orders: Vec<f64>,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let defaults = Tolerances::default();
        let tolerances = Tolerances {
            quad: cli.tol_quad.unwrap_or(defaults.quad),
            root: cli.tol_root.unwrap_or(defaults.root),
            fixed_point: cli.tol_fp.unwrap_or(defaults.fixed_point),
        };
        let (command, params, lambda, weights, orders) = match &cli.command {
            CommandArgs::Integrals { p, q, m } => {
                let weights = if q.is_empty() { vec![0.0, 1.0, 2.0, *p] } else { q.clone() };
                let orders = if m.is_empty() { vec![1.0, 2.0, 3.0] } else { m.clone() };
                (Command::Integrals, Params::Exponent { p: *p }, None, weights, orders)
            }
            CommandArgs::Profile { p } => (Command::Profile, Params::Exponent { p: *p }, None, vec![], vec![]),
            CommandArgs::Branch { problem, lambda } => {
                (Command::Branch, problem.params()?, Some(lambda.spec()?), vec![], vec![])
            }
            CommandArgs::Fold { problem } => (Command::Fold, problem.params()?, None, vec![], vec![]),
            CommandArgs::Asymptotics { problem, lambda } => {
                (Command::Asymptotics, problem.params()?, Some(lambda.spec()?), vec![], vec![])
            }
            CommandArgs::Verify { problem, lambda } => {
                (Command::Verify, problem.params()?, Some(lambda.spec()?), vec![], vec![])
            }
        };
        let config = Self {
            command,
            params,
            lambda,
            format: cli.format,
            tolerances,
            grid_n: cli.grid_n.unwrap_or(DEFAULT_GRID),
            weights,
            orders,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.tolerances;
        for (name, v) in [("--tol-quad", t.quad), ("--tol-root", t.root), ("--tol-fp", t.fixed_point)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if t.root >= 1.0 {
            return Err(Error::Domain(format!("--tol-root must be below 1, got {}", t.root)));
        }
        if self.grid_n < MIN_GRID {
            return Err(Error::Domain(format!("--grid-n must be at least {MIN_GRID}, got {}", self.grid_n)));
        }
        match self.lambda {
            Some(LambdaSpec::Single(l)) if !(l.is_finite() && l > 0.0) => {
                Err(Error::Domain(format!("λ must be positive, got {l}")))
            }
            Some(LambdaSpec::Sweep { min, max, count }) if !(min > 0.0 && min < max && max.is_finite() && count >= 2) => {
                Err(Error::Domain(format!(
                    "sweep needs 0 < min < max and count ≥ 2, got {min} {max} {count}"
                )))
            }
            _ => Ok(()),
        }
    }
}

impl ProblemArgs {
    fn params(&self) -> Result<Params> {
        match (self.d, self.b) {
            (Some(d), _) => Ok(Params::Reduced { d, p: self.p }),
            (None, Some(b)) => Ok(Params::Full(FullProblemParams { a: self.a.unwrap_or(0.0), b, p: self.p })),
            (None, None) => Err(Error::Domain("either --d or --a/--b is required".into())),
        }
    }
}

impl LambdaArgs {
    fn spec(&self) -> Result<LambdaSpec> {
        match (&self.lambda, &self.lambda_sweep) {
            (Some(l), _) => Ok(LambdaSpec::Single(*l)),
            (None, Some(s)) => {
                let count = s[2];
                if !(count >= 2.0 && count.fract() == 0.0 && count <= 1e7) {
                    return Err(Error::Domain(format!("sweep count must be an integer ≥ 2, got {count}")));
                }
                Ok(LambdaSpec::Sweep { min: s[0], max: s[1], count: count as usize })
            }
            (None, None) => Err(Error::Domain("--lambda or --lambda-sweep is required".into())),
        }
    }
}

/// One table entry. `Null` stands for an undefined value such as a
/// degenerate error ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Null => String::new(),
            Cell::Bool(b) => b.to_string(),
            Cell::Int(i) => i.to_string(),
            // Debug formatting is the shortest string that parses back to
            // the same f64.
            Cell::Num(x) => format!("{x:?}"),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Num(x) => Some(x),
            Cell::Int(i) => Some(i as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        if x.is_finite() { Cell::Num(x) } else { Cell::Null }
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Null, Cell::from)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Command,
    /// `d₀ = a·ratio + b` when the problem was given as `(a, b)`.
    pub d0: Option<f64>,
    pub columns: Vec<String>,
    pub records: Vec<Vec<Cell>>,
    /// Number of failed checks (only `verify` sets this).
    pub failures: usize,
}

impl Report {
    fn new(command: Command, columns: &[&str]) -> Self {
        Self {
            command,
            d0: None,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            records: Vec::new(),
            failures: 0,
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.records.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            OutputFormat::Csv => {
                let mut s = String::new();
                if let Some(d0) = self.d0 {
                    s.push_str(&format!("# d0={d0:?}\n"));
                }
                s.push_str(&self.columns.join(","));
                s.push('\n');
                for row in &self.records {
                    let line: Vec<String> = row.iter().map(Cell::csv).collect();
                    s.push_str(&line.join(","));
                    s.push('\n');
                }
                s
            }
        }
    }
}

/// Scalar problem, `d₀` if it came from `(a, b)`, and the oracle parameters.
fn scalar_problem(config: &RunConfig) -> Result<(KirchhoffScalarProblem, Option<f64>, NonlocalParams)> {
    let (d, d0, oracle) = match config.params {
        Params::Reduced { d, p } => (d, None, NonlocalParams::Reduced { d, p }),
        Params::Full(full) => {
            let d0 = reduced_coefficient(&full)?;
            (d0, Some(d0), NonlocalParams::Full(full))
        }
        Params::Exponent { .. } => return Err(Error::Domain("command needs --d or --a/--b".into())),
    };
    let problem = KirchhoffScalarProblem::new(config.params.p(), d)?.with_root_tolerance(config.tolerances.root)?;
    Ok((problem, d0, oracle))
}

fn lambdas(config: &RunConfig) -> Result<Vec<f64>> {
    config
        .lambda
        .as_ref()
        .map(LambdaSpec::values)
        .ok_or_else(|| Error::Domain("command needs --lambda or --lambda-sweep".into()))
}

pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    match config.command {
        Command::Integrals => run_integrals(config),
        Command::Profile => run_profile(config),
        Command::Branch => run_branch(config),
        Command::Fold => run_fold(config),
        Command::Asymptotics => run_asymptotics(config),
        Command::Verify => run_verify(config),
    }
}

fn run_integrals(config: &RunConfig) -> Result<Report> {
    let p = config.params.p();
    let mut report = Report::new(
        Command::Integrals,
        &["family", "p", "index", "value", "abs_error_estimate", "beta_value", "deviation"],
    );
    let requests = config
        .weights
        .iter()
        .map(|&q| ("L", q, IntegralRequest::L { p, q }))
        .chain(config.orders.iter().map(|&m| ("M", m, IntegralRequest::M { p, m })));
    for (family, index, request) in requests {
        let v = request.evaluate(config.tolerances.quad)?;
        let beta = request.beta_value()?;
        report.push(vec![
            family.into(),
            p.into(),
            index.into(),
            v.value.into(),
            v.abs_error_estimate.into(),
            beta.into(),
            (v.value - beta).abs().into(),
        ]);
    }
    Ok(report)
}

fn run_profile(config: &RunConfig) -> Result<Report> {
    let profile = EmdenFowlerProfile::build(config.params.p())?;
    let mut report = Report::new(Command::Profile, &["x", "w", "dw"]);
    let n = config.grid_n;
    for i in 0..n {
        let x = i as f64 / (n - 1) as f64;
        let (w, dw) = profile.sample(x)?;
        report.push(vec![x.into(), w.into(), dw.into()]);
    }
    Ok(report)
}

fn run_branch(config: &RunConfig) -> Result<Report> {
    let (problem, d0, _) = scalar_problem(config)?;
    let profile = EmdenFowlerProfile::build(problem.p)?;
    let mut report = Report::new(
        Command::Branch,
        &["lambda", "t", "amplitude", "sup_norm", "l2_norm", "regime", "root_index", "d", "fold_degenerate"],
    );
    report.d0 = d0;
    let mut lams = lambdas(config)?;
    lams.sort_by(f64::total_cmp);
    for lambda in lams {
        let branch = problem.solve_branch(lambda)?;
        let regime = branch.regime.to_string();
        for (i, &t) in branch.roots.iter().enumerate() {
            let c = problem.amplitude(t)?;
            report.push(vec![
                lambda.into(),
                t.into(),
                c.into(),
                (c * profile.sup_norm).into(),
                t.sqrt().into(),
                regime.as_str().into(),
                i.into(),
                problem.d.into(),
                branch.fold_degenerate.into(),
            ]);
        }
    }
    Ok(report)
}

fn run_fold(config: &RunConfig) -> Result<Report> {
    let (problem, d0, _) = scalar_problem(config)?;
    let fold = problem.fold()?;
    let mut report = Report::new(Command::Fold, &["p", "d", "t2", "nu"]);
    report.d0 = d0;
    report.push(vec![problem.p.into(), problem.d.into(), fold.t2.into(), fold.nu.into()]);
    Ok(report)
}

/// Every expansion that applies at `λ`.
fn predictions(problem: &KirchhoffScalarProblem, lambda: f64) -> Result<Vec<AsymptoticPrediction>> {
    let keep_regime = |r: Result<AsymptoticPrediction>| match r {
        Ok(p) => Ok(Some(p)),
        Err(Error::Regime(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let out = match problem.regime() {
        Regime::Supercritical => [
            keep_regime(predict_supercritical_large(problem, lambda))?,
            keep_regime(predict_supercritical_small(problem, lambda))?,
        ]
        .into_iter()
        .flatten()
        .collect(),
        Regime::Subcritical => match predict_subcritical_pair(problem, lambda) {
            Ok((lower, upper)) => vec![lower, upper],
            Err(Error::Regime(_)) => vec![],
            Err(e) => return Err(e),
        },
        Regime::Critical => match predict_critical_both(problem, lambda) {
            Ok((near, small)) => std::iter::once(near).chain(small).collect(),
            Err(Error::Regime(_)) => vec![],
            Err(e) => return Err(e),
        },
    };
    Ok(out)
}

fn run_asymptotics(config: &RunConfig) -> Result<Report> {
    let (problem, d0, _) = scalar_problem(config)?;
    let mut report = Report::new(
        Command::Asymptotics,
        &["regime_tag", "lambda", "exact", "leading", "with_correction", "deviation", "error_ratio"],
    );
    report.d0 = d0;
    let mut lams = lambdas(config)?;
    lams.sort_by(f64::total_cmp);
    for lambda in lams {
        for prediction in predictions(&problem, lambda)? {
            let row = compare(&problem, &prediction)?;
            report.push(vec![
                row.regime_tag.as_str().into(),
                lambda.into(),
                row.exact.into(),
                row.leading.into(),
                row.with_correction.into(),
                row.deviation.into(),
                row.error_ratio.into(),
            ]);
        }
    }
    Ok(report)
}

/// Tolerances of the oracle checks.
const SUP_TOL: f64 = 1e-6;
const RATIO_TOL: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-8;

fn run_verify(config: &RunConfig) -> Result<Report> {
    let (problem, d0, oracle) = scalar_problem(config)?;
    let profile = EmdenFowlerProfile::build(problem.p)?;
    let ratio = gradient_ratio(problem.p)?;
    let fp = FixedPointConfig { tol: config.tolerances.fixed_point, grid_n: config.grid_n, ..Default::default() };
    let starts = default_starts(problem.d, problem.p)?;
    let mut report = Report::new(
        Command::Verify,
        &["lambda", "root_index", "check", "deviation", "tolerance", "pass"],
    );
    report.d0 = d0;
    let mut lams = lambdas(config)?;
    lams.sort_by(f64::total_cmp);
    for lambda in lams {
        let branch = problem.solve_branch(lambda)?;
        if branch.fold_degenerate {
            continue;
        }
        let found = match solve_multistart(&oracle, lambda, &starts, &fp) {
            Ok(found) => found,
            Err(Error::Regime(_)) => Vec::new(),
            Err(e) => return Err(e),
        };
        let count_ok = found.len() == branch.roots.len();
        report.push(vec![
            lambda.into(),
            Cell::Null,
            "solution_count".into(),
            (found.len() as f64 - branch.roots.len() as f64).abs().into(),
            0.0.into(),
            count_ok.into(),
        ]);
        if !count_ok {
            report.failures += 1;
            continue;
        }
        for (i, (sol, &t)) in found.iter().zip(&branch.roots).enumerate() {
            let expected = problem.amplitude(t)? * profile.sup_norm;
            let checks = [
                ("sup_norm", (sol.sup_norm / expected - 1.0).abs(), SUP_TOL),
                ("norm_ratio", (sol.grad_l2_sq / sol.l2_sq / ratio - 1.0).abs(), RATIO_TOL),
                ("symmetry", sol.symmetry_defect() / sol.sup_norm, SYMMETRY_TOL),
            ];
            for (name, dev, tol) in checks {
                let pass = dev <= tol;
                report.failures += usize::from(!pass);
                report.push(vec![lambda.into(), i.into(), name.into(), dev.into(), tol.into(), pass.into()]);
            }
        }
    }
    Ok(report)
}

/// Exit status, stdout and stderr of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn diagnostic(err: &Error) -> String {
    let record = serde_json::json!({ "error": err.kind(), "message": err.to_string() });
    format!("{record}\n")
}

/// Parses `args` (including the program name) and runs the command.
pub fn execute<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let config = match RunConfig::from_cli(&cli) {
        Ok(c) => c,
        Err(e) => return Outcome { code: 2, stdout: String::new(), stderr: diagnostic(&e) },
    };
    match run(&config) {
        Ok(report) => Outcome {
            code: i32::from(report.failures > 0),
            stdout: report.render(config.format),
            stderr: String::new(),
        },
        Err(e) => Outcome { code: 1, stdout: String::new(), stderr: diagnostic(&e) },
    }
}

//! Command-line front end: problem files in, tables, CSV or JSON out.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure.

pub mod problem;
mod render;

pub use render::num as render_number;

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use deltanabla::functional::{certify, iso_residual};
use deltanabla::identities::fuzz_identities;
use deltanabla::lagrangian::parse;
use deltanabla::oracle::verify_worked_example;
use deltanabla::solver::{find_abnormal, solve_normal};
use deltanabla::{
    DeltaNablaFunctional, ElForm, GridFunction, IsoperimetricProblem, ResidualReport, SolveOptions,
    SolveResult,
};
use serde::Serialize;

use crate::problem::{worked_example_file, OptionsInput, ProblemFile};
use crate::render::{GridRow, Rendered};

/// Tolerance used by `verify identities`.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<deltanabla::Error> for CliError {
    fn from(e: deltanabla::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputMode {
    Table,
    Csv,
    Structured,
}

#[derive(Debug, Parser)]
#[command(
    name = "deltanabla",
    version,
    about = "Delta-nabla isoperimetric problems on finite time scales"
)]
pub struct Cli {
    #[command(flatten)]
    pub flags: Flags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Feasibility and stationarity tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Random starts in addition to the straight-line guess.
    #[arg(long, global = true)]
    pub multistart: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Half-width of the uniform perturbation of random starts.
    #[arg(long, global = true)]
    pub spread: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = OutputMode::Table)]
    pub output: OutputMode,
    /// Print the problem as JSON (with options applied) instead of running.
    #[arg(long, global = true)]
    pub emit_problem: bool,
}

impl Flags {
    fn options(&self) -> OptionsInput {
        OptionsInput {
            tol: self.tol,
            max_iter: self.max_iter,
            multistart: self.multistart,
            seed: self.seed,
            spread: self.spread,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find normal and abnormal extremals.
    Solve { file: PathBuf },
    /// Run built-in end-to-end checks.
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
    /// Euler–Lagrange residuals of a candidate.
    Residual {
        file: PathBuf,
        /// Values on every point of the scale, comma separated.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        y: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda0: Option<f64>,
    },
    /// Functional values of a candidate.
    Eval {
        file: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        y: Vec<f64>,
    },
    /// Symbolic partials of an expression in `t`, `u`, `v`.
    Diff {
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum VerifyTarget {
    /// The worked example on `{0, ..., M}`.
    Example {
        #[arg(long = "M")]
        m: usize,
    },
    /// Randomized time-scale calculus identities (uses `--seed`).
    Identities {
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
}

/// Runs a parsed command line, returning the exit code and standard output.
pub fn run(cli: &Cli) -> Rendered {
    match dispatch(cli) {
        Ok(r) => r,
        Err(e) => Rendered {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("{e}\n"),
        },
    }
}

fn load(path: &PathBuf) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    ProblemFile::from_json(&text).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn with_flags(mut file: ProblemFile, flags: &Flags) -> ProblemFile {
    file.options = file.options.merged(flags.options());
    file
}

fn dispatch(cli: &Cli) -> Result<Rendered, CliError> {
    let flags = &cli.flags;
    let file = match &cli.command {
        Command::Solve { file } | Command::Residual { file, .. } | Command::Eval { file, .. } => {
            Some(with_flags(load(file)?, flags))
        }
        Command::Verify {
            target: VerifyTarget::Example { m },
        } if flags.emit_problem => Some(with_flags(worked_example_file(*m), flags)),
        _ => None,
    };
    if flags.emit_problem {
        let file = file.ok_or_else(|| {
            CliError::Input("--emit-problem needs a command that reads a problem".into())
        })?;
        file.build()?;
        return Ok(Rendered::ok(file.to_json() + "\n"));
    }
    let mode = flags.output;
    match &cli.command {
        Command::Solve { .. } => cmd_solve(&file.expect("loaded above"), mode),
        Command::Residual {
            y, lambda, lambda0, ..
        } => cmd_residual(&file.expect("loaded above"), y, *lambda, *lambda0, mode),
        Command::Eval { y, .. } => cmd_eval(&file.expect("loaded above"), y, mode),
        Command::Verify {
            target: VerifyTarget::Example { m },
        } => cmd_verify_example(*m, mode),
        Command::Verify {
            target: VerifyTarget::Identities { count },
        } => cmd_verify_identities(flags.seed.unwrap_or(0), *count, mode),
        Command::Diff { expr } => cmd_diff(expr, mode),
    }
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Serialize)]
pub struct ExtremalReport {
    pub classification: String,
    pub converged: bool,
    pub lambda0: f64,
    pub lambda: f64,
    pub start: usize,
    pub iterations: usize,
    pub objective: deltanabla::EvaluationBreakdown,
    pub constraint: deltanabla::EvaluationBreakdown,
    pub feasibility_gap: f64,
    pub el1_defect: f64,
    pub el2_defect: f64,
    pub forms_consistent: bool,
    pub kkt_residual_norm: f64,
    pub grid: Vec<GridRow>,
    pub starts: Vec<deltanabla::solver::StartReport>,
    pub stationary_points: Vec<deltanabla::solver::StationaryPoint>,
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub command: &'static str,
    pub options: SolveOptions,
    pub k: f64,
    pub normal: ExtremalReport,
    pub abnormal: Vec<ExtremalReport>,
}

impl SolveReport {
    /// The converged normal extremal, else the first abnormal one, else the
    /// best unconverged normal iterate.
    pub fn primary(&self) -> &ExtremalReport {
        if self.normal.converged {
            &self.normal
        } else {
            self.abnormal.first().unwrap_or(&self.normal)
        }
    }
}

fn grid_rows(
    y: &GridFunction,
    el1: Option<&ResidualReport>,
    el2: Option<&ResidualReport>,
) -> Vec<GridRow> {
    let dd = y.delta_derivative();
    let nd = y.nabla_derivative();
    y.scale()
        .points()
        .iter()
        .zip(y.values())
        .map(|(&t, &v)| GridRow {
            t,
            y: v,
            y_delta: dd.at(t).ok(),
            y_nabla: nd.at(t).ok(),
            residual_el1: el1.and_then(|r| r.residual.at(t).ok()),
            residual_el2: el2.and_then(|r| r.residual.at(t).ok()),
        })
        .collect()
}

fn extremal_report(p: &IsoperimetricProblem, r: SolveResult) -> Result<ExtremalReport, CliError> {
    let el1 = iso_residual(
        &p.objective,
        &p.constraint,
        &r.y,
        r.lambda0,
        r.lambda,
        ElForm::El1,
    )?;
    let el2 = iso_residual(
        &p.objective,
        &p.constraint,
        &r.y,
        r.lambda0,
        r.lambda,
        ElForm::El2,
    )?;
    Ok(ExtremalReport {
        classification: format!("{:?}", r.classification).to_lowercase(),
        converged: r.converged,
        lambda0: r.lambda0,
        lambda: r.lambda,
        start: r.start,
        iterations: r.iterations,
        objective: r.objective_value,
        constraint: r.constraint_value,
        feasibility_gap: r.feasibility_gap,
        el1_defect: r.el1_defect,
        el2_defect: r.el2_defect,
        forms_consistent: r.forms_consistent,
        kkt_residual_norm: r.kkt_residual_norm,
        grid: grid_rows(&r.y, Some(&el1), Some(&el2)),
        starts: r.starts,
        stationary_points: r.stationary_points,
    })
}

pub fn solve_report(file: &ProblemFile) -> Result<SolveReport, CliError> {
    let p = file.build()?;
    let opts = file.options.resolve()?;
    let normal = solve_normal(&p, &opts)?;
    let abnormal = find_abnormal(&p, &opts)?;
    Ok(SolveReport {
        command: "solve",
        options: opts,
        k: p.k,
        normal: extremal_report(&p, normal)?,
        abnormal: abnormal
            .into_iter()
            .map(|r| extremal_report(&p, r))
            .collect::<Result<_, _>>()?,
    })
}

fn cmd_solve(file: &ProblemFile, mode: OutputMode) -> Result<Rendered, CliError> {
    let report = solve_report(file)?;
    let found = report.normal.converged || !report.abnormal.is_empty();
    let mut out = match mode {
        OutputMode::Table => Rendered::ok(render::solve_table(&report)),
        OutputMode::Csv => Rendered::ok(render::grid_csv(&report.primary().grid)),
        OutputMode::Structured => Rendered::ok(render::json(&report)),
    };
    if !found {
        out.code = 2;
        out.stderr = "numerical failure: no start converged to a certified extremal\n".into();
    }
    Ok(out)
}

// ---------------------------------------------------------------- residual

#[derive(Debug, Serialize)]
pub struct FormPair {
    pub el1_defect: f64,
    pub el2_defect: f64,
    pub el1_constant: f64,
    pub el2_constant: f64,
    pub stationary: bool,
}

impl FormPair {
    fn new(el1: &ResidualReport, el2: &ResidualReport, tol: f64) -> Self {
        FormPair {
            el1_defect: el1.defect,
            el2_defect: el2.defect,
            el1_constant: el1.constant_estimate,
            el2_constant: el2.constant_estimate,
            stationary: el1.is_constant(tol) && el2.is_constant(tol),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Multiplied {
    pub lambda0: f64,
    pub lambda: f64,
    pub forms: FormPair,
    pub forms_consistent: bool,
    pub classification: &'static str,
}

#[derive(Debug, Serialize)]
pub struct ResidualCmdReport {
    pub command: &'static str,
    pub tol: f64,
    pub objective: deltanabla::EvaluationBreakdown,
    pub constraint: deltanabla::EvaluationBreakdown,
    pub k: f64,
    pub feasibility_gap: f64,
    pub objective_forms: FormPair,
    pub constraint_forms: FormPair,
    pub multiplied: Option<Multiplied>,
    /// Residual columns hold the multiplier combination when multipliers
    /// were given, otherwise the objective's own residuals.
    pub grid: Vec<GridRow>,
    pub objective_residual_el1: Vec<Option<f64>>,
    pub objective_residual_el2: Vec<Option<f64>>,
    pub constraint_residual_el1: Vec<Option<f64>>,
    pub constraint_residual_el2: Vec<Option<f64>>,
    pub warnings: Vec<String>,
}

fn candidate(p: &IsoperimetricProblem, y: &[f64]) -> Result<GridFunction, CliError> {
    if y.len() != p.scale.len() {
        return Err(CliError::Input(format!(
            "--y has {} values but the time scale has {} points",
            y.len(),
            p.scale.len()
        )));
    }
    Ok(GridFunction::new(Arc::clone(&p.scale), y.to_vec())?)
}

fn boundary_warnings(p: &IsoperimetricProblem, y: &GridFunction, warnings: &mut Vec<String>) {
    let v = y.values();
    if v[0] != p.alpha || v[v.len() - 1] != p.beta {
        warnings.push(format!(
            "boundary values ({}, {}) differ from (alpha, beta) = ({}, {})",
            v[0],
            v[v.len() - 1],
            p.alpha,
            p.beta
        ));
    }
}

fn column(y: &GridFunction, r: &ResidualReport) -> Vec<Option<f64>> {
    y.scale()
        .points()
        .iter()
        .map(|&t| r.residual.at(t).ok())
        .collect()
}

pub fn residual_report(
    file: &ProblemFile,
    y: &[f64],
    lambda: Option<f64>,
    lambda0: Option<f64>,
) -> Result<ResidualCmdReport, CliError> {
    let p = file.build()?;
    let opts = file.options.resolve()?;
    let y = candidate(&p, y)?;
    let raw = |f: &DeltaNablaFunctional| -> Result<(ResidualReport, ResidualReport), CliError> {
        Ok((
            f.el_residual(&y, ElForm::El1)?,
            f.el_residual(&y, ElForm::El2)?,
        ))
    };
    let (l1, l2) = raw(&p.objective)?;
    let (k1, k2) = raw(&p.constraint)?;
    let objective = p.objective.eval_functional(&y)?;
    let constraint = p.constraint.eval_functional(&y)?;
    let feasibility_gap = (constraint.product - p.k).abs();

    let mut warnings = Vec::new();
    if feasibility_gap > opts.tol {
        warnings.push(format!(
            "constraint not satisfied: K(y) = {} but k = {}",
            render::num(constraint.product),
            render::num(p.k)
        ));
    }
    boundary_warnings(&p, &y, &mut warnings);

    let multiplied = if lambda.is_some() || lambda0.is_some() {
        let (l0, l) = (lambda0.unwrap_or(1.0), lambda.unwrap_or(0.0));
        let c = certify(&p.objective, &p.constraint, &y, l0, l, opts.tol)
            .map_err(|e| CliError::Input(e.to_string()))?;
        Some((
            Multiplied {
                lambda0: l0,
                lambda: l,
                forms: FormPair::new(&c.el1, &c.el2, opts.tol),
                forms_consistent: c.consistent,
                classification: if c.stationary {
                    "stationary"
                } else {
                    "not stationary"
                },
            },
            c,
        ))
    } else {
        None
    };
    let grid = match &multiplied {
        Some((_, c)) => grid_rows(&y, Some(&c.el1), Some(&c.el2)),
        None => grid_rows(&y, Some(&l1), Some(&l2)),
    };
    Ok(ResidualCmdReport {
        command: "residual",
        tol: opts.tol,
        objective,
        constraint,
        k: p.k,
        feasibility_gap,
        objective_forms: FormPair::new(&l1, &l2, opts.tol),
        constraint_forms: FormPair::new(&k1, &k2, opts.tol),
        multiplied: multiplied.map(|(m, _)| m),
        grid,
        objective_residual_el1: column(&y, &l1),
        objective_residual_el2: column(&y, &l2),
        constraint_residual_el1: column(&y, &k1),
        constraint_residual_el2: column(&y, &k2),
        warnings,
    })
}

fn cmd_residual(
    file: &ProblemFile,
    y: &[f64],
    lambda: Option<f64>,
    lambda0: Option<f64>,
    mode: OutputMode,
) -> Result<Rendered, CliError> {
    let report = residual_report(file, y, lambda, lambda0)?;
    Ok(match mode {
        OutputMode::Table => Rendered::ok(render::residual_table(&report)),
        OutputMode::Csv => Rendered::ok(render::grid_csv(&report.grid)),
        OutputMode::Structured => Rendered::ok(render::json(&report)),
    })
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub command: &'static str,
    pub objective: deltanabla::EvaluationBreakdown,
    pub constraint: deltanabla::EvaluationBreakdown,
    pub k: f64,
    pub feasibility_gap: f64,
    pub diamond_norm: f64,
    pub grid: Vec<GridRow>,
    pub warnings: Vec<String>,
}

pub fn eval_report(file: &ProblemFile, y: &[f64]) -> Result<EvalReport, CliError> {
    let p = file.build()?;
    let y = candidate(&p, y)?;
    let constraint = p.constraint.eval_functional(&y)?;
    let mut warnings = Vec::new();
    boundary_warnings(&p, &y, &mut warnings);
    Ok(EvalReport {
        command: "eval",
        objective: p.objective.eval_functional(&y)?,
        feasibility_gap: (constraint.product - p.k).abs(),
        constraint,
        k: p.k,
        diamond_norm: y.diamond_norm()?,
        grid: grid_rows(&y, None, None),
        warnings,
    })
}

fn cmd_eval(file: &ProblemFile, y: &[f64], mode: OutputMode) -> Result<Rendered, CliError> {
    let report = eval_report(file, y)?;
    Ok(match mode {
        OutputMode::Table => Rendered::ok(render::eval_table(&report)),
        OutputMode::Csv => Rendered::ok(render::grid_csv(&report.grid)),
        OutputMode::Structured => Rendered::ok(render::json(&report)),
    })
}

// ---------------------------------------------------------------- verify

fn cmd_verify_example(m: usize, mode: OutputMode) -> Result<Rendered, CliError> {
    let report = verify_worked_example(m)?;
    let mut out = match mode {
        OutputMode::Table => Rendered::ok(render::example_table(&report)),
        OutputMode::Csv => Rendered::ok(render::example_csv(&report)),
        OutputMode::Structured => Rendered::ok(render::json(&report)),
    };
    if !report.pass {
        out.code = 2;
    }
    Ok(out)
}

fn cmd_verify_identities(seed: u64, count: usize, mode: OutputMode) -> Result<Rendered, CliError> {
    let report = fuzz_identities(seed, count, IDENTITY_TOL);
    let mut out = match mode {
        OutputMode::Table => Rendered::ok(render::identities_table(&report)),
        OutputMode::Csv => Rendered::ok(render::identities_csv(&report)),
        OutputMode::Structured => Rendered::ok(render::json(&report)),
    };
    if !report.passed() {
        out.code = 2;
    }
    Ok(out)
}

// ---------------------------------------------------------------- diff

#[derive(Debug, Serialize)]
pub struct DiffReport {
    pub command: &'static str,
    pub expression: String,
    pub d_t: String,
    pub d_u: String,
    pub d_v: String,
}

fn cmd_diff(text: &str, mode: OutputMode) -> Result<Rendered, CliError> {
    let e = parse(text).map_err(|err| CliError::Input(format!("{err} in `{text}`")))?;
    let report = DiffReport {
        command: "diff",
        d_t: e.differentiate(deltanabla::lagrangian::Var::T).to_string(),
        d_u: e.differentiate(deltanabla::lagrangian::Var::U).to_string(),
        d_v: e.differentiate(deltanabla::lagrangian::Var::V).to_string(),
        expression: e.to_string(),
    };
    Ok(match mode {
        OutputMode::Table => Rendered::ok(render::diff_table(&report)),
        OutputMode::Csv => Rendered::ok(render::diff_csv(&report)),
        OutputMode::Structured => Rendered::ok(render::json(&report)),
    })
}

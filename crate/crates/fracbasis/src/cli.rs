//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid configuration or unsupported combination,
//! 2 numerical failure (breakdown, fit failure), 3 I/O or parse failure.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::precond::{
    CycleKind, PrecondKind, PrecondSpec, DEFAULT_DAMPING, DEFAULT_GMG_SWEEPS, DEFAULT_INNER_TOL,
    DEFAULT_SWEEPS,
};
use crate::problems::{self, DiscreteProblem, Family};
use crate::rational::{oga_fit_observed, FitStep, OgaConfig, RationalApproximant, DEFAULT_SPACING};
use crate::rcgbm::{self, SolvePlan};
use crate::report::{self, RunSummary, TimingSummary};
use crate::sparse::market;

/// Default 20-term table for s = 1/2 on [1e-8, 1], identical to the shipped
/// fixture; used when neither a rational document nor inline fit parameters
/// are given.
const BUILTIN_RATIONAL: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../fixtures/oga_s0.5_n20.json"
));

#[derive(Parser, Debug)]
#[command(
    name = "fracbasis",
    version,
    about = "Fractional powers of sparse SPD operator pencils",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a sum-of-poles approximant to z^(-s) on [epsilon, 1]
    Oga(OgaArgs),
    /// Solve a fractional-power system on a built-in or user-supplied problem
    #[command(subcommand)]
    Solve(SolveFamily),
}

#[derive(Args, Debug)]
pub struct OgaArgs {
    /// Fractional power s of the target z^(-s), in (0,1)
    #[arg(long, default_value_t = 0.5)]
    pub s: f64,
    /// Number of pole terms to select
    #[arg(long, default_value_t = 20)]
    pub terms: usize,
    /// Left endpoint of the fitting interval
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    /// Dictionary spacing: candidate shifts are (j*hd)^2 with j*hd <= 5
    #[arg(long, default_value_t = DEFAULT_SPACING)]
    pub hd: f64,
    /// Write the fitted approximant to this JSON path
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum SolveFamily {
    /// Finite differences on the unit cube with homogeneous Dirichlet data
    Cube {
        /// Mesh level; the grid has 2^(level+2) intervals per axis
        #[arg(long, default_value_t = 2)]
        level: usize,
        #[command(flatten)]
        common: SolveCommon,
    },
    /// Piecewise-linear finite elements on a triangulated sphere surface
    Sphere {
        /// Refinement level of the octahedron-based triangulation
        #[arg(long, default_value_t = 3)]
        level: usize,
        #[command(flatten)]
        common: SolveCommon,
    },
    /// Weighted random-graph Laplacian, shifted to make it definite
    Graph {
        /// Number of vertices
        #[arg(long, default_value_t = 1024)]
        n: usize,
        /// Seed for the edge set, the weights and the load vector
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Expected average vertex degree
        #[arg(long, default_value_t = 5.0)]
        avg_degree: f64,
        #[command(flatten)]
        common: SolveCommon,
    },
    /// User-supplied operator in Matrix Market format
    Custom {
        /// Operator matrix (.mtx, symmetric positive definite)
        #[arg(long)]
        matrix: PathBuf,
        /// Mass matrix (.mtx); identity when omitted
        #[arg(long)]
        mass: Option<PathBuf>,
        /// Load vector, one value per line
        #[arg(long)]
        rhs: PathBuf,
        /// Upper bound for the largest (generalized) eigenvalue
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        common: SolveCommon,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PrecondArg {
    Identity,
    Jacobi,
    Exact,
    Mg,
    Aml,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CycleArg {
    #[value(name = "V", alias = "v")]
    V,
    #[value(name = "W", alias = "w")]
    W,
}

impl CycleArg {
    fn to_kind(self) -> CycleKind {
        match self {
            CycleArg::V => CycleKind::V,
            CycleArg::W => CycleKind::W,
        }
    }
}

#[derive(Args, Debug)]
pub struct SolveCommon {
    /// Rational approximant JSON; defaults to the built-in 20-term table
    #[arg(long)]
    pub rational: Option<PathBuf>,
    /// Fit inline instead of loading: fractional power s
    #[arg(long)]
    pub s: Option<f64>,
    /// Fit inline: number of pole terms
    #[arg(long)]
    pub terms: Option<usize>,
    /// Fit inline: left endpoint of the fitting interval
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Fit inline: dictionary spacing
    #[arg(long)]
    pub hd: Option<f64>,
    /// Reduced basis size; family default when omitted
    #[arg(long)]
    pub m: Option<usize>,
    /// Shift d of the sample system the basis is built from
    #[arg(long)]
    pub d: Option<f64>,
    /// Shift s the preconditioner is built at
    #[arg(long, alias = "precond-shift")]
    pub shift_s: Option<f64>,
    /// Preconditioner kind; family default when omitted
    #[arg(long, value_enum)]
    pub precond: Option<PrecondArg>,
    /// Inner solver tolerance of the exact preconditioner
    #[arg(long)]
    pub inner_tol: Option<f64>,
    /// Multigrid cycle of the aggregation preconditioner
    #[arg(long, value_enum)]
    pub cycle: Option<CycleArg>,
    /// Split the poles over two preconditioners: the ten smallest keep
    /// shift-s, the rest use one built at the largest pole
    #[arg(long)]
    pub two_preconds: bool,
    /// Also run the high-fidelity per-shift solves and report errors
    #[arg(long)]
    pub reference: bool,
    /// Per-shift error table CSV path
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Summary JSON path
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

/// Parses arguments, runs, and maps the outcome to a process exit code.
pub fn run() -> u8 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match init_threads().and_then(|()| execute(cli)) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::DimensionMismatch(_) | Error::Unsupported(_) => 1,
        Error::Numeric(_) | Error::Breakdown(_) | Error::Fitting { .. } => 2,
        Error::Io(_) | Error::Parse(_) => 3,
    }
}

/// FRACBASIS_THREADS caps the worker count; 0 or unset means automatic.
fn init_threads() -> Result<()> {
    let value = match std::env::var("FRACBASIS_THREADS") {
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(err) => return Err(Error::invalid(format!("FRACBASIS_THREADS: {err}"))),
        Ok(value) => value,
    };
    let n: usize = value.trim().parse().map_err(|_| {
        Error::invalid(format!(
            "FRACBASIS_THREADS must be a non-negative integer, got {value:?}"
        ))
    })?;
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|err| Error::invalid(format!("thread pool: {err}")))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Oga(args) => run_oga(args),
        Command::Solve(family) => run_solve(family),
    }
}

fn progress(step: &FitStep) {
    eprintln!(
        "  term {:>3}: shift {:.6e}, residual {:.6e}",
        step.iteration, step.selected_shift, step.residual_norm
    );
}

fn run_oga(args: OgaArgs) -> Result<()> {
    let mut config = OgaConfig::new(args.s, args.terms, args.epsilon);
    config.spacing = args.hd;
    let start = Instant::now();
    let (mut approx, _) = oga_fit_observed(&config, progress)?;
    let fit_seconds = start.elapsed().as_secs_f64();
    let max_err = approx.max_error_default()?;
    approx.max_error = Some(max_err);

    println!(
        "fitted {} terms to z^(-{}) on [{:e}, 1]",
        approx.n_terms(),
        approx.s,
        approx.epsilon
    );
    println!("{:>3} {:>24} {:>24}", "i", "t", "c");
    for (i, term) in approx.terms.iter().enumerate() {
        println!("{:>3} {:>24.16e} {:>24.16e}", i + 1, term.shift, term.residue);
    }
    println!("max error on the validation interval: {max_err:.6e}");
    println!("fit time: {fit_seconds:.2} s");
    if let Some(path) = &args.out {
        approx.save(path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn flag_conflicts(common: &SolveCommon) -> Result<()> {
    let inline = common.s.is_some()
        || common.terms.is_some()
        || common.epsilon.is_some()
        || common.hd.is_some();
    if common.rational.is_some() && inline {
        return Err(Error::invalid(
            "--rational conflicts with the inline fit flags --s/--terms/--epsilon/--hd",
        ));
    }
    if let (Some(d), Some(shift)) = (common.d, common.shift_s) {
        if d == shift {
            return Err(Error::invalid("--d must differ from --shift-s"));
        }
    }
    if let Some(path) = &common.rational {
        if !path.exists() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("rational document {} not found", path.display()),
            )));
        }
    }
    Ok(())
}

fn builtin_rational() -> Result<RationalApproximant> {
    let approx: RationalApproximant = serde_json::from_str(BUILTIN_RATIONAL)
        .map_err(|err| Error::Parse(format!("built-in rational table: {err}")))?;
    approx.validate()?;
    Ok(approx)
}

fn run_solve(cmd: SolveFamily) -> Result<()> {
    let total_start = Instant::now();
    let assemble_start = Instant::now();
    let (problem, level, seed, avg_degree, common) = match cmd {
        SolveFamily::Cube { level, common } => {
            flag_conflicts(&common)?;
            (problems::cube_fd(level)?, Some(level), None, None, common)
        }
        SolveFamily::Sphere { level, common } => {
            flag_conflicts(&common)?;
            (problems::sphere_fem(level)?, Some(level), None, None, common)
        }
        SolveFamily::Graph {
            n,
            seed,
            avg_degree,
            common,
        } => {
            flag_conflicts(&common)?;
            (
                problems::graph_random(n, avg_degree, seed)?,
                None,
                Some(seed),
                Some(avg_degree),
                common,
            )
        }
        SolveFamily::Custom {
            matrix,
            mass,
            rhs,
            lambda,
            common,
        } => {
            flag_conflicts(&common)?;
            let a = market::read_matrix(&matrix)?;
            let m = mass.map(|p| market::read_matrix(&p)).transpose()?;
            let f = market::read_vector(&rhs)?;
            (
                problems::custom_problem(a, m, f, lambda)?,
                None,
                None,
                None,
                common,
            )
        }
    };
    let assemble_seconds = assemble_start.elapsed().as_secs_f64();

    let inline = common.s.is_some()
        || common.terms.is_some()
        || common.epsilon.is_some()
        || common.hd.is_some();
    let fit_start = Instant::now();
    let rational = match (&common.rational, inline) {
        (Some(path), _) => RationalApproximant::load(path)?,
        (None, true) => {
            let mut config = OgaConfig::new(
                common.s.unwrap_or(0.5),
                common.terms.unwrap_or(20),
                common.epsilon.unwrap_or(1e-8),
            );
            if let Some(hd) = common.hd {
                config.spacing = hd;
            }
            eprintln!("fitting {} pole terms ...", config.terms);
            let (mut r, _) = oga_fit_observed(&config, progress)?;
            r.max_error = Some(r.max_error_default()?);
            r
        }
        (None, false) => builtin_rational()?,
    };
    let fit_seconds = fit_start.elapsed().as_secs_f64();

    let m = common.m.unwrap_or_else(|| problem.default_m());
    let d = common.d.unwrap_or_else(|| problem.default_d());
    let shift_s = common
        .shift_s
        .unwrap_or_else(|| problem.default_precond_shift());
    let kind = resolve_kind(&common, &problem);

    let plan = if common.two_preconds {
        SolvePlan::split_two_preconditioners(&rational, &kind, shift_s, d, m)?
    } else {
        SolvePlan::single(
            rational.n_terms(),
            PrecondSpec {
                kind: kind.clone(),
                shift: shift_s,
            },
            d,
            m,
        )
    };

    let solve_report = rcgbm::solve_fractional(&problem, &rational, &plan)?;

    let mut reference_seconds = 0.0;
    let table = if common.reference {
        let reference = rcgbm::reference_solve(&problem, &rational)?;
        reference_seconds = reference.seconds;
        for shift in &reference.per_shift {
            if !shift.converged {
                eprintln!(
                    "warning: reference solve at t = {:.6e} stopped at relative residual {:.3e}",
                    shift.shift, shift.relative_residual
                );
            }
        }
        Some(rcgbm::error_table(&problem, &reference, &solve_report)?)
    } else {
        None
    };

    let disc = if problem.exact.is_some() {
        Some(problem.discretization_error(&solve_report.solution)?)
    } else {
        None
    };

    let summary = RunSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        family: problem.family.name().to_string(),
        n: problem.n(),
        s: rational.s,
        epsilon: rational.epsilon,
        n_terms: rational.n_terms(),
        rational_max_error: rational.max_error,
        lambda: problem.lambda,
        m,
        d,
        shift_s,
        precond: kind.to_string(),
        two_preconditioners: plan.pairs.len() > 1,
        truncated: solve_report.bases.iter().any(|b| b.truncated),
        level,
        seed,
        avg_degree,
        total_abs: table.as_ref().map(|t| t.total_abs),
        total_rel: table.as_ref().map(|t| t.total_rel),
        err_vs_exact: disc.as_ref().map(|e| e.vs_exact),
        err_vs_discrete: disc.as_ref().and_then(|e| e.vs_discrete),
        timings: TimingSummary {
            fit_seconds,
            assemble_seconds,
            basis_seconds: solve_report.timings.basis_seconds,
            solve_seconds: solve_report.timings.solve_seconds,
            reference_seconds,
            total_seconds: total_start.elapsed().as_secs_f64(),
        },
    };

    if let Some(path) = &common.report {
        report::write_error_csv(path, table.as_ref())?;
    }
    if let Some(path) = &common.summary {
        report::write_summary(path, &summary)?;
    }
    print_summary(&summary);
    Ok(())
}

fn resolve_kind(common: &SolveCommon, problem: &DiscreteProblem) -> PrecondKind {
    let default_cycle = match problem.family {
        Family::Sphere { .. } => CycleKind::W,
        _ => CycleKind::V,
    };
    let cycle = common.cycle.map(CycleArg::to_kind).unwrap_or(default_cycle);
    match common.precond {
        Some(PrecondArg::Identity) => PrecondKind::Identity,
        Some(PrecondArg::Jacobi) => PrecondKind::Jacobi,
        Some(PrecondArg::Exact) => PrecondKind::Exact {
            inner_tol: common.inner_tol.unwrap_or(DEFAULT_INNER_TOL),
        },
        Some(PrecondArg::Mg) => PrecondKind::GeometricMg {
            sweeps: DEFAULT_GMG_SWEEPS,
            damping: DEFAULT_DAMPING,
        },
        Some(PrecondArg::Aml) => PrecondKind::AggregationAml {
            cycle,
            sweeps: DEFAULT_SWEEPS,
            damping: DEFAULT_DAMPING,
        },
        None => {
            let mut kind = problem.default_precond().kind;
            match &mut kind {
                PrecondKind::Exact { inner_tol } => {
                    if let Some(tol) = common.inner_tol {
                        *inner_tol = tol;
                    }
                }
                PrecondKind::AggregationAml { cycle: c, .. } => {
                    if let Some(arg) = common.cycle {
                        *c = arg.to_kind();
                    }
                }
                _ => {}
            }
            kind
        }
    }
}

fn print_summary(summary: &RunSummary) {
    print!(
        "{} problem: n = {}, lambda = {:.6e}",
        summary.family, summary.n, summary.lambda
    );
    if let Some(level) = summary.level {
        print!(", level = {level}");
    }
    if let Some(seed) = summary.seed {
        print!(", seed = {seed}");
    }
    println!();
    print!(
        "rational: {} terms, s = {}, epsilon = {:e}",
        summary.n_terms, summary.s, summary.epsilon
    );
    match summary.rational_max_error {
        Some(err) => println!(", max error {err:.6e}"),
        None => println!(),
    }
    print!(
        "plan: m = {}, d = {}, precond = {} at shift {}",
        summary.m, summary.d, summary.precond, summary.shift_s
    );
    if summary.two_preconditioners {
        print!(" (split over two preconditioners)");
    }
    if summary.truncated {
        print!(" [basis truncated at convergence]");
    }
    println!();
    if let (Some(abs), Some(rel)) = (summary.total_abs, summary.total_rel) {
        println!("error vs reference: abs {abs:.6e}, rel {rel:.6e}");
    }
    if let Some(err) = summary.err_vs_exact {
        print!("error vs exact solution: {err:.6e}");
        if let Some(vs_discrete) = summary.err_vs_discrete {
            print!(" (vs discrete solution {vs_discrete:.6e})");
        }
        println!();
    }
    let t = &summary.timings;
    println!(
        "timings: fit {:.2} s, assemble {:.2} s, basis {:.2} s, solve {:.2} s, reference {:.2} s, total {:.2} s",
        t.fit_seconds,
        t.assemble_seconds,
        t.basis_seconds,
        t.solve_seconds,
        t.reference_seconds,
        t.total_seconds
    );
}

//! The `interlace` command-line driver.
//!
//! Exit codes: 0 success or passing verdict, 2 failing verdict, 1 error
//! (including usage errors). Every JSON output embeds the resolved
//! configuration, the mesh hash, tolerances and the crate version; without
//! `--timings` the output is byte-reproducible in serial mode.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::framework::{
    dirichlet_spectrum, neumann_spectrum, robin_grid, robin_sweep, SweepViolation, DEFAULT_RESONANCE_TOL,
};
use crate::json::{sci, sci_opt, sci_seq, to_pretty};
use crate::lab::{
    convergence_study, dtn_negativity, run_friedlander_with, FriedlanderConfig, DEFAULT_MARGIN, DEFAULT_ORDER,
};
use crate::linalg::{EIG_RESIDUAL_TOL, NULLSPACE_RTOL};
use crate::mesh::{generate, Domain, Mesh};
use crate::problems::{assemble, BoundaryCondition, DiscreteProblem, ProblemKind};

pub use config::merge_config;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable naming a directory for relative output paths.
pub const OUT_DIR_ENV: &str = "INTERLACE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "interlace", version, about = "Neumann/Dirichlet eigenvalue interlacing experiments")]
pub struct Cli {
    /// key=value file merged under the command-line flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run independent pieces concurrently.
    #[arg(long, global = true)]
    pub parallel: bool,
    /// Record wall-clock runtimes (makes output non-reproducible).
    #[arg(long, global = true)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a mesh and write it as JSON.
    Mesh(MeshArgs),
    /// Neumann or Dirichlet spectrum of a problem.
    Solve(SolveArgs),
    /// Robin eigenvalue paths from Neumann towards Dirichlet.
    Sweep(SweepArgs),
    /// Smallest Dirichlet-to-Neumann eigenvalues at given shifts.
    Dtn(DtnArgs),
    /// Check the interlacing inequality with Richardson margins.
    Verify(VerifyArgs),
    /// Convergence study over a list of mesh sizes.
    Study(StudyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct MeshArgs {
    #[arg(long, value_parser = parse_domain)]
    pub domain: Domain,
    #[arg(long)]
    pub h: f64,
    #[arg(long)]
    pub sides: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MeshSource {
    /// Mesh JSON file; overrides --domain/--h.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long, value_parser = parse_domain)]
    pub domain: Option<Domain>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub sides: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct ProblemArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: MeshSource,
    #[arg(long, value_parser = parse_kind)]
    pub kind: ProblemKind,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    #[serde(serialize_with = "sci")]
    pub alpha: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_parser = parse_bc, default_value = "neumann")]
    pub bc: BoundaryCondition,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = -1e8, allow_negative_numbers = true)]
    #[serde(serialize_with = "sci")]
    pub mu_min: f64,
    #[arg(long, default_value_t = 20)]
    pub mu_points: usize,
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    #[arg(long, default_value_t = 1e-8)]
    #[serde(serialize_with = "sci")]
    pub strict_tol: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DtnArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated shifts.
    #[arg(long, value_delimiter = ',', required = true)]
    #[serde(serialize_with = "sci_seq")]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_RESONANCE_TOL)]
    #[serde(serialize_with = "sci")]
    pub resonance_tol: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_parser = parse_domain)]
    pub domain: Domain,
    #[arg(long, value_parser = parse_kind)]
    pub kind: ProblemKind,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    #[serde(serialize_with = "sci")]
    pub alpha: f64,
    #[arg(long)]
    #[serde(serialize_with = "sci")]
    pub h: f64,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long)]
    pub sides: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    #[serde(serialize_with = "sci")]
    pub margin: f64,
    /// Assumed convergence order of the Richardson estimate.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    #[serde(serialize_with = "sci")]
    pub order: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// CSV eigenvalue table.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StudyArgs {
    #[arg(long, value_parser = parse_domain)]
    pub domain: Domain,
    #[arg(long, value_parser = parse_kind)]
    pub kind: ProblemKind,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    #[serde(serialize_with = "sci")]
    pub alpha: f64,
    /// Comma-separated, strictly decreasing mesh sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    #[serde(serialize_with = "sci_seq")]
    pub h_list: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long)]
    pub sides: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn parse_domain(s: &str) -> std::result::Result<Domain, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<ProblemKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_bc(s: &str) -> std::result::Result<BoundaryCondition, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Serialize)]
struct Tolerances {
    #[serde(serialize_with = "sci")]
    eigen_residual: f64,
    #[serde(serialize_with = "sci")]
    nullspace_rtol: f64,
    #[serde(serialize_with = "sci")]
    resonance: f64,
}

const TOLERANCES: Tolerances = Tolerances {
    eigen_residual: EIG_RESIDUAL_TOL,
    nullspace_rtol: NULLSPACE_RTOL,
    resonance: DEFAULT_RESONANCE_TOL,
};

#[derive(Debug, Serialize)]
struct Metadata<'a, C: Serialize> {
    version: &'static str,
    command: &'static str,
    config: &'a C,
    mesh_hash: Option<String>,
    tolerances: Tolerances,
    parallel: bool,
    #[serde(serialize_with = "sci_opt")]
    runtime_seconds: Option<f64>,
}

struct Context {
    parallel: bool,
    timings: bool,
    start: std::time::Instant,
}

impl Context {
    fn metadata<'a, C: Serialize>(&self, command: &'static str, config: &'a C, mesh: Option<&Mesh>) -> Metadata<'a, C> {
        Metadata {
            version: VERSION,
            command,
            config,
            mesh_hash: mesh.map(Mesh::hash),
            tolerances: TOLERANCES,
            parallel: self.parallel,
            runtime_seconds: self.timings.then(|| self.start.elapsed().as_secs_f64()),
        }
    }
}

fn resolve_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            let p = resolve_path(p);
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn load_mesh(src: &MeshSource) -> Result<(Mesh, f64)> {
    if let Some(path) = &src.mesh {
        let mesh = Mesh::load(path)?;
        let report = mesh.validate();
        if !report.is_valid() {
            return Err(Error::InvalidMesh(report.violations[0].to_string()));
        }
        let h = mesh.max_edge_length();
        return Ok((mesh, h));
    }
    match (src.domain, src.h) {
        (Some(d), Some(h)) => Ok((generate(d, h, src.sides)?, h)),
        _ => Err(Error::BadParameter("give --mesh or both --domain and --h".into())),
    }
}

fn build_problem(args: &ProblemArgs) -> Result<(DiscreteProblem, f64)> {
    let (mesh, h) = load_mesh(&args.source)?;
    Ok((assemble(&mesh, args.kind, args.alpha)?, h))
}

#[derive(Serialize)]
struct SpectrumOutput<'a> {
    kind: ProblemKind,
    bc: BoundaryCondition,
    #[serde(serialize_with = "sci")]
    alpha: f64,
    #[serde(serialize_with = "sci")]
    mesh_h: f64,
    ndof: usize,
    #[serde(serialize_with = "sci_seq")]
    eigenvalues: Vec<f64>,
    #[serde(serialize_with = "sci_seq")]
    residuals: Vec<f64>,
    metadata: Metadata<'a, SolveArgs>,
}

fn cmd_solve(ctx: &Context, args: &SolveArgs) -> Result<i32> {
    let (p, h) = build_problem(&args.problem)?;
    let fs = p.form_system()?;
    let spectrum = match args.bc {
        BoundaryCondition::Neumann => neumann_spectrum(fs, args.count)?,
        BoundaryCondition::Dirichlet => dirichlet_spectrum(fs, args.count)?,
    };
    let out = SpectrumOutput {
        kind: p.kind(),
        bc: args.bc,
        alpha: p.alpha(),
        mesh_h: h,
        ndof: p.num_dofs(),
        eigenvalues: spectrum.eigenvalues,
        residuals: spectrum.residuals,
        metadata: ctx.metadata("solve", args, Some(p.mesh())),
    };
    emit(&args.out, &to_pretty(&out))?;
    Ok(0)
}

#[derive(Serialize)]
struct Violation {
    kind: &'static str,
    index: usize,
    step: usize,
    #[serde(serialize_with = "sci")]
    value: f64,
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    kind: ProblemKind,
    #[serde(serialize_with = "sci")]
    alpha: f64,
    #[serde(serialize_with = "sci")]
    mesh_h: f64,
    #[serde(serialize_with = "sci_seq")]
    grid: Vec<f64>,
    paths: Vec<SciVec>,
    #[serde(serialize_with = "sci_seq")]
    dirichlet: Vec<f64>,
    #[serde(serialize_with = "sci_seq")]
    terminal_gaps: Vec<f64>,
    violations: Vec<Violation>,
    metadata: Metadata<'a, SweepArgs>,
}

#[derive(Serialize)]
struct SciVec(#[serde(serialize_with = "sci_seq")] Vec<f64>);

fn cmd_sweep(ctx: &Context, args: &SweepArgs) -> Result<i32> {
    let (p, h) = build_problem(&args.problem)?;
    let fs = p.form_system()?;
    let grid = robin_grid(args.mu_min, args.mu_points)?;
    let sweep = robin_sweep(fs, &grid, args.count, args.strict_tol, ctx.parallel)?;
    let violations = sweep
        .violations
        .iter()
        .map(|v| match *v {
            SweepViolation::Decrease { index, step, after, .. } => Violation {
                kind: "decrease",
                index,
                step,
                value: after,
            },
            SweepViolation::NotStrict { index, step, value, .. } => Violation {
                kind: "not_strict",
                index,
                step,
                value,
            },
        })
        .collect();
    let out = SweepOutput {
        kind: p.kind(),
        alpha: p.alpha(),
        mesh_h: h,
        paths: (0..args.count).map(|i| SciVec(sweep.eigenvalue_path(i))).collect(),
        dirichlet: sweep.limit_reference.as_ref().map(|s| s.eigenvalues.clone()).unwrap_or_default(),
        terminal_gaps: sweep.terminal_gaps.clone(),
        grid,
        violations,
        metadata: ctx.metadata("sweep", args, Some(p.mesh())),
    };
    emit(&args.out, &to_pretty(&out))?;
    Ok(0)
}

#[derive(Serialize)]
struct DtnOutput<'a> {
    #[serde(serialize_with = "sci")]
    mesh_h: f64,
    report: crate::lab::DtnNegativityReport,
    metadata: Metadata<'a, DtnArgs>,
}

fn cmd_dtn(ctx: &Context, args: &DtnArgs) -> Result<i32> {
    let (p, h) = build_problem(&args.problem)?;
    let report = dtn_negativity(&p, &args.lambdas, args.resonance_tol)?;
    let out = DtnOutput {
        mesh_h: h,
        report,
        metadata: ctx.metadata("dtn", args, Some(p.mesh())),
    };
    emit(&args.out, &to_pretty(&out))?;
    Ok(0)
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    kind: ProblemKind,
    #[serde(serialize_with = "sci")]
    alpha: f64,
    #[serde(serialize_with = "sci")]
    mesh_h: f64,
    ndof: usize,
    #[serde(serialize_with = "sci_seq")]
    neumann: Vec<f64>,
    #[serde(serialize_with = "sci_seq")]
    dirichlet: Vec<f64>,
    #[serde(serialize_with = "sci_seq")]
    gaps: Vec<f64>,
    #[serde(serialize_with = "sci_seq")]
    error_estimates: Vec<f64>,
    verdicts: Vec<bool>,
    pass: bool,
    report: crate::lab::ExperimentReport,
    metadata: Metadata<'a, VerifyArgs>,
}

fn cmd_verify(ctx: &Context, args: &VerifyArgs) -> Result<i32> {
    let mut cfg = FriedlanderConfig::new(args.domain, args.kind, args.alpha, args.h, args.n_max);
    cfg.sides = args.sides;
    cfg.margin = args.margin;
    cfg.order = args.order;
    let mut report = run_friedlander_with(&cfg)?;
    if !ctx.timings {
        report.runtime_seconds = None;
    }
    let mesh = generate(args.domain, args.h, args.sides)?;
    if let Some(csv) = &args.csv {
        emit(&Some(csv.clone()), &report.to_csv())?;
    }
    let pass = report.pass;
    let out = VerifyOutput {
        kind: args.kind,
        alpha: report.config.alpha,
        mesh_h: args.h,
        ndof: report.ndof,
        neumann: report.neumann.clone(),
        dirichlet: report.dirichlet.clone(),
        gaps: report.gaps.clone(),
        error_estimates: report.error_estimates.clone(),
        verdicts: report.verdicts.clone(),
        pass,
        report,
        metadata: ctx.metadata("verify", args, Some(&mesh)),
    };
    emit(&args.out, &to_pretty(&out))?;
    if !pass {
        eprintln!("interlacing not confirmed beyond the margin");
    }
    Ok(if pass { 0 } else { 2 })
}

#[derive(Serialize)]
struct StudyOutput<'a> {
    report: crate::lab::ConvergenceReport,
    metadata: Metadata<'a, StudyArgs>,
}

fn cmd_study(ctx: &Context, args: &StudyArgs) -> Result<i32> {
    let report = convergence_study(args.domain, args.kind, args.alpha, &args.h_list, args.n, args.sides)?;
    let out = StudyOutput {
        report,
        metadata: ctx.metadata("study", args, None),
    };
    emit(&args.out, &to_pretty(&out))?;
    Ok(0)
}

#[derive(Serialize)]
struct MeshOutputSummary<'a> {
    vertices: usize,
    triangles: usize,
    boundary_edges: usize,
    metadata: Metadata<'a, MeshArgs>,
}

fn cmd_mesh(ctx: &Context, args: &MeshArgs) -> Result<i32> {
    let mesh = generate(args.domain, args.h, args.sides)?;
    match &args.out {
        Some(path) => {
            emit(&Some(path.clone()), &mesh.to_json_string())?;
            let summary = MeshOutputSummary {
                vertices: mesh.num_vertices(),
                triangles: mesh.num_triangles(),
                boundary_edges: mesh.boundary_edges().len(),
                metadata: ctx.metadata("mesh", args, Some(&mesh)),
            };
            eprint!("{}", to_pretty(&summary));
        }
        None => print!("{}", mesh.to_json_string()),
    }
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<i32> {
    let ctx = Context {
        parallel: cli.parallel,
        timings: cli.timings,
        start: std::time::Instant::now(),
    };
    if !cli.parallel {
        faer::set_global_parallelism(faer::Par::Seq);
    }
    match &cli.command {
        Command::Mesh(a) => cmd_mesh(&ctx, a),
        Command::Solve(a) => cmd_solve(&ctx, a),
        Command::Sweep(a) => cmd_sweep(&ctx, a),
        Command::Dtn(a) => cmd_dtn(&ctx, a),
        Command::Verify(a) => cmd_verify(&ctx, a),
        Command::Study(a) => cmd_study(&ctx, a),
    }
}

/// Parses `args` (including the program name), merges the optional config
/// file and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    // merged before parsing so required flags may come from the file
    if let Some(path) = config_path(&args) {
        match merge_config(&args, &path) {
            Ok(merged) => args = merged,
            Err(e) => {
                eprintln!("error: {e}");
                return 1;
            }
        }
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => return usage_exit(e),
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let Some(s) = a.to_str() else { continue };
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn usage_exit(e: clap::Error) -> i32 {
    use clap::error::ErrorKind;
    let _ = e.print();
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
        _ => 1,
    }
}

//! `glmpbb`: solve, generate, benchmark and cross-check GLMP instances.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use glmp_core::bb::write_trace_csv;
use glmp_core::generate::{generate, GenSpec, Scheme};
use glmp_core::oracle::{grid_error_bound, grid_min_psi, vertex_min_h};
use glmp_core::{partition_terms, solve, GlmpError, GlmpInstance, SolveResult, SolveStatus, SolverConfig};
use rayon::prelude::*;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;
pub const LOG_ENV: &str = "GLMPBB_LOG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_LIMIT: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: invalid instance JSON: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Solver(#[from] GlmpError),
    #[error("{0}")]
    Usage(String),
    #[error("writing output: {0}")]
    Output(#[from] io::Error),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Parser)]
#[command(name = "glmpbb", version, about = "Global solver for generalized linear multiplicative programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance and print the result as JSON.
    Solve(SolveArgs),
    /// Write a random instance as JSON.
    Generate(GenerateArgs),
    /// Solve a batch of random instances and print averages as CSV.
    Bench(BenchArgs),
    /// Brute-force reference values for a small instance.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    /// Absolute optimality gap on ln h.
    #[arg(long, default_value_t = 1e-4, allow_negative_numbers = true)]
    pub eps: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iters: u64,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 3600.0, allow_negative_numbers = true)]
    pub time_limit: f64,
    /// Subproblem tolerance; defaults to eps / 10.
    #[arg(long, allow_negative_numbers = true)]
    pub sub_tol: Option<f64>,
}

impl SolverFlags {
    pub fn config(&self) -> Result<SolverConfig, CliError> {
        let mut cfg = SolverConfig::with_epsilon(self.eps);
        cfg.max_iterations = self.max_iters;
        if self.time_limit.is_nan() || self.time_limit < 0.0 {
            return Err(CliError::Usage(format!(
                "--time-limit must be nonnegative, got {}",
                self.time_limit
            )));
        }
        cfg.time_limit = Duration::try_from_secs_f64(self.time_limit).ok();
        if let Some(tol) = self.sub_tol {
            cfg.sub_tol = tol;
        }
        cfg.check()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance JSON file.
    pub path: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    P1,
    P2,
    P3,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::P1 => Scheme::P1,
            SchemeArg::P2 => Scheme::P2,
            SchemeArg::P3 => Scheme::P3,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenFlags {
    #[arg(long, value_enum, default_value = "p1")]
    pub scheme: SchemeArg,
    /// Number of random constraint rows.
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Number of terms (ignored by p1).
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Number of positive exponents (p3 only).
    #[arg(long, default_value_t = 1)]
    pub pbar: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = GenSpec::DEFAULT_MAX_RETRIES)]
    pub max_retries: usize,
}

impl GenFlags {
    pub fn spec(&self, seed: u64) -> GenSpec {
        let mut spec = GenSpec::new(self.scheme.into(), self.m, self.n, seed).with_terms(self.p, self.pbar);
        spec.max_retries = self.max_retries;
        spec
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub gen: GenFlags,
    /// Write the instance here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub gen: GenFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Instances to draw; instance i uses seed + i.
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Instances solved concurrently. Each solve stays single-threaded.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write the summary CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write one CSV row per instance.
    #[arg(long)]
    pub runs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub path: PathBuf,
    /// Grid resolution over the initial simplex.
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "error");
    let _ = env_logger::Builder::from_env(env).format_timestamp_millis().try_init();
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Generate(args) => cmd_generate(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::Oracle(args) => cmd_oracle(&args),
    }
}

pub fn load_instance(path: &Path) -> Result<GlmpInstance, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    GlmpInstance::from_json(&text).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    fs::File::create(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn millis(seconds: f64) -> f64 {
    (seconds * 1000.0).round() / 1000.0
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    schema_version: u32,
    instance: &'a str,
    epsilon: f64,
    #[serde(flatten)]
    result: &'a SolveResult,
}

pub fn exit_code(status: SolveStatus) -> i32 {
    if status.is_limit() {
        EXIT_LIMIT
    } else {
        EXIT_OK
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<i32, CliError> {
    let cfg = args.solver.config()?;
    let instance = load_instance(&args.path)?;
    let mut result = solve(&instance, &cfg)?;
    result.elapsed_seconds = millis(result.elapsed_seconds);
    if let Some(path) = &args.trace {
        write_trace_csv(&result.trace, create(path)?)?;
    }
    let output = SolveOutput {
        schema_version: SCHEMA_VERSION,
        instance: instance.name(),
        epsilon: cfg.epsilon,
        result: &result,
    };
    let mut text = serde_json::to_string_pretty(&output).expect("result serializes");
    text.push('\n');
    emit(args.out.as_deref(), &text)?;
    Ok(exit_code(result.status))
}

fn cmd_generate(args: &GenerateArgs) -> Result<i32, CliError> {
    let instance = generate(&args.gen.spec(args.gen.seed))?;
    let mut text = instance.to_json();
    text.push('\n');
    emit(args.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

/// One benchmark solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRun {
    pub seed: u64,
    pub status: SolveStatus,
    pub iterations: u64,
    pub time: f64,
    pub h_value: f64,
}

/// Column means over a batch of runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub scheme: String,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub p_bar: usize,
    pub repeats: usize,
    pub solved: usize,
    pub avg_iter: f64,
    pub avg_time: f64,
    pub opt_val: f64,
}

pub const BENCH_HEADER: [&str; 10] = [
    "scheme", "m", "n", "p", "p_bar", "repeats", "solved", "avg_iter", "avg_time", "opt_val",
];

pub fn summarize(flags: &GenFlags, p_bar: usize, runs: &[BenchRun]) -> BenchSummary {
    let count = runs.len().max(1) as f64;
    let mean = |f: fn(&BenchRun) -> f64| runs.iter().map(f).sum::<f64>() / count;
    BenchSummary {
        scheme: format!("{:?}", flags.scheme).to_lowercase(),
        m: flags.m,
        n: flags.n,
        p: if flags.scheme == SchemeArg::P1 { 2 } else { flags.p },
        p_bar,
        repeats: runs.len(),
        solved: runs.iter().filter(|r| !r.status.is_limit()).count(),
        avg_iter: mean(|r| r.iterations as f64),
        avg_time: millis(mean(|r| r.time)),
        opt_val: mean(|r| r.h_value),
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<i32, CliError> {
    if args.repeats == 0 {
        return Err(CliError::Usage("--repeats must be positive".into()));
    }
    let cfg = args.solver.config()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let outcomes: Vec<Result<(usize, BenchRun), GlmpError>> = pool.install(|| {
        (0..args.repeats as u64)
            .into_par_iter()
            .map(|i| {
                let seed = args.gen.seed.wrapping_add(i);
                let instance = generate(&args.gen.spec(seed))?;
                let p_bar = partition_terms(&instance)?.p_bar();
                let r = solve(&instance, &cfg)?;
                log::info!("seed {seed}: {:?} in {} iterations", r.status, r.iterations);
                Ok((
                    p_bar,
                    BenchRun {
                        seed,
                        status: r.status,
                        iterations: r.iterations,
                        time: r.elapsed_seconds,
                        h_value: r.h_value,
                    },
                ))
            })
            .collect()
    });
    let mut runs = Vec::with_capacity(outcomes.len());
    let mut p_bar = 0;
    for outcome in outcomes {
        let (pb, run) = outcome?;
        p_bar = pb;
        runs.push(run);
    }

    if let Some(path) = &args.runs {
        let mut w = csv::Writer::from_writer(create(path)?);
        for run in &runs {
            w.serialize(run)?;
        }
        w.flush()?;
    }
    let summary = summarize(&args.gen, p_bar, &runs);
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.serialize(&summary)?;
        w.flush()?;
    }
    emit(args.out.as_deref(), &String::from_utf8(buf).expect("CSV is UTF-8"))?;
    Ok(if runs.iter().any(|r| r.status.is_limit()) {
        EXIT_LIMIT
    } else {
        EXIT_OK
    })
}

#[derive(Serialize)]
struct GridReport {
    resolution: usize,
    ln_value: f64,
    h_value: f64,
    t: Vec<f64>,
    error_bound: f64,
}

#[derive(Serialize)]
struct VertexReport {
    h_value: f64,
    x: Vec<f64>,
}

#[derive(Serialize)]
struct OracleOutput<'a> {
    schema_version: u32,
    instance: &'a str,
    grid: Option<GridReport>,
    vertex: Option<VertexReport>,
    notes: Vec<String>,
}

fn cmd_oracle(args: &OracleArgs) -> Result<i32, CliError> {
    let instance = load_instance(&args.path)?;
    glmp_core::validate(&instance, glmp_core::model::DEFAULT_DELTA_POS)?.into_result()?;
    let part = partition_terms(&instance)?;
    let mut notes = Vec::new();

    let grid = if part.p_bar() == 0 {
        notes.push("grid: no positive exponents".to_string());
        None
    } else {
        let bounds = glmp_core::bb::compute_t_bounds(&instance, &part)?;
        let alphas: Vec<f64> = part.j_plus.iter().map(|&j| instance.terms()[j].alpha).collect();
        match grid_min_psi(&instance, &bounds, args.resolution) {
            Ok((value, t)) => Some(GridReport {
                resolution: args.resolution,
                ln_value: value,
                h_value: value.exp(),
                t: t.into_inner(),
                error_bound: grid_error_bound(&bounds, &alphas, args.resolution)?,
            }),
            Err(GlmpError::OracleUnsupported(why)) => {
                notes.push(format!("grid: {why}"));
                None
            }
            Err(e) => return Err(e.into()),
        }
    };
    let vertex = match vertex_min_h(&instance) {
        Ok((h_value, x)) => Some(VertexReport { h_value, x }),
        Err(GlmpError::OracleUnsupported(why)) => {
            notes.push(format!("vertex: {why}"));
            None
        }
        Err(e) => return Err(e.into()),
    };
    let output = OracleOutput {
        schema_version: SCHEMA_VERSION,
        instance: instance.name(),
        grid,
        vertex,
        notes,
    };
    let mut text = serde_json::to_string_pretty(&output).expect("oracle report serializes");
    text.push('\n');
    emit(args.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

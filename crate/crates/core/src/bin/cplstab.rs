//! `cplstab`: validate, analyze, sweep and cross-check network models.
//!
//! Exit codes: 0 success (including a proven absence of equilibria),
//! 1 validation failure, 2 unreadable input or bad options, 3 inconclusive
//! analysis, 4 oracle asked for more than two nodes.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use cpl_core::adapters::NetworkSpec;
use cpl_core::input::read_network;
use cpl_core::oracle::{enumerate, DEFAULT_GRID_DENSITY};
use cpl_core::report::{AnalysisReport, ReportOutcome, Timings};
use cpl_core::sweep::{sweep, AxisRange, SweepSpec};
use cpl_core::{classify, validate_system, ClassifyOptions, Error, SystemData};

const EXIT_INVALID: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;
const EXIT_ORACLE_DIM: u8 = 4;

#[derive(Parser)]
#[command(name = "cplstab", version, about = "Voltage equilibria of networks with constant power loads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural assumptions on A and print the report.
    Validate { input: PathBuf },
    /// Decide whether an equilibrium exists and compute the dominant one.
    Analyze(AnalyzeArgs),
    /// Classify a grid over two coordinates of b and write CSV.
    Sweep(SweepArgs),
    /// Enumerate equilibria by brute force (n <= 2).
    Oracle {
        input: PathBuf,
        /// Grid cells per axis for two-node systems.
        #[arg(long, default_value_t = DEFAULT_GRID_DENSITY)]
        density: usize,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = cpl_core::seed::DEFAULT_SAFETY)]
    safety: f64,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    converge_tol: Option<f64>,
    #[arg(long)]
    max_time: Option<f64>,
}

impl SolverArgs {
    fn options(&self) -> ClassifyOptions {
        let mut o = ClassifyOptions { safety: self.safety, ..ClassifyOptions::default() };
        let i = &mut o.integration;
        if let Some(v) = self.rel_tol {
            i.rel_tol = v;
        }
        if let Some(v) = self.abs_tol {
            i.abs_tol = v;
        }
        if let Some(v) = self.converge_tol {
            i.converge_tol = v;
        }
        if let Some(v) = self.max_time {
            i.max_time = v;
        }
        o
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the characteristic trajectory as CSV.
    #[arg(long)]
    traj_out: Option<PathBuf>,
    /// Print the full JSON report instead of a summary.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    no_timings: bool,
}

#[derive(Args)]
struct SweepArgs {
    input: PathBuf,
    /// Node number (1-based) of the first swept coordinate.
    #[arg(long)]
    axis_i: usize,
    #[arg(long)]
    axis_j: usize,
    /// `lo:hi`, given once per axis.
    #[arg(long = "range", value_parser = parse_range, allow_hyphen_values = true, num_args = 1)]
    ranges: Vec<(f64, f64)>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 21)]
    steps: usize,
    #[arg(long, env = "CPL_WORKERS")]
    workers: Option<usize>,
    /// CSV destination; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bisect every feasible/infeasible neighbour pair and write the
    /// boundary points as CSV to this path.
    #[arg(long)]
    refine: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(lo)?, parse(hi)?))
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Invalid(_) => EXIT_INVALID,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: EXIT_INPUT, message: e.to_string() }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

type Run = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { input } => cmd_validate(&input),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Oracle { input, density } => cmd_oracle(&input, density),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("cplstab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> Result<(NetworkSpec, SystemData), Failure> {
    let spec = read_network(path)?;
    let sys = spec.reduce()?;
    Ok((spec, sys))
}

fn print_json<T: serde::Serialize>(value: &T) -> io::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
}

fn cmd_validate(input: &Path) -> Run {
    let spec = read_network(input)?;
    let report = match spec.reduce() {
        Ok(sys) => validate_system(&sys),
        Err(Error::Invalid(report)) => report,
        Err(e) => return Err(e.into()),
    };
    print_json(&report)?;
    Ok(if report.passed { 0 } else { EXIT_INVALID })
}

fn cmd_analyze(args: &AnalyzeArgs) -> Run {
    let start = Instant::now();
    let (spec, sys) = load(&args.input)?;
    let opts = args.solver.options();
    let analysis = classify(&sys, &opts)?;
    let mut report = AnalysisReport::new(spec.kind(), &analysis, &opts);
    if let Some(path) = &args.traj_out {
        let file = File::create(path)
            .map_err(|e| fail(EXIT_INPUT, format!("cannot create {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        analysis.trajectory.write_csv(&mut w)?;
        w.flush()?;
        report.trajectory.path = Some(path.display().to_string());
    }
    if !args.no_timings {
        report.timings = Some(Timings { total_ms: start.elapsed().as_secs_f64() * 1e3 });
    }
    if args.json {
        print_json(&report)?;
    } else {
        print_summary(&report)?;
    }
    Ok(match report.outcome {
        ReportOutcome::Inconclusive { .. } => EXIT_INCONCLUSIVE,
        _ => 0,
    })
}

fn print_summary(r: &AnalysisReport) -> io::Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "model: {} (n = {})", r.input.model, r.input.n)?;
    writeln!(out, "seed: mu = {}, margin = {:e}", r.seed.mu, r.seed.margin)?;
    if r.zero_power_deviation {
        writeln!(out, "warning: some b_i = 0; existence theory does not apply")?;
    }
    match &r.outcome {
        ReportOutcome::Dominant { x_max, residual } => {
            writeln!(out, "outcome: dominant equilibrium")?;
            writeln!(out, "x_max: {x_max:?}")?;
            writeln!(out, "residual: {residual:e}")?;
        }
        ReportOutcome::None { collapsed_nodes, collapse_time } => {
            writeln!(out, "outcome: no equilibrium")?;
            writeln!(out, "collapsed nodes: {collapsed_nodes:?} at t = {collapse_time}")?;
        }
        ReportOutcome::Inconclusive { reason, detail, .. } => {
            writeln!(out, "outcome: inconclusive ({reason:?}): {detail}")?;
        }
    }
    if let Some(s) = &r.stability {
        writeln!(out, "eigenvalues: {:?}", s.eigenvalues)?;
        writeln!(out, "long-term stable: {}", s.long_term_stable)?;
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Run {
    let (_, sys) = load(&args.input)?;
    let n = sys.dim();
    let axis = |k: usize| {
        if k == 0 || k > n {
            Err(fail(EXIT_INPUT, format!("axis {k} is outside 1..={n}")))
        } else {
            Ok(k - 1)
        }
    };
    let (lo_hi_i, lo_hi_j) = match args.ranges.as_slice() {
        [r] => (*r, *r),
        [ri, rj] => (*ri, *rj),
        _ => return Err(fail(EXIT_INPUT, "give --range once or twice (lo:hi)")),
    };
    let spec = SweepSpec {
        base: sys,
        axis_i: axis(args.axis_i)?,
        axis_j: axis(args.axis_j)?,
        range_i: AxisRange { lo: lo_hi_i.0, hi: lo_hi_i.1, steps: args.steps },
        range_j: AxisRange { lo: lo_hi_j.0, hi: lo_hi_j.1, steps: args.steps },
    };
    let workers = args.workers.unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    });
    let map = sweep(&spec, &args.solver.options(), workers, args.refine.is_some())?;
    for w in &map.warnings {
        eprintln!("cplstab: warning: {w}");
    }
    match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            map.write_csv(&mut w)?;
            w.flush()?;
        }
        None => map.write_csv(io::stdout().lock())?,
    }
    if let Some(path) = &args.refine {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "b{},b{}", spec.axis_i + 1, spec.axis_j + 1)?;
        for p in &map.refined_boundary {
            writeln!(w, "{},{}", p.b_i, p.b_j)?;
        }
        w.flush()?;
    }
    Ok(0)
}

fn cmd_oracle(input: &Path, density: usize) -> Run {
    let (_, sys) = load(input)?;
    if sys.dim() > 2 {
        return Err(fail(EXIT_ORACLE_DIM, format!("the oracle handles n <= 2, got n = {}", sys.dim())));
    }
    let list = enumerate(&sys, density)?;
    print_json(&list)?;
    Ok(0)
}

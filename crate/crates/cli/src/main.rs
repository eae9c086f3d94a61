//! Command-line front end: synthetic data generation, ridge tuning, certified
//! solves with a JSON report, and batch-size benchmarking.
//!
//! Every value flag can also be set through an environment variable with the
//! `SPARSEBNB_` prefix (e.g. `SPARSEBNB_GAP_TOL=1e-4`). Exit codes: 0 when a
//! solve ends Optimal or GapReached (and for gen/tune/bench), 2 when a limit
//! or cancellation stopped it, 1 for flag or IO errors.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use sparsebnb::bnb::{
    bench_batch_sizes, solve_with, SolveEvent, SolveOptions, SolveStatus,
};
use sparsebnb::data::{
    default_big_m, generate, load_csv, tune_lambda2, write_matrix_csv, write_report,
    write_vector_csv, Preprocess, SyntheticSpec,
};
use sparsebnb::problem::ProblemData;
use sparsebnb::Result;

#[derive(Parser)]
#[command(
    name = "sparsebnb",
    version,
    about = "Exact l0/l2-penalized sparse regression with optimality certificates"
)]
struct Cli {
    /// Worker threads for the batched kernels (0 = one per core).
    #[arg(long, global = true, default_value_t = 0, env = "SPARSEBNB_THREADS")]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance as X.csv, y.csv and truth.csv.
    Gen(GenArgs),
    /// Tune the ridge penalty on a synthetic instance; prints lambda2* and M*.
    Tune(TuneArgs),
    /// Solve an instance from CSV files and write a JSON report.
    Solve(Box<SolveArgs>),
    /// Solve one synthetic instance once per batch size and print a table.
    Bench(BenchArgs),
}

/// Flags describing a synthetic instance.
#[derive(Args)]
struct SyntheticFlags {
    /// Number of samples.
    #[arg(long, env = "SPARSEBNB_N")]
    n: usize,
    /// Number of features.
    #[arg(long, env = "SPARSEBNB_P")]
    p: usize,
    /// Nonzeros in the ground truth.
    #[arg(long, env = "SPARSEBNB_K0")]
    k0: usize,
    /// Pairwise feature correlation in [0, 1).
    #[arg(long, default_value_t = 0.0, env = "SPARSEBNB_CORR")]
    corr: f64,
    /// Signal-to-noise ratio.
    #[arg(long, default_value_t = 10.0, env = "SPARSEBNB_SNR")]
    snr: f64,
    /// RNG seed; identical seeds reproduce instances bit for bit.
    #[arg(long, default_value_t = 0, env = "SPARSEBNB_SEED")]
    seed: u64,
}

impl SyntheticFlags {
    fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            n: self.n,
            p: self.p,
            k0: self.k0,
            corr: self.corr,
            snr: self.snr,
            seed: self.seed,
        }
    }
}

/// Solver tolerances and limits shared by `solve` and `bench`.
#[derive(Args)]
struct SolverFlags {
    /// ADMM penalty strength.
    #[arg(long, default_value_t = 1.0, env = "SPARSEBNB_RHO")]
    rho: f64,
    /// Target relative optimality gap.
    #[arg(long, default_value_t = 1e-2, env = "SPARSEBNB_GAP_TOL")]
    gap_tol: f64,
    /// Integrality tolerance for indicator rounding.
    #[arg(long, default_value_t = 1e-4, env = "SPARSEBNB_INT_TOL")]
    int_tol: f64,
    /// Per-node relaxation convergence tolerance.
    #[arg(long, default_value_t = 1e-4, env = "SPARSEBNB_SUBPROBLEM_TOL")]
    subproblem_tol: f64,
    /// ADMM sweep cap per node.
    #[arg(long, default_value_t = 10_000, env = "SPARSEBNB_ADMM_MAX_ITERS")]
    admm_max_iters: usize,
    /// Convergence test cadence, in sweeps.
    #[arg(long, default_value_t = 10, env = "SPARSEBNB_CHECK_EVERY")]
    check_every: usize,
    /// Upper-bound solver stopping tolerance.
    #[arg(long, default_value_t = 1e-8, env = "SPARSEBNB_FPG_TOL")]
    fpg_tol: f64,
    /// Upper-bound solver iteration cap.
    #[arg(long, default_value_t = 5_000, env = "SPARSEBNB_FPG_MAX_ITERS")]
    fpg_max_iters: usize,
    /// Warm-start heuristic residual refresh cadence.
    #[arg(long, default_value_t = 50, env = "SPARSEBNB_MP_REFRESH_EVERY")]
    mp_refresh_every: usize,
    /// Wall-clock limit in seconds.
    #[arg(long, env = "SPARSEBNB_TIME_LIMIT")]
    time_limit: Option<f64>,
    /// Cap on solved nodes.
    #[arg(long, env = "SPARSEBNB_NODE_LIMIT")]
    node_limit: Option<u64>,
    /// Cap on retained warm-start states.
    #[arg(long, default_value_t = 10_000, env = "SPARSEBNB_MAX_WARM_STATES")]
    max_warm_states: usize,
}

impl SolverFlags {
    fn options(&self, batch: usize) -> SolveOptions<f64> {
        let mut opts = SolveOptions::<f64>::default();
        opts.rho = self.rho;
        opts.batch = batch;
        opts.gap_tol = self.gap_tol;
        opts.int_tol = self.int_tol;
        opts.admm.subproblem_tol = self.subproblem_tol;
        opts.admm.max_iters = self.admm_max_iters;
        opts.admm.check_every = self.check_every;
        opts.fpg.tol = self.fpg_tol;
        opts.fpg.max_iters = self.fpg_max_iters;
        opts.mp.refresh_every = self.mp_refresh_every;
        opts.mp.fpg = opts.fpg.clone();
        opts.time_limit = self.time_limit.map(Duration::from_secs_f64);
        opts.node_limit = self.node_limit;
        opts.max_warm_states = self.max_warm_states;
        opts
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    synth: SyntheticFlags,
    /// Directory receiving X.csv, y.csv and truth.csv.
    #[arg(long, default_value = ".", env = "SPARSEBNB_OUT_DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    synth: SyntheticFlags,
}

#[derive(Args)]
struct SolveArgs {
    /// Design matrix CSV, one sample per row.
    #[arg(long, value_name = "PATH", env = "SPARSEBNB_X")]
    x: PathBuf,
    /// Response CSV, one value per row.
    #[arg(long, value_name = "PATH", env = "SPARSEBNB_Y")]
    y: PathBuf,
    /// Cardinality penalty weight.
    #[arg(long, env = "SPARSEBNB_LAMBDA0")]
    lambda0: f64,
    /// Ridge penalty weight.
    #[arg(long, env = "SPARSEBNB_LAMBDA2")]
    lambda2: f64,
    /// Coefficient box radius.
    #[arg(long, env = "SPARSEBNB_BIG_M")]
    big_m: f64,
    /// Mean-center design columns and the response.
    #[arg(long, env = "SPARSEBNB_CENTER")]
    center: bool,
    /// Rescale design columns to unit norm (after centering).
    #[arg(long, env = "SPARSEBNB_NORMALIZE")]
    normalize: bool,
    /// Nodes per batched round.
    #[arg(long, default_value_t = 8, env = "SPARSEBNB_BATCH")]
    batch: usize,
    /// Report destination.
    #[arg(long, default_value = "report.json", env = "SPARSEBNB_REPORT")]
    report: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    synth: SyntheticFlags,
    /// Cardinality penalty weight.
    #[arg(long, env = "SPARSEBNB_LAMBDA0")]
    lambda0: f64,
    /// Ridge penalty weight; tuned on the ground truth when omitted.
    #[arg(long, env = "SPARSEBNB_LAMBDA2")]
    lambda2: Option<f64>,
    /// Coefficient box radius; 1.5x the tuned ridge solution when omitted.
    #[arg(long, env = "SPARSEBNB_BIG_M")]
    big_m: Option<f64>,
    /// Comma-separated batch sizes to sweep.
    #[arg(long, value_delimiter = ',', default_value = "1,8,32", env = "SPARSEBNB_BATCH")]
    batch: Vec<usize>,
    #[command(flatten)]
    solver: SolverFlags,
}

fn main() {
    std::process::exit(run(std::env::args_os()));
}

/// Parses and dispatches; returns the process exit code.
fn run<I>(argv: I) -> i32
where
    I: IntoIterator<Item = OsString>,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests print to stdout and succeed; real
            // flag errors print usage to stderr and fail.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    if cli.threads > 0 {
        if let Err(err) =
            rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()
        {
            eprintln!("warning: could not size the thread pool: {err}");
        }
    }
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Solve(args) => cmd_solve(*args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<i32> {
    let inst = generate::<f64>(&args.synth.spec())?;
    std::fs::create_dir_all(&args.out_dir)?;
    write_matrix_csv(&args.out_dir.join("X.csv"), &inst.x.view())?;
    write_vector_csv(&args.out_dir.join("y.csv"), &inst.y.view())?;
    write_vector_csv(&args.out_dir.join("truth.csv"), &inst.beta_true.view())?;
    println!("sigma={:.16e}", inst.sigma);
    Ok(0)
}

fn cmd_tune(args: TuneArgs) -> Result<i32> {
    let inst = generate::<f64>(&args.synth.spec())?;
    let lambda2 = tune_lambda2(&inst)?;
    let big_m = default_big_m(&inst, lambda2)?;
    println!("lambda2_star={lambda2:.16e}");
    println!("big_m_star={big_m:.16e}");
    Ok(0)
}

fn status_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal | SolveStatus::GapReached => 0,
        SolveStatus::TimeLimit | SolveStatus::NodeLimit | SolveStatus::Cancelled => 2,
    }
}

fn cmd_solve(args: SolveArgs) -> Result<i32> {
    let pre = Preprocess { center: args.center, normalize: args.normalize };
    let (x, y) = load_csv::<f64>(&args.x, &args.y, pre)?;
    let prob = ProblemData::new(x, y, args.lambda0, args.lambda2, args.big_m)?;
    let opts = args.solver.options(args.batch);
    let report = solve_with(&prob, &opts, None, |event| {
        if let SolveEvent::Round(pr) = event {
            eprintln!(
                "iter={} ub={:.6e} lb={:.6e} gap={:.6e} nodes={} open={}",
                pr.round, pr.upper, pr.lower, pr.gap, pr.nodes_solved, pr.open
            );
        }
    })?;
    write_report(&report, &args.report)?;
    println!(
        "status={} objective={:.16e} gap={:.16e} nodes={}",
        report.status, report.best_objective, report.gap, report.nodes_solved
    );
    Ok(status_code(report.status))
}

fn cmd_bench(args: BenchArgs) -> Result<i32> {
    let inst = generate::<f64>(&args.synth.spec())?;
    let lambda2 = match args.lambda2 {
        Some(v) => v,
        None => tune_lambda2(&inst)?,
    };
    let big_m = match args.big_m {
        Some(v) => v,
        None => default_big_m(&inst, lambda2)?,
    };
    let prob = inst.to_problem(args.lambda0, lambda2, big_m)?;
    let rows = bench_batch_sizes(&prob, &args.solver.options(8), &args.batch)?;
    println!(
        "{:>6} {:>8} {:>12} {:>12} {:>12} {:>24} {}",
        "batch", "nodes", "wall_s", "nodes_per_s", "gap", "objective", "status"
    );
    for row in rows {
        let wall = row.wall_time.as_secs_f64();
        let rate = if wall > 0.0 { row.nodes_solved as f64 / wall } else { f64::INFINITY };
        println!(
            "{:>6} {:>8} {:>12.6} {:>12.2} {:>12.4e} {:>24.16e} {}",
            row.batch, row.nodes_solved, wall, rate, row.gap, row.objective, row.status
        );
    }
    Ok(0)
}

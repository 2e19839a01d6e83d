use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fitbo::acquisition::AcquisitionKind;
use fitbo::benchmarks::Benchmark;
use fitbo_cli::{
    cmd_bench_runtime, cmd_run, default_out_dir, CliError, ExperimentConfig, Method, RuntimeConfig,
};

#[derive(Parser)]
#[command(
    name = "fitbo",
    version,
    about = "FITBO experiments and runtime benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated optimisation runs with per-run traces and aggregate curves.
    Run(RunArgs),
    /// Time batch acquisition evaluation over grids of M and d.
    BenchRuntime(BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "branin")]
    benchmark: String,
    /// Comma-separated methods: fitbo, fitbo-mm, ei, pi, ucb, random.
    #[arg(long, default_value = "fitbo,fitbo-mm,random", value_delimiter = ',')]
    acq: Vec<String>,
    #[arg(long, default_value_t = 80)]
    iters: usize,
    /// Repetitions per method [default: 20, or 40 with --paper-scale].
    #[arg(long)]
    reps: Option<usize>,
    /// Hyperparameter samples M per iteration.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Acquisition evaluations per iteration.
    #[arg(long, default_value_t = 2000)]
    budget: usize,
    /// Initial design size [default: 3, or 9 for six or more dimensions].
    #[arg(long)]
    init: Option<usize>,
    #[arg(long, default_value_t = 1e-3f64.sqrt())]
    noise_std: f64,
    /// Fix the noise hyperparameter at --noise-std instead of sampling it.
    #[arg(long)]
    pin_noise: bool,
    #[arg(long)]
    paper_scale: bool,
    /// Output directory [default: $FITBO_OUT_DIR or ./results].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(
        long,
        default_value = "fitbo,fitbo-mm,ei,pi,ucb",
        value_delimiter = ','
    )]
    acq_list: Vec<String>,
    #[arg(long, default_value = "100,300,500,700,900", value_delimiter = ',')]
    m_list: Vec<usize>,
    #[arg(long, default_value = "2", value_delimiter = ',')]
    d_list: Vec<usize>,
    /// Initialisations per grid cell [default: 20, or 100 with --paper-scale].
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    paper_scale: bool,
    /// Report file [default: $FITBO_OUT_DIR/runtime.csv or ./results/runtime.csv].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn run(args: RunArgs) -> fitbo_cli::Result<()> {
    let benchmark: Benchmark = args.benchmark.parse().map_err(usage)?;
    let methods = args
        .acq
        .iter()
        .map(|s| s.parse::<Method>())
        .collect::<fitbo_cli::Result<Vec<_>>>()?;
    let out_dir = args.out.unwrap_or_else(default_out_dir);
    let cfg = ExperimentConfig {
        iters: args.iters,
        reps: args.reps.unwrap_or(if args.paper_scale { 40 } else { 20 }),
        samples: args.samples,
        seed: args.seed,
        acq_budget: args.budget,
        init_count: args.init,
        noise_std: args.noise_std,
        pin_noise: args.pin_noise,
        jobs: args.jobs,
        ..ExperimentConfig::new(benchmark, methods, out_dir)
    };
    let report = cmd_run(&cfg)?;
    for s in &report.methods {
        let last = s.aggregate.last();
        println!(
            "{:<9} runs {:>3}  failed {:>3}  final median IR {}  -> {}",
            s.method.name(),
            s.traces.len(),
            s.failures.len(),
            last.and_then(|r| r.median_ir)
                .map_or("n/a".to_string(), |v| format!("{v:.4e}")),
            cfg.aggregate_path(s.method).display()
        );
    }
    Ok(())
}

fn bench(args: BenchArgs) -> fitbo_cli::Result<()> {
    let kinds = args
        .acq_list
        .iter()
        .map(|s| s.parse::<AcquisitionKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let cfg = RuntimeConfig {
        kinds,
        m_list: args.m_list,
        d_list: args.d_list,
        reps: args.reps.unwrap_or(if args.paper_scale { 100 } else { 20 }),
        seed: args.seed,
        out: Some(
            args.out
                .unwrap_or_else(|| default_out_dir().join("runtime.csv")),
        ),
    };
    let report = cmd_bench_runtime(&cfg)?;
    println!(
        "{:<9} {:>5} {:>3} {:>12} {:>12}",
        "kind", "M", "d", "mean_s", "std_s"
    );
    for r in &report.rows {
        println!(
            "{:<9} {:>5} {:>3} {:>12.6} {:>12.6}",
            r.kind, r.m, r.d, r.mean_s, r.std_s
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::BenchRuntime(args) => bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

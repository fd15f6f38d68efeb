use clap::{Args, Parser, Subcommand};
use iris_planner::bench::{
    load_scenario, run_experiment, summary_csv, verify_report, ExperimentSpec,
};
use iris_planner::oracle::ExplicitGraph;
use iris_planner::planner::Variant;
use iris_planner::work::ClockMode;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

#[derive(Parser)]
#[command(
    name = "iris",
    version,
    about = "Inspection planning on incrementally densified roadmaps"
)]
struct Cli {
    /// Increase log detail on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan on a scenario and emit trace, timing and summary CSVs.
    Run(RunArgs),
    /// Compare the search against the exhaustive optimum on a graph file.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated variants (iris, c, l, cl, cli, cle, cile) or `all`.
    #[arg(long)]
    variant: Option<String>,
    /// Comma-separated seeds, or a half-open range `a..b`.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "budget-s")]
    budget_s: Option<f64>,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    f: Option<f64>,
    #[arg(long = "p-accept")]
    p_accept: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long = "n-max")]
    n_max: Option<u64>,
    /// Iteration cap in addition to the time budget.
    #[arg(long = "max-iters")]
    max_iters: Option<u64>,
    /// `wall` or `work`.
    #[arg(long)]
    clock: Option<String>,
    /// Coverage threshold for the summary, as a fraction of the baseline's final coverage.
    #[arg(long, default_value_t = 0.9)]
    threshold: f64,
    /// Directory for per-cell trace and timing CSVs and `summary.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Space- or comma-separated vertex walk to check.
    #[arg(long)]
    plan: Option<String>,
}

fn parse_variants(s: &str) -> Result<Vec<Variant>, String> {
    if s == "all" {
        return Ok(Variant::ALL.to_vec());
    }
    s.split(',')
        .map(|v| Variant::parse(v.trim()).map_err(|e| e.to_string()))
        .collect()
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let bad = |t: &str| format!("bad seed {t:?}");
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad(a))?;
        let b: u64 = b.trim().parse().map_err(|_| bad(b))?;
        if a >= b {
            return Err(format!("empty seed range {s}"));
        }
        return Ok((a..b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| bad(t)))
        .collect()
}

fn run(args: RunArgs) -> Result<(), String> {
    let (_, mut loaded) = load_scenario(&args.scenario).map_err(|e| e.to_string())?;
    let c = &mut loaded.config;
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = args.$field {
                c.$field = v;
            }
        };
    }
    set!(p0);
    set!(eps0);
    set!(f);
    set!(p_accept);
    set!(omega);
    set!(n_max);
    if args.max_iters.is_some() {
        c.max_iters = args.max_iters;
    }
    if let Some(clock) = &args.clock {
        c.clock = ClockMode::parse(clock).ok_or_else(|| format!("unknown clock {clock:?}"))?;
    }
    if let Some(b) = args.budget_s {
        if !(0.0..1e9).contains(&b) {
            return Err(format!("budget {b} out of range"));
        }
        c.budget = Duration::from_secs_f64(b);
    }
    c.validate().map_err(|e| e.to_string())?;
    let variants = match &args.variant {
        Some(v) => parse_variants(v)?,
        None => vec![c.variant],
    };
    let seeds = match &args.seed {
        Some(s) => parse_seeds(s)?,
        None => vec![c.seed],
    };
    let spec = ExperimentSpec {
        variants,
        seeds,
        budget: c.budget,
        jobs: args.jobs,
        threshold_frac: args.threshold,
    };
    let result = run_experiment(&loaded, &spec, args.out.as_deref()).map_err(|e| e.to_string())?;
    for path in &result.files {
        log::info!("wrote {}", path.display());
    }
    print!("{}", summary_csv(&result.summary));
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), String> {
    let text = std::fs::read_to_string(&args.graph)
        .map_err(|e| format!("{}: {e}", args.graph.display()))?;
    let g = ExplicitGraph::parse(&text).map_err(|e| format!("{}: {e}", args.graph.display()))?;
    let plan = args
        .plan
        .as_deref()
        .map(|s| {
            s.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| format!("bad vertex {t:?}")))
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    let report = verify_report(&g, args.eps, args.p, plan.as_deref()).map_err(|e| e.to_string())?;
    print!("{report}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .target(env_logger::Target::Stderr)
        .init();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Verify(args) => verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tagdm_cli::bench;
use tagdm_cli::query::{ProblemSource, QueryOptions, ScopePredicate, SolverChoice};
use tagdm_cli::report::{self, Format};
use tagdm_cli::synth::{self, SynthConfig};

/// Exit codes: 0 success, 2 no result (infeasible), 1 error.
const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "tagdm",
    about = "Mine describable tagging-action groups maximizing similarity or diversity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one mining query on a data file
    Run(RunArgs),
    /// Run a benchmark grid and write a CSV table
    Bench(BenchArgs),
    /// Generate a synthetic data file
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Tab-delimited data file (u:*/i:* columns plus tags)
    #[arg(long)]
    data: PathBuf,
    /// Preset name (problem1..problem6) or path to a spec TOML file
    #[arg(long)]
    problem: String,
    /// exact, sm-lsh[-fi|-fo], or dv-fdp[-fi|-fo]
    #[arg(long)]
    solver: String,
    /// Tuple filter dim:attr=value (repeatable), e.g. u:gender=m
    #[arg(long)]
    scope: Vec<String>,
    /// Result-set size bound k (presets default to 3)
    #[arg(long)]
    k: Option<usize>,
    /// Group support threshold p (presets default to 350)
    #[arg(long)]
    support: Option<usize>,
    /// Users-constraint threshold (presets default to 0.5)
    #[arg(long)]
    q: Option<f64>,
    /// Items-constraint threshold (presets default to 0.5)
    #[arg(long)]
    r: Option<f64>,
    /// RNG seed for the hashing solvers
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// text, json, or csv
    #[arg(long, default_value = "text")]
    format: String,
    /// Initial signature width d' for the hashing solvers
    #[arg(long = "lsh-bits", default_value_t = 10)]
    lsh_bits: usize,
    /// Number of hash tables l
    #[arg(long = "lsh-tables", default_value_t = 1)]
    lsh_tables: usize,
    /// Largest bucket searched exhaustively for the best k-subset
    #[arg(long = "bucket-max", default_value_t = 12)]
    bucket_max: usize,
    /// Distance metric for the dispersion solvers: angular or complement
    #[arg(long, default_value = "angular")]
    metric: String,
    /// Dispersion direction: max-avg (diversity) or min-avg (similarity)
    #[arg(long = "fdp-mode", default_value = "max-avg")]
    fdp_mode: String,
    /// Minimum group size kept during enumeration
    #[arg(long = "min-size", default_value_t = 5)]
    min_size: usize,
    /// Maximum predicates per descriptor (default: all attributes)
    #[arg(long = "max-predicates")]
    max_predicates: Option<usize>,
    /// Signature vocabulary size d
    #[arg(long = "vocab-size", default_value_t = 25)]
    vocab_size: usize,
    /// Candidate budget for the exact solver
    #[arg(long, default_value_t = 2_000_000_000)]
    budget: u64,
    /// Precomputed signature file (index<TAB>comma-separated weights)
    #[arg(long)]
    signatures: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of tagging-action tuples
    #[arg(long)]
    tuples: usize,
    /// Number of latent clusters
    #[arg(long, default_value_t = 6)]
    clusters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output data file path
    #[arg(long)]
    out: PathBuf,
}

fn parse_metric(s: &str) -> Result<tagdm::fdp::DistanceMetric, tagdm::TagdmError> {
    match s {
        "angular" => Ok(tagdm::fdp::DistanceMetric::Angular),
        "complement" => Ok(tagdm::fdp::DistanceMetric::Complement),
        other => Err(tagdm::TagdmError::InvalidParams(format!(
            "unknown metric {other:?} (expected angular or complement)"
        ))),
    }
}

fn parse_fdp_mode(s: &str) -> Result<tagdm::fdp::FdpMode, tagdm::TagdmError> {
    match s {
        "max-avg" => Ok(tagdm::fdp::FdpMode::MaxAvg),
        "min-avg" => Ok(tagdm::fdp::FdpMode::MinAvg),
        other => Err(tagdm::TagdmError::InvalidParams(format!(
            "unknown fdp mode {other:?} (expected max-avg or min-avg)"
        ))),
    }
}

fn run(args: &RunArgs) -> Result<ExitCode, tagdm::TagdmError> {
    let problem = if tagdm::problem::ProblemSpec::PRESET_NAMES.contains(&args.problem.as_str()) {
        ProblemSource::Preset(args.problem.clone())
    } else {
        ProblemSource::File(PathBuf::from(&args.problem))
    };
    let mut opts = QueryOptions::new(
        args.data.clone(),
        problem,
        SolverChoice::parse(&args.solver)?,
    );
    opts.scope = args
        .scope
        .iter()
        .map(|s| ScopePredicate::parse(s))
        .collect::<Result<_, _>>()?;
    opts.k = args.k;
    opts.support = args.support;
    opts.q = args.q;
    opts.r = args.r;
    opts.seed = args.seed;
    opts.lsh_bits = args.lsh_bits;
    opts.lsh_tables = args.lsh_tables;
    opts.bucket_max = args.bucket_max;
    opts.metric = parse_metric(&args.metric)?;
    opts.fdp_mode = parse_fdp_mode(&args.fdp_mode)?;
    opts.min_size = args.min_size;
    opts.max_predicates = args.max_predicates;
    opts.vocab_size = args.vocab_size;
    opts.budget = args.budget;
    opts.signatures = args.signatures.clone();

    let format = Format::parse(&args.format)?;
    let (report, stats) = tagdm_cli::query::run_query(&opts)?;
    print!("{}", report::render(&report, &stats, format)?);
    if format != Format::Text {
        eprintln!("runtime: {} ms", stats.runtime_ms);
    }
    Ok(if report.result.is_some() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INFEASIBLE)
    })
}

fn run_bench(args: &BenchArgs) -> Result<ExitCode, tagdm::TagdmError> {
    let cfg = bench::load_config(&args.config)?;
    let rows = bench::run_benchmark(&cfg)?;
    let file = std::fs::File::create(&args.out)?;
    bench::write_rows(&rows, std::io::BufWriter::new(file))?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn run_synth(args: &SynthArgs) -> Result<ExitCode, tagdm::TagdmError> {
    let cfg = SynthConfig {
        tuples: args.tuples,
        clusters: args.clusters,
        seed: args.seed,
    };
    let file = std::fs::File::create(&args.out)?;
    synth::write_to(&cfg, std::io::BufWriter::new(file))?;
    eprintln!("wrote {} tuples to {}", args.tuples, args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // TAGDM_THREADS caps worker parallelism inside the solvers.
    if let Ok(threads) = std::env::var("TAGDM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Bench(args) => run_bench(args),
        Command::Synth(args) => run_synth(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

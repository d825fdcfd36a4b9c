//! Benchmark harness: run a grid of (tuple bin × solver × seed) cells on
//! one dataset and emit a delimited table of runtime and result quality.
//!
//! Bins are drawn by uniform tuple sampling with a fixed seed, standing
//! in for query-scoped subsets of the full data. Quality is the average
//! pairwise cosine similarity between the tag signatures of the returned
//! groups, reported raw for similarity and diversity problems alike.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use tagdm::io;
use tagdm::model::{Dataset, RawRow};
use tagdm::problem::{MiningContext, ProblemSpec, SolveOutcome};
use tagdm::signature::{cosine_similarity, Mode};
use tagdm::{Result, TagdmError};

use crate::query::{self, ProblemSource, QueryOptions, SolverChoice};
use crate::synth::{self, SynthConfig};

/// Benchmark configuration file (TOML).
#[derive(Debug, Clone, Deserialize)]
pub struct BenchConfig {
    /// Data file to sample bins from; alternative to `[synthetic]`.
    pub data: Option<PathBuf>,
    /// Synthetic source used when no data file is given.
    pub synthetic: Option<SynthSection>,
    /// Bin sizes (tuples per cell), sampled uniformly with `sample_seed`.
    pub bins: Vec<usize>,
    pub solvers: Vec<String>,
    /// Preset name (problem1..problem6) or path to a spec file.
    pub preset: String,
    /// One run per seed for every bin × solver cell.
    pub seeds: Vec<u64>,
    #[serde(default = "default_sample_seed")]
    pub sample_seed: u64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_support")]
    pub support: usize,
    #[serde(default = "default_threshold")]
    pub q: f64,
    #[serde(default = "default_threshold")]
    pub r: f64,
    #[serde(default = "default_min_size")]
    pub min_size: usize,
    pub max_predicates: Option<usize>,
    #[serde(default = "default_vocab")]
    pub vocab_size: usize,
    #[serde(default = "default_lsh_bits")]
    pub lsh_bits: usize,
    #[serde(default = "default_lsh_tables")]
    pub lsh_tables: usize,
    #[serde(default = "default_bucket_max")]
    pub bucket_max: usize,
    #[serde(default)]
    pub metric: tagdm::fdp::DistanceMetric,
    #[serde(default)]
    pub fdp_mode: tagdm::fdp::FdpMode,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct SynthSection {
    pub tuples: usize,
    pub clusters: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_sample_seed() -> u64 {
    42
}
fn default_k() -> usize {
    3
}
fn default_support() -> usize {
    350
}
fn default_threshold() -> f64 {
    0.5
}
fn default_min_size() -> usize {
    query::DEFAULT_MIN_SIZE
}
fn default_vocab() -> usize {
    query::DEFAULT_VOCAB_SIZE
}
fn default_lsh_bits() -> usize {
    10
}
fn default_lsh_tables() -> usize {
    1
}
fn default_bucket_max() -> usize {
    12
}
fn default_budget() -> u64 {
    query::DEFAULT_BUDGET
}

/// One benchmark cell result.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub bin: usize,
    pub solver: String,
    pub seed: u64,
    pub runtime_ms: u64,
    /// Average pairwise cosine of the returned set; `None` when the
    /// solver reported no result.
    pub quality: Option<f64>,
    pub feasible: bool,
}

pub fn load_config(path: &std::path::Path) -> Result<BenchConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: BenchConfig = toml::from_str(&text).map_err(|e| TagdmError::Parse {
        line: 0,
        msg: e.to_string(),
    })?;
    Ok(cfg)
}

/// Average pairwise cosine similarity of the chosen groups' signatures;
/// 1.0 for a singleton (no pairs, identical to itself).
pub fn average_pairwise_cosine(ctx: &MiningContext, indices: &[usize]) -> f64 {
    if indices.len() < 2 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (a, &i) in indices.iter().enumerate() {
        for &j in &indices[a + 1..] {
            total += cosine_similarity(&ctx.groups[i].signature, &ctx.groups[j].signature)
                .expect("context signatures are valid");
            pairs += 1;
        }
    }
    total / pairs as f64
}

fn source_rows(cfg: &BenchConfig) -> Result<(Vec<String>, Vec<String>, Vec<RawRow>)> {
    match (&cfg.data, &cfg.synthetic) {
        (Some(path), _) => io::load_rows(path),
        (None, Some(s)) => {
            let rows = synth::generate_rows(&SynthConfig {
                tuples: s.tuples,
                clusters: s.clusters,
                seed: s.seed,
            })?;
            Ok((synth::user_attributes(), synth::item_attributes(), rows))
        }
        (None, None) => Err(TagdmError::InvalidParams(
            "benchmark config needs either data or [synthetic]".into(),
        )),
    }
}

fn resolve_bench_spec(cfg: &BenchConfig) -> Result<ProblemSpec> {
    let source = if ProblemSpec::PRESET_NAMES.contains(&cfg.preset.as_str()) {
        ProblemSource::Preset(cfg.preset.clone())
    } else {
        ProblemSource::File(PathBuf::from(&cfg.preset))
    };
    let mut opts = QueryOptions::new(PathBuf::new(), source, SolverChoice::Exact);
    opts.k = Some(cfg.k);
    opts.support = Some(cfg.support);
    opts.q = Some(cfg.q);
    opts.r = Some(cfg.r);
    query::resolve_spec(&opts)
}

fn query_options(cfg: &BenchConfig, solver: SolverChoice, seed: u64) -> QueryOptions {
    let mut opts = QueryOptions::new(
        PathBuf::new(),
        ProblemSource::Preset(cfg.preset.clone()),
        solver,
    );
    opts.seed = seed;
    opts.lsh_bits = cfg.lsh_bits;
    opts.lsh_tables = cfg.lsh_tables;
    opts.bucket_max = cfg.bucket_max;
    opts.metric = cfg.metric;
    opts.fdp_mode = cfg.fdp_mode;
    opts.min_size = cfg.min_size;
    opts.max_predicates = cfg.max_predicates;
    opts.vocab_size = cfg.vocab_size;
    opts.budget = cfg.budget;
    opts
}

/// Run the whole grid. Cells run sequentially (one timing at a time);
/// row order is bins × solvers × seeds as configured.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let spec = resolve_bench_spec(cfg)?;
    let solvers: Vec<SolverChoice> = cfg
        .solvers
        .iter()
        .map(|s| SolverChoice::parse(s))
        .collect::<Result<_>>()?;
    for s in &solvers {
        check_bench_compat(*s, &spec, cfg.fdp_mode)?;
    }

    let (user_attrs, item_attrs, pool) = source_rows(cfg)?;
    let mut rows = Vec::new();
    for &bin in &cfg.bins {
        if bin > pool.len() {
            return Err(TagdmError::InvalidParams(format!(
                "bin {bin} exceeds the {} available tuples",
                pool.len()
            )));
        }
        // Uniform sample without replacement, fixed per (sample_seed, bin).
        let mut order: Vec<usize> = (0..pool.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.sample_seed.wrapping_add(bin as u64));
        order.shuffle(&mut rng);
        let sample: Vec<RawRow> = order[..bin].iter().map(|&i| pool[i].clone()).collect();
        let ds = Dataset::from_raw(user_attrs.clone(), item_attrs.clone(), sample)?;

        let base_opts = query_options(cfg, SolverChoice::Exact, 0);
        let ctx = query::build_context(ds, &base_opts)?;

        for solver in &solvers {
            for &seed in &cfg.seeds {
                let opts = query_options(cfg, *solver, seed);
                let started = std::time::Instant::now();
                let outcome = query::dispatch(*solver, &spec, &ctx, &opts)?;
                let runtime_ms = started.elapsed().as_millis() as u64;
                let (quality, feasible) = match &outcome {
                    SolveOutcome::Solved(r) => (
                        Some(average_pairwise_cosine(&ctx, &r.group_indices)),
                        r.feasible,
                    ),
                    SolveOutcome::Infeasible => (None, false),
                };
                rows.push(BenchRow {
                    bin,
                    solver: solver.name().to_string(),
                    seed,
                    runtime_ms,
                    quality,
                    feasible,
                });
            }
        }
    }
    Ok(rows)
}

fn check_bench_compat(
    solver: SolverChoice,
    spec: &ProblemSpec,
    fdp_mode: tagdm::fdp::FdpMode,
) -> Result<()> {
    let all_sim = spec.objectives_all(Mode::Similarity);
    match solver {
        SolverChoice::Exact => Ok(()),
        SolverChoice::SmLsh | SolverChoice::SmLshFi | SolverChoice::SmLshFo if all_sim => Ok(()),
        SolverChoice::DvFdp | SolverChoice::DvFdpFi | SolverChoice::DvFdpFo
            if !all_sim || fdp_mode == tagdm::fdp::FdpMode::MinAvg =>
        {
            Ok(())
        }
        _ => Err(TagdmError::IncompatibleSolver(format!(
            "{} cannot serve this preset's objective",
            solver.name()
        ))),
    }
}

/// Serialize rows as CSV with a stable header.
pub fn write_rows<W: std::io::Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["bin", "solver", "seed", "runtime_ms", "quality", "feasible"])
        .map_err(csv_err)?;
    for r in rows {
        let quality = r.quality.map(|q| q.to_string()).unwrap_or_default();
        wtr.write_record([
            r.bin.to_string(),
            r.solver.clone(),
            r.seed.to_string(),
            r.runtime_ms.to_string(),
            quality,
            r.feasible.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> TagdmError {
    TagdmError::Parse {
        line: 0,
        msg: e.to_string(),
    }
}

//! Query execution: load data, apply the scope filter, enumerate and
//! sign groups, dispatch the chosen solver and assemble a report.

use std::path::PathBuf;

use serde::Serialize;

use tagdm::fdp::{self, FdpParams};
use tagdm::io;
use tagdm::lsh::{self, LshParams};
use tagdm::model::{enumerate_groups, Dataset, RawRow, MISSING_VALUE};
use tagdm::problem::{
    exact_solve, ConstraintReport, MiningContext, ProblemSpec, ResultSet, SolveOutcome,
};
use tagdm::signature::{MetricConfig, Mode, Vocabulary};
use tagdm::{Result, TagdmError};

/// Default signature vocabulary size.
pub const DEFAULT_VOCAB_SIZE: usize = 25;
/// Default minimum group size.
pub const DEFAULT_MIN_SIZE: usize = 5;
/// Default candidate budget for the exact solver.
pub const DEFAULT_BUDGET: u64 = 2_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Exact,
    SmLsh,
    SmLshFi,
    SmLshFo,
    DvFdp,
    DvFdpFi,
    DvFdpFo,
}

impl SolverChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::Exact => "exact",
            SolverChoice::SmLsh => "sm-lsh",
            SolverChoice::SmLshFi => "sm-lsh-fi",
            SolverChoice::SmLshFo => "sm-lsh-fo",
            SolverChoice::DvFdp => "dv-fdp",
            SolverChoice::DvFdpFi => "dv-fdp-fi",
            SolverChoice::DvFdpFo => "dv-fdp-fo",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "exact" => SolverChoice::Exact,
            "sm-lsh" => SolverChoice::SmLsh,
            "sm-lsh-fi" => SolverChoice::SmLshFi,
            "sm-lsh-fo" => SolverChoice::SmLshFo,
            "dv-fdp" => SolverChoice::DvFdp,
            "dv-fdp-fi" => SolverChoice::DvFdpFi,
            "dv-fdp-fo" => SolverChoice::DvFdpFo,
            other => {
                return Err(TagdmError::InvalidParams(format!(
                    "unknown solver {other:?}"
                )))
            }
        })
    }

    fn is_lsh(&self) -> bool {
        matches!(
            self,
            SolverChoice::SmLsh | SolverChoice::SmLshFi | SolverChoice::SmLshFo
        )
    }

    fn is_fdp(&self) -> bool {
        matches!(
            self,
            SolverChoice::DvFdp | SolverChoice::DvFdpFi | SolverChoice::DvFdpFo
        )
    }
}

/// One `dim:attr=value` filter applied to tuples before enumeration.
#[derive(Debug, Clone)]
pub struct ScopePredicate {
    pub user_side: bool,
    pub attr: String,
    pub value: String,
}

impl ScopePredicate {
    /// Parse `u:attr=value` / `i:attr=value` (also `user:` / `item:`).
    pub fn parse(s: &str) -> Result<Self> {
        let (dim, rest) = s.split_once(':').ok_or_else(|| {
            TagdmError::InvalidParams(format!("scope {s:?} must look like u:attr=value"))
        })?;
        let user_side = match dim {
            "u" | "user" => true,
            "i" | "item" => false,
            other => {
                return Err(TagdmError::InvalidParams(format!(
                    "scope dimension {other:?} must be u or i"
                )))
            }
        };
        let (attr, value) = rest.split_once('=').ok_or_else(|| {
            TagdmError::InvalidParams(format!("scope {s:?} must look like u:attr=value"))
        })?;
        Ok(ScopePredicate {
            user_side,
            attr: attr.to_string(),
            value: value.to_string(),
        })
    }
}

/// Where the problem definition comes from.
#[derive(Debug, Clone)]
pub enum ProblemSource {
    Preset(String),
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct QueryOptions {
    pub data: PathBuf,
    pub problem: ProblemSource,
    pub solver: SolverChoice,
    pub scope: Vec<ScopePredicate>,
    /// Overrides k_hi (presets default to 3).
    pub k: Option<usize>,
    /// Overrides support_p (presets default to 350).
    pub support: Option<usize>,
    /// Users-constraint threshold (presets default to 0.5).
    pub q: Option<f64>,
    /// Items-constraint threshold (presets default to 0.5).
    pub r: Option<f64>,
    pub seed: u64,
    pub lsh_bits: usize,
    pub lsh_tables: usize,
    pub bucket_max: usize,
    pub metric: fdp::DistanceMetric,
    pub fdp_mode: fdp::FdpMode,
    pub min_size: usize,
    pub max_predicates: Option<usize>,
    pub vocab_size: usize,
    pub budget: u64,
    pub signatures: Option<PathBuf>,
}

impl QueryOptions {
    pub fn new(data: PathBuf, problem: ProblemSource, solver: SolverChoice) -> Self {
        QueryOptions {
            data,
            problem,
            solver,
            scope: Vec::new(),
            k: None,
            support: None,
            q: None,
            r: None,
            seed: 0,
            lsh_bits: 10,
            lsh_tables: 1,
            bucket_max: 12,
            metric: fdp::DistanceMetric::default(),
            fdp_mode: fdp::FdpMode::default(),
            min_size: DEFAULT_MIN_SIZE,
            max_predicates: None,
            vocab_size: DEFAULT_VOCAB_SIZE,
            budget: DEFAULT_BUDGET,
            signatures: None,
        }
    }
}

/// Machine-readable run report. Field order is fixed and no volatile
/// data (wall-clock timing) is included, so identical runs serialize to
/// identical bytes; timing lives in [`RunStats`] and the text rendering.
#[derive(Debug, Clone, Serialize)]
pub struct QueryReport {
    pub status: String,
    pub solver: String,
    pub problem: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub spec: ProblemSpec,
    pub data: DataSummary,
    pub result: Option<ReportResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DataSummary {
    pub tuples_total: usize,
    pub tuples_in_scope: usize,
    pub groups_enumerated: usize,
    pub groups_retained: usize,
    pub vocabulary_size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportResult {
    pub group_indices: Vec<usize>,
    pub groups: Vec<GroupReport>,
    pub score: f64,
    pub support: usize,
    pub feasible: bool,
    pub constraints: Vec<ConstraintReport>,
}

/// One chosen group, with its tag signature rendered as (tag, weight)
/// pairs for external plotting.
#[derive(Debug, Clone, Serialize)]
pub struct GroupReport {
    pub index: usize,
    pub descriptor: String,
    pub size: usize,
    pub tag_weights: Vec<(String, f64)>,
}

/// Volatile per-run measurements, kept out of the canonical report.
#[derive(Debug, Clone, Copy)]
pub struct RunStats {
    pub runtime_ms: u64,
}

/// Build the effective problem spec from the source and overrides.
pub fn resolve_spec(opts: &QueryOptions) -> Result<ProblemSpec> {
    let spec = match &opts.problem {
        ProblemSource::Preset(name) => ProblemSpec::preset(
            name,
            opts.k.unwrap_or(3),
            opts.support.unwrap_or(350),
            opts.q.unwrap_or(0.5),
            opts.r.unwrap_or(0.5),
        )
        .ok_or_else(|| {
            TagdmError::InvalidParams(format!(
                "unknown preset {name:?} (expected problem1..problem6 or a spec file)"
            ))
        })?,
        ProblemSource::File(path) => {
            let mut spec = io::load_problem_spec(path)?;
            if let Some(k) = opts.k {
                spec.k_hi = k;
            }
            if let Some(p) = opts.support {
                spec.support_p = p;
            }
            if let Some(q) = opts.q {
                for c in spec.constraints.iter_mut() {
                    if c.dimension == tagdm::signature::MiningDimension::Users {
                        c.threshold = q;
                    }
                }
            }
            if let Some(r) = opts.r {
                for c in spec.constraints.iter_mut() {
                    if c.dimension == tagdm::signature::MiningDimension::Items {
                        c.threshold = r;
                    }
                }
            }
            spec
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn problem_name(source: &ProblemSource) -> String {
    match source {
        ProblemSource::Preset(name) => name.clone(),
        ProblemSource::File(path) => path.display().to_string(),
    }
}

/// Check solver / objective compatibility up front so the user gets a
/// usage error instead of a deep solver error.
fn check_compat(solver: SolverChoice, spec: &ProblemSpec, fdp_mode: fdp::FdpMode) -> Result<()> {
    if solver.is_lsh() && !spec.objectives_all(Mode::Similarity) {
        return Err(TagdmError::IncompatibleSolver(format!(
            "{} serves similarity objectives; use exact or the dv-fdp family",
            solver.name()
        )));
    }
    if solver.is_fdp()
        && spec.objectives_all(Mode::Similarity)
        && fdp_mode != fdp::FdpMode::MinAvg
    {
        return Err(TagdmError::IncompatibleSolver(format!(
            "{} serves diversity objectives; pass --fdp-mode min-avg to run it on a similarity goal",
            solver.name()
        )));
    }
    Ok(())
}

/// Apply the scope predicates to raw rows, by attribute name.
pub fn apply_scope(
    user_attrs: &[String],
    item_attrs: &[String],
    rows: Vec<RawRow>,
    scope: &[ScopePredicate],
) -> Result<Vec<RawRow>> {
    let mut filters: Vec<(bool, usize, String)> = Vec::new();
    for s in scope {
        let attrs = if s.user_side { user_attrs } else { item_attrs };
        let idx = attrs
            .iter()
            .position(|a| *a == s.attr)
            .ok_or_else(|| {
                TagdmError::InvalidParams(format!(
                    "scope attribute {:?} not in the {} schema",
                    s.attr,
                    if s.user_side { "user" } else { "item" }
                ))
            })?;
        filters.push((s.user_side, idx, s.value.clone()));
    }
    fn normalize(v: &str) -> &str {
        let v = v.trim();
        if v.is_empty() {
            MISSING_VALUE
        } else {
            v
        }
    }
    Ok(rows
        .into_iter()
        .filter(|row| {
            filters.iter().all(|(user_side, idx, value)| {
                let cell = if *user_side {
                    &row.user_values[*idx]
                } else {
                    &row.item_values[*idx]
                };
                normalize(cell) == value.as_str()
            })
        })
        .collect())
}

/// Build the mining context for a prepared dataset per the options.
pub fn build_context(ds: Dataset, opts: &QueryOptions) -> Result<MiningContext> {
    let max_preds = opts
        .max_predicates
        .unwrap_or(ds.user_schema.attr_count() + ds.item_schema.attr_count());
    let groups = enumerate_groups(&ds, opts.min_size, max_preds)?;
    let vocab = Vocabulary::top_of(&ds, opts.vocab_size);
    match &opts.signatures {
        Some(path) => {
            let sigs = io::load_signatures(path, groups.len(), vocab.len())?;
            MiningContext::with_signatures(ds, groups, sigs, vocab, MetricConfig::default())
        }
        None => Ok(MiningContext::build(
            ds,
            groups,
            vocab,
            MetricConfig::default(),
        )),
    }
}

/// Dispatch one solver run on a prepared context.
pub fn dispatch(
    solver: SolverChoice,
    spec: &ProblemSpec,
    ctx: &MiningContext,
    opts: &QueryOptions,
) -> Result<SolveOutcome> {
    match solver {
        SolverChoice::Exact => exact_solve(spec, ctx, opts.budget),
        SolverChoice::SmLsh | SolverChoice::SmLshFi | SolverChoice::SmLshFo => {
            let params = LshParams {
                d_prime_init: opts.lsh_bits,
                tables: opts.lsh_tables,
                seed: opts.seed,
                bucket_max: opts.bucket_max,
            };
            match solver {
                SolverChoice::SmLsh => lsh::sm_lsh(ctx, spec, &params),
                SolverChoice::SmLshFi => lsh::sm_lsh_fi(ctx, spec, &params),
                _ => lsh::sm_lsh_fo(ctx, spec, &params),
            }
        }
        SolverChoice::DvFdp | SolverChoice::DvFdpFi | SolverChoice::DvFdpFo => {
            let params = FdpParams {
                metric: opts.metric,
                mode: opts.fdp_mode,
            };
            let k = spec.k_hi;
            match solver {
                SolverChoice::DvFdp => fdp::dv_fdp(ctx, spec, k, &params),
                SolverChoice::DvFdpFi => fdp::dv_fdp_fi(ctx, spec, k, &params),
                _ => fdp::dv_fdp_fo(ctx, spec, k, &params),
            }
        }
    }
}

fn group_report(ctx: &MiningContext, index: usize) -> GroupReport {
    let g = &ctx.groups[index];
    let mut tag_weights: Vec<(String, f64)> = ctx
        .vocabulary
        .tags()
        .iter()
        .zip(g.signature.weights())
        .filter(|(_, &w)| w > 0.0)
        .map(|(t, &w)| (t.clone(), w))
        .collect();
    tag_weights.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    GroupReport {
        index,
        descriptor: g.descriptor.render(&ctx.dataset),
        size: g.size(),
        tag_weights,
    }
}

fn report_result(ctx: &MiningContext, r: &ResultSet) -> ReportResult {
    ReportResult {
        group_indices: r.group_indices.clone(),
        groups: r
            .group_indices
            .iter()
            .map(|&i| group_report(ctx, i))
            .collect(),
        score: r.score,
        support: r.support,
        feasible: r.feasible,
        constraints: r.constraint_report.clone(),
    }
}

/// Run one query end to end.
pub fn run_query(opts: &QueryOptions) -> Result<(QueryReport, RunStats)> {
    let spec = resolve_spec(opts)?;
    check_compat(opts.solver, &spec, opts.fdp_mode)?;

    let (user_attrs, item_attrs, rows) = io::load_rows(&opts.data)?;
    let total = rows.len();
    let rows = apply_scope(&user_attrs, &item_attrs, rows, &opts.scope)?;
    if rows.is_empty() {
        return Err(TagdmError::NoData);
    }
    let in_scope = rows.len();
    let ds = Dataset::from_raw(user_attrs, item_attrs, rows)?;

    let started = std::time::Instant::now();
    let ctx = build_context(ds, opts)?;
    let groups_retained = ctx.group_count();
    let groups_enumerated = groups_retained + ctx.dropped_groups;

    let outcome = dispatch(opts.solver, &spec, &ctx, opts)?;
    let runtime_ms = started.elapsed().as_millis() as u64;

    let (status, seed, result) = match &outcome {
        SolveOutcome::Solved(r) => ("ok".to_string(), r.seed, Some(report_result(&ctx, r))),
        SolveOutcome::Infeasible => ("infeasible".to_string(), None, None),
    };
    let report = QueryReport {
        status,
        solver: opts.solver.name().to_string(),
        problem: problem_name(&opts.problem),
        seed,
        spec,
        data: DataSummary {
            tuples_total: total,
            tuples_in_scope: in_scope,
            groups_enumerated,
            groups_retained,
            vocabulary_size: ctx.vocabulary.len(),
        },
        result,
    };
    Ok((report, RunStats { runtime_ms }))
}

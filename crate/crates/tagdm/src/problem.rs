//! Problem specification, constraint checking, objective scoring, and the
//! exhaustive solver that serves as ground truth for the approximate ones.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TagdmError};
use crate::model::{group_support, Dataset, Dimension, TaggingGroup};
use crate::signature::{
    aggregate_with_convention, attach_signatures, pairwise_score_total, MetricConfig,
    MiningDimension, MiningMeasure, Mode, Vocabulary,
};

/// A hard threshold on one aggregated measure.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Constraint {
    pub dimension: MiningDimension,
    pub mode: Mode,
    pub threshold: f64,
}

impl Constraint {
    pub fn measure(&self) -> MiningMeasure {
        MiningMeasure::new(self.dimension, self.mode)
    }
}

/// One weighted term of the optimization goal.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Objective {
    pub dimension: MiningDimension,
    pub mode: Mode,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

impl Objective {
    pub fn measure(&self) -> MiningMeasure {
        MiningMeasure::new(self.dimension, self.mode)
    }
}

/// Which descriptor shapes are admissible in a result set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Describability {
    /// Only user-attribute predicates.
    User,
    /// Only item-attribute predicates.
    Item,
    /// Any non-empty conjunction over either dimension.
    #[default]
    Either,
}

impl Describability {
    pub fn admits(&self, g: &TaggingGroup) -> bool {
        match self {
            Describability::User => g.describable_only_on(Dimension::User),
            Describability::Item => g.describable_only_on(Dimension::Item),
            Describability::Either => true,
        }
    }
}

/// A complete mining problem instance: result-set size bounds, support
/// threshold, hard constraints and the optimization goal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(default = "default_k_lo")]
    pub k_lo: usize,
    pub k_hi: usize,
    #[serde(default)]
    pub support_p: usize,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    pub objectives: Vec<Objective>,
    #[serde(default)]
    pub describability: Describability,
}

fn default_k_lo() -> usize {
    1
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k_lo < 1 || self.k_lo > self.k_hi {
            return Err(TagdmError::InvalidSpec(format!(
                "need 1 <= k_lo <= k_hi, got k_lo={} k_hi={}",
                self.k_lo, self.k_hi
            )));
        }
        if self.objectives.is_empty() {
            return Err(TagdmError::InvalidSpec("objectives must be non-empty".into()));
        }
        for c in &self.constraints {
            if !(0.0..=1.0).contains(&c.threshold) {
                return Err(TagdmError::InvalidSpec(format!(
                    "constraint threshold {} outside [0,1]",
                    c.threshold
                )));
            }
        }
        for o in &self.objectives {
            if !(o.weight >= 0.0 && o.weight.is_finite()) {
                return Err(TagdmError::InvalidSpec(format!(
                    "objective weight {} must be a finite non-negative number",
                    o.weight
                )));
            }
        }
        for c in &self.constraints {
            if self.objectives.iter().any(|o| o.dimension == c.dimension) {
                return Err(TagdmError::InvalidSpec(format!(
                    "dimension {:?} appears in both constraints and objectives",
                    c.dimension
                )));
            }
        }
        Ok(())
    }

    /// True when every objective runs in the given mode.
    pub fn objectives_all(&self, mode: Mode) -> bool {
        self.objectives.iter().all(|o| o.mode == mode)
    }

    /// The six shipped instances: constraints on users (threshold `q`) and
    /// items (threshold `r`), objective on tags, k_lo = 1.
    pub fn preset(name: &str, k_hi: usize, support_p: usize, q: f64, r: f64) -> Option<ProblemSpec> {
        use Mode::{Diversity, Similarity};
        let (user_mode, item_mode, tag_mode) = match name {
            "problem1" => (Similarity, Similarity, Similarity),
            "problem2" => (Similarity, Diversity, Similarity),
            "problem3" => (Diversity, Similarity, Similarity),
            "problem4" => (Diversity, Similarity, Diversity),
            "problem5" => (Similarity, Diversity, Diversity),
            "problem6" => (Similarity, Similarity, Diversity),
            _ => return None,
        };
        Some(ProblemSpec {
            k_lo: 1,
            k_hi,
            support_p,
            constraints: vec![
                Constraint {
                    dimension: MiningDimension::Users,
                    mode: user_mode,
                    threshold: q,
                },
                Constraint {
                    dimension: MiningDimension::Items,
                    mode: item_mode,
                    threshold: r,
                },
            ],
            objectives: vec![Objective {
                dimension: MiningDimension::Tags,
                mode: tag_mode,
                weight: 1.0,
            }],
            describability: Describability::Either,
        })
    }

    pub const PRESET_NAMES: [&'static str; 6] = [
        "problem1", "problem2", "problem3", "problem4", "problem5", "problem6",
    ];
}

/// Achieved value of one constraint on a candidate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub dimension: MiningDimension,
    pub mode: Mode,
    pub threshold: f64,
    pub achieved: f64,
    pub ok: bool,
}

/// Full feasibility verdict; achieved values are reported whether or not
/// the candidate passes.
#[derive(Debug, Clone)]
pub struct Feasibility {
    pub feasible: bool,
    pub size_ok: bool,
    pub describable_ok: bool,
    pub support: usize,
    pub support_ok: bool,
    pub reports: Vec<ConstraintReport>,
}

/// A solver's answer: chosen group indices (into the context's group
/// list), the objective score, support, per-constraint achieved values,
/// and solver metadata.
#[derive(Debug, Clone)]
pub struct ResultSet {
    pub group_indices: Vec<usize>,
    pub score: f64,
    pub support: usize,
    pub constraint_report: Vec<ConstraintReport>,
    pub feasible: bool,
    pub solver: String,
    pub runtime_ms: u64,
    pub seed: Option<u64>,
}

/// Outcome of one solver invocation.
#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Solved(ResultSet),
    Infeasible,
}

impl SolveOutcome {
    pub fn result(&self) -> Option<&ResultSet> {
        match self {
            SolveOutcome::Solved(r) => Some(r),
            SolveOutcome::Infeasible => None,
        }
    }
}

/// Immutable solving context: the dataset, the enumerated groups with
/// valid signatures attached, the vocabulary and the metric choices.
/// Groups whose tags fall entirely outside the vocabulary are dropped at
/// construction (their count is kept for reporting).
#[derive(Debug, Clone)]
pub struct MiningContext {
    pub dataset: Dataset,
    pub groups: Vec<TaggingGroup>,
    pub vocabulary: Vocabulary,
    pub metrics: MetricConfig,
    pub dropped_groups: usize,
}

impl MiningContext {
    pub fn build(
        dataset: Dataset,
        mut groups: Vec<TaggingGroup>,
        vocabulary: Vocabulary,
        metrics: MetricConfig,
    ) -> Self {
        let invalid = attach_signatures(&mut groups, &vocabulary, &dataset);
        let dropped = invalid.len();
        if dropped > 0 {
            let bad: std::collections::BTreeSet<usize> = invalid.into_iter().collect();
            groups = groups
                .into_iter()
                .enumerate()
                .filter(|(i, _)| !bad.contains(i))
                .map(|(_, g)| g)
                .collect();
        }
        MiningContext {
            dataset,
            groups,
            vocabulary,
            metrics,
            dropped_groups: dropped,
        }
    }

    /// Context over groups with externally supplied signature vectors
    /// (e.g. produced by a topic model). Invalid signatures are dropped.
    pub fn with_signatures(
        dataset: Dataset,
        mut groups: Vec<TaggingGroup>,
        signatures: Vec<crate::signature::TagSignature>,
        vocabulary: Vocabulary,
        metrics: MetricConfig,
    ) -> Result<Self> {
        if signatures.len() != groups.len() {
            return Err(TagdmError::InvalidParams(format!(
                "{} signatures supplied for {} groups",
                signatures.len(),
                groups.len()
            )));
        }
        for (g, s) in groups.iter_mut().zip(signatures) {
            g.signature = s;
        }
        let before = groups.len();
        groups.retain(|g| g.signature.is_valid());
        let dropped = before - groups.len();
        Ok(MiningContext {
            dataset,
            groups,
            vocabulary,
            metrics,
            dropped_groups: dropped,
        })
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn refs(&self, indices: &[usize]) -> Vec<&TaggingGroup> {
        indices.iter().map(|&i| &self.groups[i]).collect()
    }
}

/// Check size bounds, describability, support, and every threshold
/// constraint for a candidate set of group indices.
pub fn check_feasible(indices: &[usize], spec: &ProblemSpec, ctx: &MiningContext) -> Feasibility {
    if indices.is_empty() {
        return Feasibility {
            feasible: false,
            size_ok: false,
            describable_ok: true,
            support: 0,
            support_ok: spec.support_p == 0,
            reports: Vec::new(),
        };
    }
    let refs = ctx.refs(indices);
    let size_ok = indices.len() >= spec.k_lo && indices.len() <= spec.k_hi;
    let describable_ok = refs.iter().all(|g| spec.describability.admits(g));
    let support = group_support(refs.iter().copied());
    let support_ok = support >= spec.support_p;
    let reports: Vec<ConstraintReport> = spec
        .constraints
        .iter()
        .map(|c| {
            let achieved = aggregate_with_convention(&refs, c.measure(), ctx.metrics);
            ConstraintReport {
                dimension: c.dimension,
                mode: c.mode,
                threshold: c.threshold,
                achieved,
                ok: achieved >= c.threshold,
            }
        })
        .collect();
    let feasible = size_ok && describable_ok && support_ok && reports.iter().all(|r| r.ok);
    Feasibility {
        feasible,
        size_ok,
        describable_ok,
        support,
        support_ok,
        reports,
    }
}

/// Weighted sum of the aggregated objective measures over the candidate.
pub fn objective_score(indices: &[usize], spec: &ProblemSpec, ctx: &MiningContext) -> f64 {
    let refs = ctx.refs(indices);
    spec.objectives
        .iter()
        .map(|o| o.weight * aggregate_with_convention(&refs, o.measure(), ctx.metrics))
        .sum()
}

/// Assemble a [`ResultSet`] for a candidate, recomputing score, support
/// and the constraint report from scratch.
pub fn assemble_result(
    mut indices: Vec<usize>,
    spec: &ProblemSpec,
    ctx: &MiningContext,
    solver: &str,
    runtime_ms: u64,
    seed: Option<u64>,
) -> ResultSet {
    indices.sort_unstable();
    let verdict = check_feasible(&indices, spec, ctx);
    let score = objective_score(&indices, spec, ctx);
    ResultSet {
        group_indices: indices,
        score,
        support: verdict.support,
        constraint_report: verdict.reports,
        feasible: verdict.feasible,
        solver: solver.to_string(),
        runtime_ms,
        seed,
    }
}

// ---------------------------------------------------------------------------
// Exact solver
// ---------------------------------------------------------------------------

/// Precomputed pairwise score matrices, one per measure used by the
/// spec, over the eligible groups. Candidate evaluation then reduces to
/// a handful of lookups per pair.
struct PairCache {
    n: usize,
    objectives: Vec<(f64, Mode, Vec<f64>)>,
    constraints: Vec<(f64, Mode, Vec<f64>)>,
}

fn singleton_value(mode: Mode) -> f64 {
    match mode {
        Mode::Similarity => 1.0,
        Mode::Diversity => 0.0,
    }
}

impl PairCache {
    fn build(spec: &ProblemSpec, groups: &[&TaggingGroup], metrics: MetricConfig) -> Self {
        let n = groups.len();
        let matrix = |measure: MiningMeasure| -> Vec<f64> {
            let mut m = vec![0.0f64; n * n];
            let rows: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut row = vec![0.0; n];
                    for j in 0..n {
                        if i != j {
                            row[j] = pairwise_score_total(groups[i], groups[j], measure, metrics);
                        }
                    }
                    row
                })
                .collect();
            for (i, row) in rows.into_iter().enumerate() {
                m[i * n..(i + 1) * n].copy_from_slice(&row);
            }
            m
        };
        PairCache {
            n,
            objectives: spec
                .objectives
                .iter()
                .map(|o| (o.weight, o.mode, matrix(o.measure())))
                .collect(),
            constraints: spec
                .constraints
                .iter()
                .map(|c| (c.threshold, c.mode, matrix(c.measure())))
                .collect(),
        }
    }

    /// Mean pairwise value over the candidate, iterating pairs in the
    /// same order as [`aggregate_score`] so both paths round identically.
    ///
    /// [`aggregate_score`]: crate::signature::aggregate_score
    #[inline]
    fn mean_over_pairs(n: usize, m: &[f64], cand: &[usize]) -> f64 {
        let mut total = 0.0;
        let mut pairs = 0usize;
        for (a, &i) in cand.iter().enumerate() {
            let row = &m[i * n..(i + 1) * n];
            for &j in &cand[a + 1..] {
                total += row[j];
                pairs += 1;
            }
        }
        total / pairs as f64
    }

    /// Objective score for a candidate that passes every threshold
    /// constraint, `None` otherwise. Size and describability are assumed
    /// pre-checked; support is handled by the caller.
    #[inline]
    fn evaluate(&self, cand: &[usize]) -> Option<f64> {
        if cand.len() == 1 {
            for &(threshold, mode, _) in &self.constraints {
                if singleton_value(mode) < threshold {
                    return None;
                }
            }
            return Some(
                self.objectives
                    .iter()
                    .map(|&(w, mode, _)| w * singleton_value(mode))
                    .sum(),
            );
        }
        for &(threshold, _, ref m) in &self.constraints {
            if Self::mean_over_pairs(self.n, m, cand) < threshold {
                return None;
            }
        }
        let mut score = 0.0;
        for &(w, _, ref m) in &self.objectives {
            score += w * Self::mean_over_pairs(self.n, m, cand);
        }
        Some(score)
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// A candidate with its score; orders by score descending, ties broken
/// by the lexicographically smallest sorted index tuple.
#[derive(Debug, Clone)]
struct Best {
    score: f64,
    indices: Vec<usize>,
}

fn better(a: &Best, b: &Best) -> bool {
    a.score > b.score || (a.score == b.score && a.indices < b.indices)
}

fn merge_best(a: Option<Best>, b: Option<Best>) -> Option<Best> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if better(&x, &y) { x } else { y }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Union cardinality of the members of the candidate groups; scratch
/// buffer reused across calls.
fn support_into(groups: &[&TaggingGroup], cand: &[usize], scratch: &mut Vec<u32>) -> usize {
    scratch.clear();
    for &i in cand {
        scratch.extend_from_slice(&groups[i].members);
    }
    scratch.sort_unstable();
    scratch.dedup();
    scratch.len()
}

/// Exhaustively evaluate every subset of eligible groups with size in
/// `[k_lo, k_hi]` and return the feasible candidate with maximum
/// objective score. Ties go to the lexicographically smallest sorted
/// index tuple, so the result is independent of evaluation order.
///
/// `budget` caps the number of candidate sets; if the instance would
/// exceed it, the solver refuses up front (an error distinct from
/// infeasibility).
pub fn exact_solve(spec: &ProblemSpec, ctx: &MiningContext, budget: u64) -> Result<SolveOutcome> {
    let started = std::time::Instant::now();
    spec.validate()?;

    // Candidates containing a non-admissible group are infeasible, so
    // enumeration is restricted to admissible groups up front.
    let eligible: Vec<usize> = (0..ctx.groups.len())
        .filter(|&i| spec.describability.admits(&ctx.groups[i]))
        .collect();
    let n = eligible.len();
    if n == 0 || spec.k_lo > n {
        return Ok(SolveOutcome::Infeasible);
    }
    let k_hi = spec.k_hi.min(n);

    let total: u128 = (spec.k_lo..=k_hi)
        .map(|k| binomial(n as u128, k as u128))
        .sum();
    if total > budget as u128 {
        return Err(TagdmError::BudgetExceeded {
            candidates: total,
            budget,
        });
    }

    let groups: Vec<&TaggingGroup> = eligible.iter().map(|&i| &ctx.groups[i]).collect();
    let cache = PairCache::build(spec, &groups, ctx.metrics);
    let need_support = spec.support_p > 0;

    let mut overall: Option<Best> = None;
    for k in spec.k_lo..=k_hi {
        // Parallel over the first element; each task scans the (k-1)-
        // combinations of the remaining positions sequentially.
        let k_best = (0..n)
            .into_par_iter()
            .map(|first| {
                let mut cand = vec![0usize; k];
                cand[0] = first;
                let mut scratch: Vec<u32> = Vec::new();
                let mut best: Option<Best> = None;
                let consider = |cand: &[usize],
                                    scratch: &mut Vec<u32>,
                                    best: &mut Option<Best>| {
                    if let Some(score) = cache.evaluate(cand) {
                        if need_support
                            && support_into(&groups, cand, scratch) < spec.support_p
                        {
                            return;
                        }
                        let candidate = Best {
                            score,
                            indices: cand.iter().map(|&p| eligible[p]).collect(),
                        };
                        if best.as_ref().is_none_or(|b| better(&candidate, b)) {
                            *best = Some(candidate);
                        }
                    }
                };
                if k == 1 {
                    consider(&cand, &mut scratch, &mut best);
                    return best;
                }
                // Initialize positions first+1, first+2, ...
                if first + k > n {
                    return None;
                }
                for (slot, pos) in cand.iter_mut().enumerate().skip(1) {
                    *pos = first + slot;
                }
                loop {
                    consider(&cand, &mut scratch, &mut best);
                    // Advance the suffix combination (positions 1..k).
                    let mut i = k - 1;
                    loop {
                        if cand[i] < n - (k - i) {
                            cand[i] += 1;
                            for j in (i + 1)..k {
                                cand[j] = cand[j - 1] + 1;
                            }
                            break;
                        }
                        if i == 1 {
                            return best;
                        }
                        i -= 1;
                    }
                }
            })
            .reduce(|| None, merge_best);
        overall = merge_best(overall, k_best);
    }

    match overall {
        None => Ok(SolveOutcome::Infeasible),
        Some(best) => {
            let result = assemble_result(
                best.indices,
                spec,
                ctx,
                "exact",
                started.elapsed().as_millis() as u64,
                None,
            );
            debug_assert!(result.feasible);
            debug_assert_eq!(result.score, best.score);
            Ok(SolveOutcome::Solved(result))
        }
    }
}

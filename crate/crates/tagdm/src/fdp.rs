//! Diversity-maximizing solver family built on greedy facility
//! dispersion.
//!
//! Groups are points whose pairwise distance derives from the cosine of
//! their tag signatures. The greedy heuristic seeds the result with the
//! farthest pair and repeatedly adds the group with the largest total
//! distance to the chosen set; under a metric distance this carries a
//! factor-4 bound on the optimal average pairwise distance. The angular
//! distance θ/π is such a metric; the 1 − cos complement is offered for
//! reporting fidelity but carries no guarantee.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TagdmError};
use crate::problem::{
    assemble_result, check_feasible, MiningContext, ProblemSpec, SolveOutcome,
};
use crate::signature::{cosine_similarity, pairwise_score_total, Mode, TagSignature};

/// How signature cosines become distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    /// θ/π where θ = arccos(cosine). Satisfies the triangle inequality.
    #[default]
    Angular,
    /// 1 − cosine. Not a metric; matches the reported quality measure.
    Complement,
}

/// Direction of the greedy scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FdpMode {
    /// Maximize average pairwise distance (diversity); factor-4 bound
    /// under the angular metric.
    #[default]
    MaxAvg,
    /// Minimize average pairwise distance (similarity); no guarantee.
    MinAvg,
}

/// Tunables for the dispersion solver family.
#[derive(Debug, Clone, Copy, Default)]
pub struct FdpParams {
    pub metric: DistanceMetric,
    pub mode: FdpMode,
}

/// Symmetric n × n pairwise distance matrix with zero diagonal.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
    pub metric: DistanceMetric,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Build from signature vectors; every signature must be valid.
    pub fn from_signatures(signatures: &[&TagSignature], metric: DistanceMetric) -> Result<Self> {
        let n = signatures.len();
        if let Some(bad) = signatures.iter().position(|s| !s.is_valid()) {
            return Err(TagdmError::InvalidSignature(bad));
        }
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; n];
                for j in 0..n {
                    if i != j {
                        let cos = cosine_similarity(signatures[i], signatures[j])
                            .expect("signatures validated above");
                        row[j] = match metric {
                            DistanceMetric::Angular => cos.acos() / std::f64::consts::PI,
                            DistanceMetric::Complement => 1.0 - cos,
                        };
                    }
                }
                row
            })
            .collect();
        let mut entries = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            entries[i * n..(i + 1) * n].copy_from_slice(&row);
        }
        // Enforce exact symmetry regardless of floating-point quirks in
        // the row-parallel build (cosine itself is symmetric).
        for i in 0..n {
            for j in (i + 1)..n {
                let v = entries[i * n + j];
                entries[j * n + i] = v;
            }
        }
        Ok(DistanceMatrix { n, entries, metric })
    }

    /// Average pairwise distance over a candidate set of row indices.
    pub fn average_over(&self, indices: &[usize]) -> f64 {
        if indices.len() < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        let mut pairs = 0usize;
        for (a, &i) in indices.iter().enumerate() {
            for &j in &indices[a + 1..] {
                total += self.get(i, j);
                pairs += 1;
            }
        }
        total / pairs as f64
    }
}

/// Distance matrix over the context's group signatures.
pub fn distance_matrix(ctx: &MiningContext, metric: DistanceMetric) -> Result<DistanceMatrix> {
    let signatures: Vec<&TagSignature> = ctx.groups.iter().map(|g| &g.signature).collect();
    DistanceMatrix::from_signatures(&signatures, metric)
}

/// Greedy selection log: the seed edge and, per iteration, the chosen
/// index with its marginal distance sum at selection time.
#[derive(Debug, Clone)]
pub struct GreedyTrace {
    pub seed: (usize, usize),
    pub adds: Vec<(usize, f64)>,
}

/// Greedy dispersion scan over a distance matrix: seed with the extreme
/// admissible edge, then repeatedly add the point with the extreme total
/// distance to the chosen set, considering only points admissible
/// against every chosen one. Returns `None` when no admissible seed
/// exists or growth stalls before reaching k.
fn greedy_select(
    matrix: &DistanceMatrix,
    k: usize,
    mode: FdpMode,
    admissible: impl Fn(usize, usize) -> bool,
) -> Option<(Vec<usize>, GreedyTrace)> {
    let n = matrix.n();
    let prefer = |candidate: f64, incumbent: f64| match mode {
        FdpMode::MaxAvg => candidate > incumbent,
        FdpMode::MinAvg => candidate < incumbent,
    };

    let mut seed: Option<(f64, (usize, usize))> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            if !admissible(i, j) {
                continue;
            }
            let w = matrix.get(i, j);
            if seed.is_none_or(|(best, _)| prefer(w, best)) {
                seed = Some((w, (i, j)));
            }
        }
    }
    let (_, (a, b)) = seed?;
    let mut chosen = vec![a, b];
    let mut trace = GreedyTrace {
        seed: (a, b),
        adds: Vec::new(),
    };

    while chosen.len() < k {
        let mut next: Option<(f64, usize)> = None;
        for z in 0..n {
            if chosen.contains(&z) {
                continue;
            }
            if !chosen.iter().all(|&c| admissible(z, c)) {
                continue;
            }
            let marginal: f64 = chosen.iter().map(|&c| matrix.get(z, c)).sum();
            if next.is_none_or(|(best, _)| prefer(marginal, best)) {
                next = Some((marginal, z));
            }
        }
        let (marginal, z) = next?;
        chosen.push(z);
        trace.adds.push((z, marginal));
    }
    chosen.sort_unstable();
    Some((chosen, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    Base,
    Filter,
    Fold,
}

impl Variant {
    fn name(&self) -> &'static str {
        match self {
            Variant::Base => "dv-fdp",
            Variant::Filter => "dv-fdp-fi",
            Variant::Fold => "dv-fdp-fo",
        }
    }
}

fn run(
    ctx: &MiningContext,
    spec: &ProblemSpec,
    k: usize,
    params: &FdpParams,
    variant: Variant,
) -> Result<(SolveOutcome, Option<GreedyTrace>)> {
    let started = std::time::Instant::now();
    spec.validate()?;
    let n = ctx.groups.len();
    if k > n {
        return Err(TagdmError::InvalidParams(format!(
            "k = {k} exceeds the {n} available groups"
        )));
    }
    if n < 2 || k < 2 {
        return Err(TagdmError::InvalidParams(
            "dispersion needs n >= 2 and k >= 2".into(),
        ));
    }
    match params.mode {
        FdpMode::MaxAvg if spec.objectives_all(Mode::Similarity) => {
            return Err(TagdmError::IncompatibleSolver(
                "dv-fdp serves similarity objectives only in min-avg mode".into(),
            ));
        }
        FdpMode::MinAvg if !spec.objectives_all(Mode::Similarity) => {
            return Err(TagdmError::IncompatibleSolver(
                "min-avg mode expects similarity objectives".into(),
            ));
        }
        _ => {}
    }

    let matrix = distance_matrix(ctx, params.metric)?;
    let admissible = |i: usize, j: usize| -> bool {
        if variant != Variant::Fold {
            return true;
        }
        // Fold: every threshold constraint applied to the pair itself.
        spec.constraints.iter().all(|c| {
            pairwise_score_total(&ctx.groups[i], &ctx.groups[j], c.measure(), ctx.metrics)
                >= c.threshold
        })
    };

    let selected = greedy_select(&matrix, k, params.mode, admissible);
    let (indices, trace) = match selected {
        Some((indices, trace)) => (indices, trace),
        None => return Ok((SolveOutcome::Infeasible, None)),
    };

    let result = assemble_result(
        indices.clone(),
        spec,
        ctx,
        variant.name(),
        started.elapsed().as_millis() as u64,
        None,
    );
    let outcome = match variant {
        Variant::Base => SolveOutcome::Solved(result),
        // Filter: single post-hoc feasibility check of the greedy set.
        // Fold: pair constraints held during growth; support and the
        // aggregated thresholds are re-checked on the final set.
        Variant::Filter | Variant::Fold => {
            if check_feasible(&indices, spec, ctx).feasible {
                SolveOutcome::Solved(result)
            } else {
                SolveOutcome::Infeasible
            }
        }
    };
    Ok((outcome, Some(trace)))
}

/// Base greedy dispersion: returns the k groups grown from the extreme
/// edge, with no constraint filtering. Intended for specs without hard
/// constraints.
pub fn dv_fdp(
    ctx: &MiningContext,
    spec: &ProblemSpec,
    k: usize,
    params: &FdpParams,
) -> Result<SolveOutcome> {
    run(ctx, spec, k, params, Variant::Base).map(|(o, _)| o)
}

/// Filtering variant: the greedy result is kept only if it passes the
/// full feasibility check, otherwise the solver reports infeasible.
pub fn dv_fdp_fi(
    ctx: &MiningContext,
    spec: &ProblemSpec,
    k: usize,
    params: &FdpParams,
) -> Result<SolveOutcome> {
    run(ctx, spec, k, params, Variant::Filter).map(|(o, _)| o)
}

/// Folding variant: every threshold constraint is applied pairwise
/// during seeding and growth, so only mutually admissible groups enter
/// the set; support and the aggregated thresholds are checked at the
/// end.
pub fn dv_fdp_fo(
    ctx: &MiningContext,
    spec: &ProblemSpec,
    k: usize,
    params: &FdpParams,
) -> Result<SolveOutcome> {
    run(ctx, spec, k, params, Variant::Fold).map(|(o, _)| o)
}

/// [`dv_fdp`] with the greedy selection log.
pub fn dv_fdp_traced(
    ctx: &MiningContext,
    spec: &ProblemSpec,
    k: usize,
    params: &FdpParams,
) -> Result<(SolveOutcome, Option<GreedyTrace>)> {
    run(ctx, spec, k, params, Variant::Base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Constraint, Describability, Objective};
    use crate::signature::{MiningDimension, TagSignature};
    use crate::testutil::context_from_rows;

    fn div_spec(k_lo: usize, k_hi: usize) -> ProblemSpec {
        ProblemSpec {
            k_lo,
            k_hi,
            support_p: 0,
            constraints: vec![],
            objectives: vec![Objective {
                dimension: MiningDimension::Tags,
                mode: Mode::Diversity,
                weight: 1.0,
            }],
            describability: Describability::Either,
        }
    }

    fn sig(w: &[f64]) -> TagSignature {
        TagSignature::new(w.to_vec())
    }

    #[test]
    fn identical_vectors_have_zero_distance_under_both_metrics() {
        let a = sig(&[1.0, 2.0]);
        let b = sig(&[1.0, 2.0]);
        for metric in [DistanceMetric::Angular, DistanceMetric::Complement] {
            let m = DistanceMatrix::from_signatures(&[&a, &b], metric).unwrap();
            assert!(m.get(0, 1).abs() < 1e-12);
            assert_eq!(m.get(0, 0), 0.0);
        }
    }

    #[test]
    fn orthogonal_vectors_split_the_metrics() {
        let a = sig(&[1.0, 0.0]);
        let b = sig(&[0.0, 1.0]);
        let ang = DistanceMatrix::from_signatures(&[&a, &b], DistanceMetric::Angular).unwrap();
        assert!((ang.get(0, 1) - 0.5).abs() < 1e-12);
        let comp =
            DistanceMatrix::from_signatures(&[&a, &b], DistanceMetric::Complement).unwrap();
        assert!((comp.get(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_signature_is_rejected() {
        let a = sig(&[1.0, 0.0]);
        let z = sig(&[0.0, 0.0]);
        assert!(matches!(
            DistanceMatrix::from_signatures(&[&a, &z], DistanceMetric::Angular),
            Err(TagdmError::InvalidSignature(1))
        ));
    }

    #[test]
    fn two_groups_k2_is_forced() {
        let ctx = context_from_rows(
            &["g"],
            &["x"],
            &[(&["m"], &["a"], &["rock"]), (&["f"], &["a"], &["jazz"])],
        );
        // context has groups for gender=f, gender=m, genre=a; narrow to a
        // spec the base solver serves and k = 2.
        let spec = div_spec(2, 2);
        let out = dv_fdp(&ctx, &spec, 2, &FdpParams::default()).unwrap();
        let r = out.result().expect("always returns a set");
        assert_eq!(r.group_indices.len(), 2);
    }

    #[test]
    fn k_larger_than_n_is_an_error() {
        let ctx = context_from_rows(
            &["g"],
            &["x"],
            &[(&["m"], &["a"], &["rock"]), (&["f"], &["a"], &["jazz"])],
        );
        let spec = div_spec(2, 10);
        assert!(matches!(
            dv_fdp(&ctx, &spec, 10, &FdpParams::default()),
            Err(TagdmError::InvalidParams(_))
        ));
    }

    #[test]
    fn impossible_pairwise_threshold_is_infeasible_at_seeding() {
        // Single-predicate groups with pairwise-distinct user values:
        // user similarity is 0 < 1.0 for every pair, so folding cannot
        // seed the result set.
        let ds = crate::testutil::dataset_from_rows(
            &["g"],
            &["x"],
            &[
                (&["a"], &["p"], &["rock"]),
                (&["b"], &["p"], &["jazz"]),
                (&["c"], &["p"], &["folk"]),
            ],
        );
        let groups = crate::model::enumerate_groups(&ds, 1, 1).unwrap();
        let vocab = crate::signature::Vocabulary::top_of(&ds, usize::MAX);
        let ctx = crate::problem::MiningContext::build(
            ds,
            groups,
            vocab,
            crate::signature::MetricConfig::default(),
        );
        let mut spec = div_spec(2, 2);
        spec.constraints.push(Constraint {
            dimension: MiningDimension::Users,
            mode: Mode::Similarity,
            threshold: 1.0,
        });
        let out = dv_fdp_fo(&ctx, &spec, 2, &FdpParams::default()).unwrap();
        assert!(matches!(out, SolveOutcome::Infeasible));
    }

    #[test]
    fn greedy_marginals_are_maximal_at_each_step() {
        let ctx = context_from_rows(
            &["g"],
            &["x"],
            &[
                (&["a"], &["p"], &["rock", "metal"]),
                (&["b"], &["q"], &["jazz"]),
                (&["c"], &["r"], &["folk", "indie"]),
                (&["d"], &["s"], &["rock", "jazz"]),
            ],
        );
        let spec = div_spec(3, 3);
        let k = 3;
        let (out, trace) = dv_fdp_traced(&ctx, &spec, k, &FdpParams::default()).unwrap();
        let trace = trace.expect("solved");
        let matrix = distance_matrix(&ctx, DistanceMetric::Angular).unwrap();
        let mut chosen = vec![trace.seed.0, trace.seed.1];
        for &(added, marginal) in &trace.adds {
            for z in 0..matrix.n() {
                if chosen.contains(&z) {
                    continue;
                }
                let m: f64 = chosen.iter().map(|&c| matrix.get(z, c)).sum();
                assert!(m <= marginal + 1e-12, "greedy must pick the max marginal");
            }
            chosen.push(added);
        }
        assert!(out.result().is_some());
    }
}

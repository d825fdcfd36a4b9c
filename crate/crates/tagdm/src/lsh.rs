//! Similarity-maximizing solver family built on random-hyperplane
//! hashing.
//!
//! Each group's vector is reduced to a short bit signature: bit y of
//! table z is the sign of the dot product with a random hyperplane drawn
//! from a standard normal. Two vectors at angle θ agree on a bit with
//! probability 1 − θ/π, so co-bucketed groups tend to be similar.
//! Instead of nearest-neighbor lookups, whole buckets are ranked as
//! candidate result sets; when no bucket yields a candidate, the
//! signature width d′ is relaxed by binary search.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, TagdmError};
use crate::problem::{
    assemble_result, check_feasible, objective_score, MiningContext, ProblemSpec, SolveOutcome,
};
use crate::signature::{MiningDimension, Mode};

/// Widest supported bit signature; bucket keys are packed into a `u64`.
pub const MAX_SIGNATURE_BITS: usize = 64;

/// Tunables for the hashing solver family.
#[derive(Debug, Clone, Copy)]
pub struct LshParams {
    /// Initial signature width d′; the relaxation searches [1, d′].
    pub d_prime_init: usize,
    /// Number of independent hash tables l.
    pub tables: usize,
    /// Seed for hyperplane generation; recorded in the result.
    pub seed: u64,
    /// Buckets up to this size are searched exhaustively for the best
    /// k-subset; larger buckets are grown greedily from the closest pair.
    pub bucket_max: usize,
}

impl Default for LshParams {
    fn default() -> Self {
        LshParams {
            d_prime_init: 10,
            tables: 1,
            seed: 0,
            bucket_max: 12,
        }
    }
}

/// Sign bit of the projection of `vector` onto `hyperplane`; the
/// boundary (zero dot product) maps to 1.
pub fn hash_bit(vector: &[f64], hyperplane: &[f64]) -> bool {
    debug_assert_eq!(vector.len(), hyperplane.len());
    let dot: f64 = vector.iter().zip(hyperplane).map(|(a, b)| a * b).sum();
    dot >= 0.0
}

/// l hash tables of d′ random hyperplanes each, with the bucket maps
/// from bit signature to the group indices hashing there.
#[derive(Debug, Clone)]
pub struct HashEnsemble {
    pub l: usize,
    pub d_prime: usize,
    pub seed: u64,
    /// `hyperplanes[z][y]` is hyperplane y of table z.
    pub hyperplanes: Vec<Vec<Vec<f64>>>,
    /// Per table: signature -> sorted group indices.
    pub buckets: Vec<BTreeMap<u64, Vec<usize>>>,
}

impl HashEnsemble {
    /// Bit signature of one vector in one table.
    pub fn signature(&self, table: usize, vector: &[f64]) -> u64 {
        let mut sig = 0u64;
        for (y, hp) in self.hyperplanes[table].iter().enumerate() {
            if hash_bit(vector, hp) {
                sig |= 1 << y;
            }
        }
        sig
    }
}

/// Hash every vector into `l` tables of `d_prime` bits. Deterministic
/// given the seed: hyperplane entries come from a seeded ChaCha stream.
pub fn build_ensemble(
    vectors: &[Vec<f64>],
    l: usize,
    d_prime: usize,
    seed: u64,
) -> Result<HashEnsemble> {
    if vectors.is_empty() {
        return Err(TagdmError::NoData);
    }
    if d_prime < 1 || d_prime > MAX_SIGNATURE_BITS {
        return Err(TagdmError::InvalidParams(format!(
            "d_prime must be in [1, {MAX_SIGNATURE_BITS}], got {d_prime}"
        )));
    }
    if l < 1 {
        return Err(TagdmError::InvalidParams("need at least one table".into()));
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(TagdmError::InvalidParams(
            "hashing vectors must share one dimension".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let hyperplanes: Vec<Vec<Vec<f64>>> = (0..l)
        .map(|_| {
            (0..d_prime)
                .map(|_| (0..dim).map(|_| normal.sample(&mut rng)).collect())
                .collect()
        })
        .collect();

    let mut ensemble = HashEnsemble {
        l,
        d_prime,
        seed,
        hyperplanes,
        buckets: vec![BTreeMap::new(); l],
    };
    for z in 0..l {
        for (x, v) in vectors.iter().enumerate() {
            let sig = ensemble.signature(z, v);
            ensemble.buckets[z].entry(sig).or_default().push(x);
        }
    }
    Ok(ensemble)
}

/// Length of the hashing vectors after folding: the signature dimension
/// `d` plus, for each dimension carrying a similarity-mode constraint,
/// the total domain size of that dimension's schema.
pub fn hashing_dimension(ctx: &MiningContext, spec: &ProblemSpec, d: usize) -> usize {
    let mut total = d;
    if has_similarity_constraint(spec, MiningDimension::Users) {
        total += ctx.dataset.user_schema.one_hot_len();
    }
    if has_similarity_constraint(spec, MiningDimension::Items) {
        total += ctx.dataset.item_schema.one_hot_len();
    }
    total
}

fn has_similarity_constraint(spec: &ProblemSpec, dim: MiningDimension) -> bool {
    spec.constraints
        .iter()
        .any(|c| c.dimension == dim && c.mode == Mode::Similarity)
}

/// Hashing vectors for the folding variant: one-hot encodings of the
/// constrained user / item attributes concatenated with the tag
/// signature. Without similarity constraints this reduces to the plain
/// signatures.
pub fn fold_vectors(ctx: &MiningContext, spec: &ProblemSpec) -> Vec<Vec<f64>> {
    let fold_user = has_similarity_constraint(spec, MiningDimension::Users);
    let fold_item = has_similarity_constraint(spec, MiningDimension::Items);
    ctx.groups
        .iter()
        .map(|g| {
            let mut v = Vec::with_capacity(hashing_dimension(ctx, spec, ctx.vocabulary.len()));
            if fold_user {
                v.extend(g.one_hot_user.iter().map(|&b| if b { 1.0 } else { 0.0 }));
            }
            if fold_item {
                v.extend(g.one_hot_item.iter().map(|&b| if b { 1.0 } else { 0.0 }));
            }
            v.extend_from_slice(g.signature.weights());
            v
        })
        .collect()
}

fn signature_vectors(ctx: &MiningContext) -> Vec<Vec<f64>> {
    ctx.groups
        .iter()
        .map(|g| g.signature.weights().to_vec())
        .collect()
}

/// Lower bound on the probability that all pairs of a candidate set
/// land in one bucket, from the per-pair collision law (1 − θ/π)^d′ and
/// a union bound over the pairs. Can be vacuous (negative) for small d′.
pub fn result_set_bound(pair_angles: &[f64], d_prime: usize) -> f64 {
    let miss: f64 = pair_angles
        .iter()
        .map(|&theta| 1.0 - (1.0 - theta / std::f64::consts::PI).powi(d_prime as i32))
        .sum();
    1.0 - miss
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
            Variant::Base => "sm-lsh",
            Variant::Filter => "sm-lsh-fi",
            Variant::Fold => "sm-lsh-fo",
        }
    }
}

/// One relaxation step: the signature width tried and whether any
/// candidate was found at that width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelaxationStep {
    pub d_prime: usize,
    pub found: bool,
}

/// Pick the candidate subset a bucket contributes, if any: the whole
/// bucket when its size already fits [k_lo, k_hi]; the best k_hi-subset
/// (exhaustive up to `bucket_max`, otherwise greedy growth from the
/// closest pair) when it is over-full.
fn bucket_candidate(
    bucket: &[usize],
    spec: &ProblemSpec,
    ctx: &MiningContext,
    bucket_max: usize,
) -> Option<Vec<usize>> {
    let k_hi = spec.k_hi;
    if bucket.len() < spec.k_lo {
        return None;
    }
    if bucket.len() <= k_hi {
        return Some(bucket.to_vec());
    }
    if bucket.len() <= bucket_max {
        // Exhaustive scan of the k_hi-subsets of this bucket.
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut cand: Vec<usize> = (0..k_hi).collect();
        loop {
            let subset: Vec<usize> = cand.iter().map(|&p| bucket[p]).collect();
            let score = objective_score(&subset, spec, ctx);
            if best
                .as_ref()
                .is_none_or(|(s, b)| score > *s || (score == *s && subset < *b))
            {
                best = Some((score, subset));
            }
            // next combination
            let n = bucket.len();
            let mut i = k_hi;
            loop {
                if i == 0 {
                    return best.map(|(_, b)| b);
                }
                i -= 1;
                if cand[i] < n - (k_hi - i) {
                    cand[i] += 1;
                    for j in (i + 1)..k_hi {
                        cand[j] = cand[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
    // Greedy: seed with the pair scoring highest, then grow by best
    // marginal objective score; ties to the smallest index.
    let mut best_pair: Option<(f64, [usize; 2])> = None;
    for (a, &i) in bucket.iter().enumerate() {
        for &j in &bucket[a + 1..] {
            let score = objective_score(&[i, j], spec, ctx);
            if best_pair.is_none_or(|(s, _)| score > s) {
                best_pair = Some((score, [i, j]));
            }
        }
    }
    let (_, seed_pair) = best_pair?;
    let mut chosen: Vec<usize> = seed_pair.to_vec();
    while chosen.len() < k_hi {
        let mut best_next: Option<(f64, usize)> = None;
        for &z in bucket {
            if chosen.contains(&z) {
                continue;
            }
            let mut trial = chosen.clone();
            trial.push(z);
            trial.sort_unstable();
            let score = objective_score(&trial, spec, ctx);
            if best_next.is_none_or(|(s, _)| score > s) {
                best_next = Some((score, z));
            }
        }
        match best_next {
            Some((_, z)) => chosen.push(z),
            None => break,
        }
    }
    chosen.sort_unstable();
    Some(chosen)
}

fn run(
    ctx: &MiningContext,
    spec: &ProblemSpec,
    params: &LshParams,
    variant: Variant,
    mut trace: Option<&mut Vec<RelaxationStep>>,
) -> Result<SolveOutcome> {
    let started = std::time::Instant::now();
    spec.validate()?;
    if !spec.objectives_all(Mode::Similarity) {
        return Err(TagdmError::IncompatibleSolver(format!(
            "{} requires similarity-mode objectives",
            variant.name()
        )));
    }
    if ctx.groups.is_empty() {
        return Err(TagdmError::NoData);
    }
    if params.d_prime_init < 1 || params.d_prime_init > MAX_SIGNATURE_BITS {
        return Err(TagdmError::InvalidParams(format!(
            "d_prime_init must be in [1, {MAX_SIGNATURE_BITS}]"
        )));
    }

    let vectors = match variant {
        Variant::Fold => fold_vectors(ctx, spec),
        _ => signature_vectors(ctx),
    };

    let mut lo = 1usize;
    let mut hi = params.d_prime_init;
    let mut d_prime = params.d_prime_init;
    let mut best: Option<(f64, Vec<usize>)> = None;

    while lo <= hi {
        let ensemble = build_ensemble(&vectors, params.tables, d_prime, params.seed)?;

        let mut candidates: BTreeSet<Vec<usize>> = BTreeSet::new();
        for table in &ensemble.buckets {
            for bucket in table.values() {
                if let Some(c) = bucket_candidate(bucket, spec, ctx, params.bucket_max) {
                    candidates.insert(c);
                }
            }
        }

        let mut iteration_best: Option<(f64, Vec<usize>)> = None;
        for cand in &candidates {
            if variant != Variant::Base && !check_feasible(cand, spec, ctx).feasible {
                continue;
            }
            let score = objective_score(cand, spec, ctx);
            if iteration_best
                .as_ref()
                .is_none_or(|(s, b)| score > *s || (score == *s && cand < b))
            {
                iteration_best = Some((score, cand.clone()));
            }
        }

        let found = iteration_best.is_some();
        if let Some(t) = trace.as_mut() {
            t.push(RelaxationStep { d_prime, found });
        }
        if let Some((score, cand)) = iteration_best {
            if best
                .as_ref()
                .is_none_or(|(s, b)| score > *s || (score == *s && cand < *b))
            {
                best = Some((score, cand));
            }
            // Success: probe finer signatures.
            lo = d_prime + 1;
        } else {
            // Too fine: relax.
            hi = d_prime - 1;
        }
        if lo > hi {
            break;
        }
        d_prime = (lo + hi) / 2;
    }

    match best {
        None => Ok(SolveOutcome::Infeasible),
        Some((_, indices)) => Ok(SolveOutcome::Solved(assemble_result(
            indices,
            spec,
            ctx,
            variant.name(),
            started.elapsed().as_millis() as u64,
            Some(params.seed),
        ))),
    }
}

/// Base hashing solver: rank bucket candidates by objective score with
/// no feasibility filtering beyond the size bounds. Intended for specs
/// without hard constraints.
pub fn sm_lsh(ctx: &MiningContext, spec: &ProblemSpec, params: &LshParams) -> Result<SolveOutcome> {
    run(ctx, spec, params, Variant::Base, None)
}

/// Filtering variant: a bucket's candidate is admitted to ranking only
/// if it passes the full feasibility check.
pub fn sm_lsh_fi(
    ctx: &MiningContext,
    spec: &ProblemSpec,
    params: &LshParams,
) -> Result<SolveOutcome> {
    run(ctx, spec, params, Variant::Filter, None)
}

/// Folding variant: similarity-mode hard constraints are folded into the
/// hashing vectors (one-hot attribute encodings concatenated with the
/// tag signature), so buckets tend to satisfy them by construction;
/// candidates are still filtered for full feasibility afterwards.
pub fn sm_lsh_fo(
    ctx: &MiningContext,
    spec: &ProblemSpec,
    params: &LshParams,
) -> Result<SolveOutcome> {
    run(ctx, spec, params, Variant::Fold, None)
}

/// [`sm_lsh`] with the d′ relaxation trajectory recorded (base variant
/// by default; used to inspect the binary search).
pub fn sm_lsh_traced(
    ctx: &MiningContext,
    spec: &ProblemSpec,
    params: &LshParams,
) -> Result<(SolveOutcome, Vec<RelaxationStep>)> {
    let mut trace = Vec::new();
    let outcome = run(ctx, spec, params, Variant::Base, Some(&mut trace))?;
    Ok((outcome, trace))
}

//! Shared helpers for the integration suites: dataset builders, random
//! instance generators, and an independent brute-force solver used as
//! the oracle against the production exact solver.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tagdm::model::{enumerate_groups, Dataset, RawRow};
use tagdm::problem::{
    check_feasible, objective_score, Constraint, Describability, MiningContext, Objective,
    ProblemSpec,
};
use tagdm::signature::{MetricConfig, MiningDimension, Mode, Vocabulary};

pub fn dataset(
    user_attrs: &[&str],
    item_attrs: &[&str],
    rows: &[(Vec<&str>, Vec<&str>, Vec<&str>)],
) -> Dataset {
    let raw: Vec<RawRow> = rows
        .iter()
        .map(|(u, i, t)| RawRow {
            user_values: u.iter().map(|s| s.to_string()).collect(),
            item_values: i.iter().map(|s| s.to_string()).collect(),
            tags: t.iter().map(|s| s.to_string()).collect(),
        })
        .collect();
    Dataset::from_raw(
        user_attrs.iter().map(|s| s.to_string()).collect(),
        item_attrs.iter().map(|s| s.to_string()).collect(),
        raw,
    )
    .expect("test dataset")
}

/// Random dataset: uniform attribute values and 1..=3 uniform tags per
/// tuple, over `u_domains` / `i_domains` values per attribute.
pub fn random_dataset(
    rng: &mut ChaCha8Rng,
    n_tuples: usize,
    u_domains: &[usize],
    i_domains: &[usize],
    n_tags: usize,
) -> Dataset {
    let user_attrs: Vec<String> = (0..u_domains.len()).map(|a| format!("ua{a}")).collect();
    let item_attrs: Vec<String> = (0..i_domains.len()).map(|a| format!("ia{a}")).collect();
    let mut rows = Vec::with_capacity(n_tuples);
    for _ in 0..n_tuples {
        let user_values: Vec<String> = u_domains
            .iter()
            .map(|&d| format!("v{}", rng.random_range(0..d)))
            .collect();
        let item_values: Vec<String> = i_domains
            .iter()
            .map(|&d| format!("v{}", rng.random_range(0..d)))
            .collect();
        let count = rng.random_range(1..=3usize);
        let mut tags: Vec<String> = (0..count)
            .map(|_| format!("t{}", rng.random_range(0..n_tags)))
            .collect();
        tags.dedup();
        rows.push(RawRow {
            user_values,
            item_values,
            tags,
        });
    }
    Dataset::from_raw(user_attrs, item_attrs, rows).expect("random dataset")
}

/// Clustered dataset: tuples pick a cluster; attribute values and tags
/// lean towards the cluster's preferences, so groups have similarity /
/// diversity structure.
pub fn clustered_dataset(rng: &mut ChaCha8Rng, n_tuples: usize, clusters: usize) -> Dataset {
    let user_attrs = vec!["g".to_string(), "o".to_string()];
    let item_attrs = vec!["x".to_string()];
    let mut rows = Vec::with_capacity(n_tuples);
    for _ in 0..n_tuples {
        let c = rng.random_range(0..clusters);
        let g = if rng.random_bool(0.5) { "m" } else { "f" };
        let o = if rng.random_bool(0.8) {
            format!("o{c}")
        } else {
            format!("o{}", rng.random_range(0..clusters))
        };
        let x = if rng.random_bool(0.8) {
            format!("x{c}")
        } else {
            format!("x{}", rng.random_range(0..clusters))
        };
        let base = c * 4;
        let count = rng.random_range(1..=3usize);
        let mut tags: Vec<String> = (0..count)
            .map(|_| format!("t{}", base + rng.random_range(0..4)))
            .collect();
        tags.dedup();
        rows.push(RawRow {
            user_values: vec![g.to_string(), o],
            item_values: vec![x],
            tags,
        });
    }
    Dataset::from_raw(user_attrs, item_attrs, rows).expect("clustered dataset")
}

pub fn context(ds: Dataset, min_size: usize, vocab_size: usize) -> MiningContext {
    let max_preds = ds.user_schema.attr_count() + ds.item_schema.attr_count();
    let groups = enumerate_groups(&ds, min_size, max_preds).expect("enumeration");
    let vocab = Vocabulary::top_of(&ds, vocab_size);
    MiningContext::build(ds, groups, vocab, MetricConfig::default())
}

pub fn tags_objective_spec(mode: Mode, k_lo: usize, k_hi: usize, support_p: usize) -> ProblemSpec {
    ProblemSpec {
        k_lo,
        k_hi,
        support_p,
        constraints: vec![],
        objectives: vec![Objective {
            dimension: MiningDimension::Tags,
            mode,
            weight: 1.0,
        }],
        describability: Describability::Either,
    }
}

/// Random spec with a tags objective and user/item constraints.
pub fn random_spec(rng: &mut ChaCha8Rng, n_tuples: usize) -> ProblemSpec {
    let mode = if rng.random_bool(0.5) {
        Mode::Similarity
    } else {
        Mode::Diversity
    };
    let mut spec = tags_objective_spec(
        mode,
        1,
        rng.random_range(2..=3usize),
        rng.random_range(0..=(n_tuples / 4)),
    );
    for dimension in [MiningDimension::Users, MiningDimension::Items] {
        if rng.random_bool(0.7) {
            spec.constraints.push(Constraint {
                dimension,
                mode: if rng.random_bool(0.7) {
                    Mode::Similarity
                } else {
                    Mode::Diversity
                },
                threshold: rng.random_range(0.0..0.6),
            });
        }
    }
    spec
}

/// All k-subsets of 0..n in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut cand: Vec<usize> = (0..k).collect();
    loop {
        out.push(cand.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cand[i] < n - (k - i) {
                cand[i] += 1;
                for j in (i + 1)..k {
                    cand[j] = cand[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Independent brute-force solver: direct per-candidate feasibility and
/// score via the public checking functions, no pairwise caching. The
/// production exact solver must agree with this on every instance.
pub fn naive_exact(spec: &ProblemSpec, ctx: &MiningContext) -> Option<(f64, Vec<usize>)> {
    let n = ctx.group_count();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for k in spec.k_lo..=spec.k_hi.min(n) {
        for combo in combinations(n, k) {
            if !check_feasible(&combo, spec, ctx).feasible {
                continue;
            }
            let score = objective_score(&combo, spec, ctx);
            let replace = match &best {
                None => true,
                Some((bs, bi)) => score > *bs || (score == *bs && combo < *bi),
            };
            if replace {
                best = Some((score, combo));
            }
        }
    }
    best
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Group tag signatures and the pairwise comparison functions over the
//! three tagging dimensions (users, items, tags), plus their pair-wise
//! aggregation.
//!
//! A signature is a dense weight vector over a fixed global vocabulary.
//! Similarity scores are all in [0, 1]; diversity is the inverse
//! (1 - similarity) of the same base metric.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TagdmError};
use crate::model::{Dataset, Dimension, TaggingGroup};

/// Dense non-negative weight vector over the global tag vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TagSignature {
    weights: Vec<f64>,
}

impl TagSignature {
    pub fn new(weights: Vec<f64>) -> Self {
        TagSignature { weights }
    }

    /// Placeholder before the signature module fills a group in.
    pub fn empty() -> Self {
        TagSignature { weights: Vec::new() }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// A usable signature has at least one strictly positive entry.
    pub fn is_valid(&self) -> bool {
        self.weights.iter().any(|&w| w > 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Ordered global tag (or topic) list all signatures are built over.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tags: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_tags(tags: Vec<String>) -> Self {
        let index = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tags, index }
    }

    /// The `d` most frequent tags of the dataset, most frequent first,
    /// ties broken lexicographically.
    pub fn top_of(ds: &Dataset, d: usize) -> Self {
        let mut freq = ds.tag_frequencies();
        freq.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        freq.truncate(d);
        Vocabulary::from_tags(freq.into_iter().map(|(t, _)| t).collect())
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn index_of(&self, tag: &str) -> Option<usize> {
        self.index.get(tag).copied()
    }
}

/// What to compare (dimension) and in which direction (mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MiningMeasure {
    pub dimension: MiningDimension,
    pub mode: Mode,
}

impl MiningMeasure {
    pub fn new(dimension: MiningDimension, mode: Mode) -> Self {
        MiningMeasure { dimension, mode }
    }
}

impl std::fmt::Display for MiningMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}-{:?}", self.dimension, self.mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MiningDimension {
    Users,
    Items,
    Tags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Similarity,
    Diversity,
}

/// Base metric used for the users / items dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PairMetric {
    /// Exact-match overlap of descriptor attribute values.
    #[default]
    Structural,
    /// Jaccard overlap of the item sets tagged by the two groups.
    Jaccard,
}

/// Which base metric serves each structured dimension. Tags always use
/// cosine over signatures.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct MetricConfig {
    #[serde(default)]
    pub users: PairMetric,
    #[serde(default)]
    pub items: PairMetric,
}

/// Count how many member tuples of the group use each vocabulary tag.
/// Tags outside the vocabulary are dropped; a group sharing no tag with
/// the vocabulary yields an all-zero (invalid) signature.
pub fn build_signature(group: &TaggingGroup, vocab: &Vocabulary, ds: &Dataset) -> TagSignature {
    let mut weights = vec![0.0; vocab.len()];
    for &id in &group.members {
        for tag in &ds.tuples[id as usize].tags {
            if let Some(j) = vocab.index_of(tag) {
                weights[j] += 1.0;
            }
        }
    }
    TagSignature::new(weights)
}

/// Fill every group's signature in place. Returns the indices of groups
/// whose signature came out invalid (no vocabulary overlap).
pub fn attach_signatures(
    groups: &mut [TaggingGroup],
    vocab: &Vocabulary,
    ds: &Dataset,
) -> Vec<usize> {
    let mut invalid = Vec::new();
    for (i, g) in groups.iter_mut().enumerate() {
        g.signature = build_signature(g, vocab, ds);
        if !g.signature.is_valid() {
            invalid.push(i);
        }
    }
    invalid
}

/// Cosine of the angle between two signature vectors. Weights are
/// non-negative so the result lies in [0, 1].
pub fn cosine_similarity(x: &TagSignature, y: &TagSignature) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(TagdmError::InvalidParams(format!(
            "signature dimensions differ: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    let nx2: f64 = x.weights().iter().map(|a| a * a).sum();
    let ny2: f64 = y.weights().iter().map(|a| a * a).sum();
    if nx2 == 0.0 || ny2 == 0.0 {
        return Err(TagdmError::UndefinedAngle);
    }
    let dot: f64 = x
        .weights()
        .iter()
        .zip(y.weights())
        .map(|(a, b)| a * b)
        .sum();
    // sqrt of the product (not the product of sqrts) keeps identical
    // vectors at exactly 1.
    Ok((dot / (nx2 * ny2).sqrt()).clamp(0.0, 1.0))
}

/// Structural similarity of two descriptors on one dimension: exact-match
/// agreement summed over attributes constrained in both, normalized by
/// the number of attributes constrained in either.
pub fn structural_pairwise(g1: &TaggingGroup, g2: &TaggingGroup, dim: Dimension) -> Result<f64> {
    structural_pairwise_with(g1, g2, dim, |a, b| if a == b { 1.0 } else { 0.0 })
}

/// Structural similarity with a pluggable per-value similarity function
/// (applied to value indices within the shared domain).
pub fn structural_pairwise_with(
    g1: &TaggingGroup,
    g2: &TaggingGroup,
    dim: Dimension,
    sim: impl Fn(u32, u32) -> f64,
) -> Result<f64> {
    let p1: Vec<_> = g1
        .descriptor
        .predicates()
        .iter()
        .filter(|p| p.dim == dim)
        .collect();
    let p2: Vec<_> = g2
        .descriptor
        .predicates()
        .iter()
        .filter(|p| p.dim == dim)
        .collect();
    if p1.is_empty() && p2.is_empty() {
        let name = match dim {
            Dimension::User => "users",
            Dimension::Item => "items",
        };
        return Err(TagdmError::DimensionAbsent(name));
    }
    let mut union: Vec<u32> = p1.iter().chain(&p2).map(|p| p.attr).collect();
    union.sort_unstable();
    union.dedup();

    let mut total = 0.0;
    for p in &p1 {
        if let Some(v2) = g2.descriptor.value_for(dim, p.attr) {
            total += sim(p.value, v2);
        }
    }
    Ok(total / union.len() as f64)
}

/// Fraction of items tagged by both groups: |items1 ∩ items2| over
/// |items1 ∪ items2|. Item identity is the full item attribute vector.
pub fn jaccard_item_overlap(g1: &TaggingGroup, g2: &TaggingGroup) -> f64 {
    let (a, b) = (&g1.items, &g2.items);
    let mut inter = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return 0.0; // both groups empty; unreachable for enumerated groups
    }
    inter as f64 / union as f64
}

/// Pairwise score for one measure: similarity mode returns the base
/// metric, diversity mode its inverse (1 - similarity).
pub fn pairwise_score(
    g1: &TaggingGroup,
    g2: &TaggingGroup,
    measure: MiningMeasure,
    cfg: MetricConfig,
) -> Result<f64> {
    let sim = match measure.dimension {
        MiningDimension::Users => match cfg.users {
            PairMetric::Structural => structural_pairwise(g1, g2, Dimension::User)?,
            PairMetric::Jaccard => jaccard_item_overlap(g1, g2),
        },
        MiningDimension::Items => match cfg.items {
            PairMetric::Structural => structural_pairwise(g1, g2, Dimension::Item)?,
            PairMetric::Jaccard => jaccard_item_overlap(g1, g2),
        },
        MiningDimension::Tags => cosine_similarity(&g1.signature, &g2.signature)?,
    };
    Ok(match measure.mode {
        Mode::Similarity => sim,
        Mode::Diversity => 1.0 - sim,
    })
}

/// Total variant used inside feasibility checks and solvers, where the
/// score must exist for every pair: a dimension absent from both
/// descriptors (or an unusable signature) counts as zero similarity.
pub fn pairwise_score_total(
    g1: &TaggingGroup,
    g2: &TaggingGroup,
    measure: MiningMeasure,
    cfg: MetricConfig,
) -> f64 {
    match pairwise_score(g1, g2, measure, cfg) {
        Ok(s) => s,
        Err(_) => match measure.mode {
            Mode::Similarity => 0.0,
            Mode::Diversity => 1.0,
        },
    }
}

/// Arithmetic mean of the pairwise score over all unordered distinct
/// pairs. Errors for fewer than two groups; see
/// [`aggregate_with_convention`] for the singleton convention.
pub fn aggregate_score(
    groups: &[&TaggingGroup],
    measure: MiningMeasure,
    cfg: MetricConfig,
) -> Result<f64> {
    if groups.len() < 2 {
        return Err(TagdmError::TooFewGroups(groups.len()));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..groups.len() {
        for j in (i + 1)..groups.len() {
            total += pairwise_score_total(groups[i], groups[j], measure, cfg);
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// Aggregate score extended to singletons: with no pairs to average, a
/// similarity measure is vacuously 1 and a diversity measure vacuously 0,
/// keeping result sets of size one scoreable.
pub fn aggregate_with_convention(
    groups: &[&TaggingGroup],
    measure: MiningMeasure,
    cfg: MetricConfig,
) -> f64 {
    if groups.len() == 1 {
        return match measure.mode {
            Mode::Similarity => 1.0,
            Mode::Diversity => 0.0,
        };
    }
    aggregate_score(groups, measure, cfg).expect("non-singleton aggregate")
}

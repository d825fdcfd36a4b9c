//! Deterministic synthetic tagging data.
//!
//! Tuples are drawn from a configurable number of latent clusters. Each
//! cluster has its own slice of the tag pool and preferred occupation /
//! genre values, so enumerated groups carry real similarity and
//! diversity structure: refinement-related groups share tags, while
//! groups pinned to different clusters use disjoint vocabulary. Gender
//! and age are uniform, giving attribute overlap across clusters.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tagdm::model::RawRow;
use tagdm::Result;

/// User attribute domains: gender (2), age band (8), occupation (21).
const AGE_BANDS: usize = 8;
const OCCUPATIONS: usize = 21;
/// Item attribute domain: genre (19).
const GENRES: usize = 19;
/// Tag pool: 36 cluster tags (six per cluster slot) + 6 shared tags.
const CLUSTER_TAGS: usize = 36;
const SHARED_TAGS: usize = 6;
const TAGS_PER_CLUSTER: usize = 6;

/// Probability that a tuple takes its cluster's preferred occupation /
/// genre rather than a uniform draw.
const CLUSTER_PULL: f64 = 0.8;
/// Probability of appending one shared (cross-cluster) tag.
const SHARED_TAG_RATE: f64 = 0.15;

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub tuples: usize,
    pub clusters: usize,
    pub seed: u64,
}

pub fn user_attributes() -> Vec<String> {
    vec!["gender".into(), "age".into(), "occupation".into()]
}

pub fn item_attributes() -> Vec<String> {
    vec!["genre".into()]
}

/// Generate the raw rows for a configuration. Deterministic: the same
/// config always yields the same rows.
pub fn generate_rows(cfg: &SynthConfig) -> Result<Vec<RawRow>> {
    if cfg.clusters < 1 {
        return Err(tagdm::TagdmError::InvalidParams(
            "need at least one cluster".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Per-cluster preferences, drawn once up front.
    let preferred_occ: Vec<usize> = (0..cfg.clusters)
        .map(|_| rng.random_range(0..OCCUPATIONS))
        .collect();
    let preferred_genre: Vec<usize> = (0..cfg.clusters)
        .map(|_| rng.random_range(0..GENRES))
        .collect();
    let vocab_offset: Vec<usize> = (0..cfg.clusters)
        .map(|c| (c * TAGS_PER_CLUSTER) % CLUSTER_TAGS)
        .collect();

    let mut rows = Vec::with_capacity(cfg.tuples);
    for _ in 0..cfg.tuples {
        let c = rng.random_range(0..cfg.clusters);
        let gender = if rng.random_bool(0.5) { "f" } else { "m" };
        let age = rng.random_range(0..AGE_BANDS);
        let occupation = if rng.random_bool(CLUSTER_PULL) {
            preferred_occ[c]
        } else {
            rng.random_range(0..OCCUPATIONS)
        };
        let genre = if rng.random_bool(CLUSTER_PULL) {
            preferred_genre[c]
        } else {
            rng.random_range(0..GENRES)
        };

        let tag_count = rng.random_range(1..=3);
        let mut tags: Vec<String> = Vec::with_capacity(tag_count + 1);
        for _ in 0..tag_count {
            let t = vocab_offset[c] + rng.random_range(0..TAGS_PER_CLUSTER);
            let tag = format!("tag{t:02}");
            if !tags.contains(&tag) {
                tags.push(tag);
            }
        }
        if rng.random_bool(SHARED_TAG_RATE) {
            let t = CLUSTER_TAGS + rng.random_range(0..SHARED_TAGS);
            let tag = format!("tag{t:02}");
            if !tags.contains(&tag) {
                tags.push(tag);
            }
        }

        rows.push(RawRow {
            user_values: vec![
                gender.to_string(),
                format!("a{age}"),
                format!("occ{occupation:02}"),
            ],
            item_values: vec![format!("genre{genre:02}")],
            tags,
        });
    }
    Ok(rows)
}

/// Write a generated dataset to `w` in the standard data-file format.
pub fn write_to<W: std::io::Write>(cfg: &SynthConfig, w: W) -> Result<()> {
    let rows = generate_rows(cfg)?;
    tagdm::io::write_dataset(w, &user_attributes(), &item_attributes(), &rows)
}

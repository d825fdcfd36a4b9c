//! Dual mining of social tagging behavior.
//!
//! Finds sets of describable tagging-action groups that maximize the
//! similarity or diversity of their users, items, or tags, subject to
//! support and threshold constraints. Three solver families are
//! provided: an exhaustive exact solver, a random-hyperplane hashing
//! solver for similarity goals, and a greedy dispersion solver for
//! diversity goals, each with filtering and folding treatments of the
//! hard constraints.

pub mod error;
pub mod fdp;
pub mod io;
pub mod lsh;
pub mod model;
pub mod problem;
pub mod signature;

pub use error::{Result, TagdmError};

#[cfg(test)]
pub(crate) mod testutil {
    use crate::model::{Dataset, RawRow};
    use crate::problem::MiningContext;
    use crate::signature::{MetricConfig, Vocabulary};

    pub fn dataset_from_rows(
        user_attrs: &[&str],
        item_attrs: &[&str],
        rows: &[(&[&str], &[&str], &[&str])],
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

    /// Dataset, enumerated groups (min_size 1, full descriptors), full
    /// vocabulary, default metrics.
    pub fn context_from_rows(
        user_attrs: &[&str],
        item_attrs: &[&str],
        rows: &[(&[&str], &[&str], &[&str])],
    ) -> MiningContext {
        let ds = dataset_from_rows(user_attrs, item_attrs, rows);
        let groups =
            crate::model::enumerate_groups(&ds, 1, user_attrs.len() + item_attrs.len()).unwrap();
        let vocab = Vocabulary::top_of(&ds, usize::MAX);
        MiningContext::build(ds, groups, vocab, MetricConfig::default())
    }
}

//! Tagging data model: attribute schemas, expanded tagging-action tuples,
//! describable groups and their enumeration over the descriptor lattice.
//!
//! A tagging action is one (user, item, tag-set) event, stored as a flat
//! tuple of user attribute values, item attribute values and tags. Groups
//! are conjunctions of `attribute = value` predicates; a group's members
//! are exactly the tuples satisfying every predicate.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Result, TagdmError};
use crate::signature::TagSignature;

/// Sentinel stored for a missing attribute value. It is a regular member
/// of the attribute's domain so describability stays total.
pub const MISSING_VALUE: &str = "∅";

/// Which side of a tagging action an attribute belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dimension {
    User,
    Item,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dimension::User => write!(f, "u"),
            Dimension::Item => write!(f, "i"),
        }
    }
}

/// Attribute names and per-attribute finite value domains for one dimension.
///
/// Domains are sorted; tuples and predicates refer to values by index into
/// the domain, which keeps enumeration and one-hot layouts deterministic.
#[derive(Debug, Clone)]
pub struct Schema {
    pub dimension: Dimension,
    pub attributes: Vec<String>,
    pub domains: Vec<Vec<String>>,
}

impl Schema {
    pub fn new(dimension: Dimension, attributes: Vec<String>, domains: Vec<Vec<String>>) -> Self {
        debug_assert_eq!(attributes.len(), domains.len());
        Schema {
            dimension,
            attributes,
            domains,
        }
    }

    pub fn attr_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn domain_size(&self, attr: usize) -> usize {
        self.domains[attr].len()
    }

    /// Total number of (attribute, value) pairs, i.e. the length of a
    /// one-hot encoding over this schema.
    pub fn one_hot_len(&self) -> usize {
        self.domains.iter().map(Vec::len).sum()
    }

    /// Offset of attribute `attr`'s block in the one-hot layout.
    pub fn one_hot_offset(&self, attr: usize) -> usize {
        self.domains[..attr].iter().map(Vec::len).sum()
    }

    pub fn value(&self, attr: usize, value_idx: usize) -> &str {
        &self.domains[attr][value_idx]
    }

    pub fn attr_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == name)
    }

    pub fn value_index(&self, attr: usize, value: &str) -> Option<usize> {
        self.domains[attr].binary_search_by(|v| v.as_str().cmp(value)).ok()
    }
}

/// One expanded tagging action. Attribute values are stored as indices
/// into the corresponding schema domain, in schema attribute order.
#[derive(Debug, Clone)]
pub struct TaggingTuple {
    pub id: u32,
    pub user_values: Vec<u32>,
    pub item_values: Vec<u32>,
    pub tags: BTreeSet<String>,
    /// Identity of the tagged item: tuples with identical item attribute
    /// values share a key. Used for item-overlap comparisons.
    pub item_key: u32,
}

impl TaggingTuple {
    pub fn value(&self, dim: Dimension, attr: usize) -> u32 {
        match dim {
            Dimension::User => self.user_values[attr],
            Dimension::Item => self.item_values[attr],
        }
    }
}

/// One not-yet-interned input row: attribute values in schema order plus
/// the raw tag list. Empty attribute values stand for a missing value.
#[derive(Debug, Clone)]
pub struct RawRow {
    pub user_values: Vec<String>,
    pub item_values: Vec<String>,
    pub tags: Vec<String>,
}

/// Immutable tuple store plus both schemas. Safe to share across solver
/// threads once built.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub user_schema: Schema,
    pub item_schema: Schema,
    pub tuples: Vec<TaggingTuple>,
    pub item_key_count: u32,
}

impl Dataset {
    /// Build a dataset from raw rows. Domains are the observed value sets
    /// per attribute (sorted); empty values become [`MISSING_VALUE`];
    /// tuple ids follow input order starting at 0.
    pub fn from_raw(
        user_attrs: Vec<String>,
        item_attrs: Vec<String>,
        rows: Vec<RawRow>,
    ) -> Result<Self> {
        for attrs in [&user_attrs, &item_attrs] {
            let mut seen = BTreeSet::new();
            for a in attrs {
                if !seen.insert(a.as_str()) {
                    return Err(TagdmError::Parse {
                        line: 1,
                        msg: format!("duplicate attribute name {a:?}"),
                    });
                }
            }
        }
        let normalize = |v: &str| -> String {
            let v = v.trim();
            if v.is_empty() {
                MISSING_VALUE.to_string()
            } else {
                v.to_string()
            }
        };

        let mut user_domains: Vec<BTreeSet<String>> = vec![BTreeSet::new(); user_attrs.len()];
        let mut item_domains: Vec<BTreeSet<String>> = vec![BTreeSet::new(); item_attrs.len()];
        for (line, row) in rows.iter().enumerate() {
            if row.user_values.len() != user_attrs.len()
                || row.item_values.len() != item_attrs.len()
            {
                return Err(TagdmError::Parse {
                    line: line + 2,
                    msg: "wrong number of attribute values".into(),
                });
            }
            for (d, v) in user_domains.iter_mut().zip(&row.user_values) {
                d.insert(normalize(v));
            }
            for (d, v) in item_domains.iter_mut().zip(&row.item_values) {
                d.insert(normalize(v));
            }
        }
        let user_schema = Schema::new(
            Dimension::User,
            user_attrs,
            user_domains.into_iter().map(|d| d.into_iter().collect()).collect(),
        );
        let item_schema = Schema::new(
            Dimension::Item,
            item_attrs,
            item_domains.into_iter().map(|d| d.into_iter().collect()).collect(),
        );

        let mut item_keys: std::collections::HashMap<Vec<u32>, u32> = Default::default();
        let mut tuples = Vec::with_capacity(rows.len());
        for (line, row) in rows.into_iter().enumerate() {
            let intern = |schema: &Schema, values: &[String]| -> Vec<u32> {
                values
                    .iter()
                    .enumerate()
                    .map(|(a, v)| {
                        schema
                            .value_index(a, &normalize(v))
                            .expect("value observed during domain pass") as u32
                    })
                    .collect()
            };
            let user_values = intern(&user_schema, &row.user_values);
            let item_values = intern(&item_schema, &row.item_values);
            let mut tags: BTreeSet<String> = row
                .tags
                .iter()
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .collect();
            tags.retain(|t| !t.is_empty());
            if tags.is_empty() {
                return Err(TagdmError::Parse {
                    line: line + 2,
                    msg: "tuple has no tags".into(),
                });
            }
            let next_key = item_keys.len() as u32;
            let item_key = *item_keys.entry(item_values.clone()).or_insert(next_key);
            tuples.push(TaggingTuple {
                id: line as u32,
                user_values,
                item_values,
                tags,
                item_key,
            });
        }
        Ok(Dataset {
            user_schema,
            item_schema,
            tuples,
            item_key_count: item_keys.len() as u32,
        })
    }
    pub fn schema(&self, dim: Dimension) -> &Schema {
        match dim {
            Dimension::User => &self.user_schema,
            Dimension::Item => &self.item_schema,
        }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Collect every distinct tag with the number of tuples using it.
    pub fn tag_frequencies(&self) -> Vec<(String, usize)> {
        let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
        for t in &self.tuples {
            for tag in &t.tags {
                *counts.entry(tag.as_str()).or_insert(0) += 1;
            }
        }
        counts.into_iter().map(|(t, c)| (t.to_string(), c)).collect()
    }
}

/// A single `attribute = value` predicate. Ordering is (dimension,
/// attribute, value), which fixes the canonical descriptor order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Predicate {
    pub dim: Dimension,
    pub attr: u32,
    pub value: u32,
}

/// Conjunctive predicate identifying a describable group. Predicates are
/// sorted, non-empty, and constrain each (dimension, attribute) at most
/// once.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupDescriptor {
    preds: Vec<Predicate>,
}

impl GroupDescriptor {
    pub fn new(mut preds: Vec<Predicate>) -> Result<Self> {
        if preds.is_empty() {
            return Err(TagdmError::InvalidParams(
                "descriptor needs at least one predicate".into(),
            ));
        }
        preds.sort();
        for w in preds.windows(2) {
            if w[0].dim == w[1].dim && w[0].attr == w[1].attr {
                return Err(TagdmError::InvalidParams(format!(
                    "attribute {} constrained twice",
                    w[0].attr
                )));
            }
        }
        Ok(GroupDescriptor { preds })
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.preds
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn matches(&self, tuple: &TaggingTuple) -> bool {
        self.preds
            .iter()
            .all(|p| tuple.value(p.dim, p.attr as usize) == p.value)
    }

    /// Value constrained for (dim, attr), if any.
    pub fn value_for(&self, dim: Dimension, attr: u32) -> Option<u32> {
        self.preds
            .iter()
            .find(|p| p.dim == dim && p.attr == attr)
            .map(|p| p.value)
    }

    pub fn constrains(&self, dim: Dimension) -> bool {
        self.preds.iter().any(|p| p.dim == dim)
    }

    /// Human-readable `dim:attr=value` conjunction.
    pub fn render(&self, ds: &Dataset) -> String {
        let parts: Vec<String> = self
            .preds
            .iter()
            .map(|p| {
                let schema = ds.schema(p.dim);
                format!(
                    "{}:{}={}",
                    p.dim,
                    schema.attributes[p.attr as usize],
                    schema.value(p.attr as usize, p.value as usize)
                )
            })
            .collect();
        parts.join(" & ")
    }
}

/// A describable group: its descriptor, the exact member tuple ids, the
/// distinct item keys among members, a tag signature (filled by the
/// signature module) and one-hot encodings of the constrained attributes.
#[derive(Debug, Clone)]
pub struct TaggingGroup {
    pub descriptor: GroupDescriptor,
    /// Sorted tuple ids satisfying the descriptor.
    pub members: Vec<u32>,
    /// Sorted distinct item keys among the members.
    pub items: Vec<u32>,
    pub signature: TagSignature,
    /// One set bit per user attribute constrained by the descriptor.
    pub one_hot_user: Vec<bool>,
    /// One set bit per item attribute constrained by the descriptor.
    pub one_hot_item: Vec<bool>,
}

impl TaggingGroup {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// True when every predicate lies on `dim`.
    pub fn describable_only_on(&self, dim: Dimension) -> bool {
        self.descriptor.predicates().iter().all(|p| p.dim == dim)
    }
}

fn build_group(ds: &Dataset, descriptor: GroupDescriptor, members: Vec<u32>) -> TaggingGroup {
    let mut items: Vec<u32> = members
        .iter()
        .map(|&id| ds.tuples[id as usize].item_key)
        .collect();
    items.sort_unstable();
    items.dedup();

    let mut one_hot_user = vec![false; ds.user_schema.one_hot_len()];
    let mut one_hot_item = vec![false; ds.item_schema.one_hot_len()];
    for p in descriptor.predicates() {
        match p.dim {
            Dimension::User => {
                let off = ds.user_schema.one_hot_offset(p.attr as usize);
                one_hot_user[off + p.value as usize] = true;
            }
            Dimension::Item => {
                let off = ds.item_schema.one_hot_offset(p.attr as usize);
                one_hot_item[off + p.value as usize] = true;
            }
        }
    }

    TaggingGroup {
        descriptor,
        members,
        items,
        signature: TagSignature::empty(),
        one_hot_user,
        one_hot_item,
    }
}

fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Enumerate every describable group with at least `min_size` members and
/// at most `max_predicates` predicates.
///
/// Conjunctions are grown level-wise: a conjunction's member set is the
/// intersection of its sub-conjunctions' member sets, so any extension of
/// a pruned descriptor is also below `min_size` and never visited. Output
/// is sorted lexicographically by descriptor, independent of tuple order.
pub fn enumerate_groups(
    ds: &Dataset,
    min_size: usize,
    max_predicates: usize,
) -> Result<Vec<TaggingGroup>> {
    if ds.is_empty() {
        return Err(TagdmError::NoData);
    }
    if min_size < 1 || max_predicates < 1 {
        return Err(TagdmError::InvalidParams(
            "min_size and max_predicates must be >= 1".into(),
        ));
    }

    // Level 1: member lists for every single (dim, attr, value) predicate.
    let mut singles: Vec<(Predicate, Vec<u32>)> = Vec::new();
    for (dim, schema) in [
        (Dimension::User, &ds.user_schema),
        (Dimension::Item, &ds.item_schema),
    ] {
        for attr in 0..schema.attr_count() {
            let mut per_value: Vec<Vec<u32>> = vec![Vec::new(); schema.domain_size(attr)];
            for t in &ds.tuples {
                per_value[t.value(dim, attr) as usize].push(t.id);
            }
            for (value, mut members) in per_value.into_iter().enumerate() {
                if !members.is_empty() {
                    // Tuples may be stored in any order; member lists are
                    // keyed by id.
                    members.sort_unstable();
                    let pred = Predicate {
                        dim,
                        attr: attr as u32,
                        value: value as u32,
                    };
                    singles.push((pred, members));
                }
            }
        }
    }
    singles.sort_by_key(|(p, _)| *p);
    let frequent: Vec<(Predicate, Vec<u32>)> = singles
        .into_iter()
        .filter(|(_, m)| m.len() >= min_size)
        .collect();

    let mut out: Vec<(Vec<Predicate>, Vec<u32>)> = frequent
        .iter()
        .map(|(p, m)| (vec![*p], m.clone()))
        .collect();

    let mut frontier: Vec<(Vec<Predicate>, Vec<u32>)> = out.clone();
    for _level in 2..=max_predicates {
        let mut next = Vec::new();
        for (preds, members) in &frontier {
            let last = *preds.last().expect("non-empty descriptor");
            // Extend only with strictly greater predicates on a fresh
            // attribute, so each conjunction is generated exactly once.
            let start = frequent.partition_point(|(p, _)| *p <= last);
            for (pred, pred_members) in &frequent[start..] {
                if preds
                    .iter()
                    .any(|q| q.dim == pred.dim && q.attr == pred.attr)
                {
                    continue;
                }
                let inter = intersect_sorted(members, pred_members);
                if inter.len() >= min_size {
                    let mut extended = preds.clone();
                    extended.push(*pred);
                    next.push((extended, inter));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }

    out.sort_by(|(a, _), (b, _)| a.cmp(b));
    Ok(out
        .into_iter()
        .map(|(preds, members)| {
            build_group(ds, GroupDescriptor { preds }, members)
        })
        .collect())
}

/// Number of distinct tuples covered by at least one of the groups
/// (union cardinality, not a sum).
pub fn group_support<'a, I>(groups: I) -> usize
where
    I: IntoIterator<Item = &'a TaggingGroup>,
{
    let mut seen: BTreeSet<u32> = BTreeSet::new();
    for g in groups {
        seen.extend(g.members.iter().copied());
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::dataset_from_rows;

    fn six_tuple_dataset() -> Dataset {
        // gender in {m, f}, genre in {a, b}
        dataset_from_rows(
            &["gender"],
            &["genre"],
            &[
                (&["m"], &["a"], &["x"]),
                (&["m"], &["a"], &["x"]),
                (&["m"], &["b"], &["y"]),
                (&["f"], &["b"], &["y"]),
                (&["f"], &["a"], &["x"]),
                (&["f"], &["b"], &["z"]),
            ],
        )
    }

    #[test]
    fn single_predicate_groups() {
        let ds = six_tuple_dataset();
        let groups = enumerate_groups(&ds, 1, 1).unwrap();
        assert_eq!(groups.len(), 4); // gender=f, gender=m, genre=a, genre=b
        for g in &groups {
            assert_eq!(g.descriptor.len(), 1);
        }
    }

    #[test]
    fn min_size_above_tuple_count_yields_nothing() {
        let ds = six_tuple_dataset();
        let groups = enumerate_groups(&ds, 7, 2).unwrap();
        assert!(groups.is_empty());
    }

    #[test]
    fn empty_store_is_an_error() {
        let ds = dataset_from_rows(&["gender"], &["genre"], &[]);
        assert!(matches!(
            enumerate_groups(&ds, 1, 1),
            Err(TagdmError::NoData)
        ));
    }

    #[test]
    fn members_match_descriptor_exactly() {
        let ds = six_tuple_dataset();
        for g in enumerate_groups(&ds, 1, 2).unwrap() {
            for t in &ds.tuples {
                let is_member = g.members.binary_search(&t.id).is_ok();
                assert_eq!(is_member, g.descriptor.matches(t));
            }
        }
    }

    #[test]
    fn support_is_a_union_not_a_sum() {
        let ds = six_tuple_dataset();
        let groups = enumerate_groups(&ds, 1, 1).unwrap();
        // gender=m covers {0,1,2}, genre=a covers {0,1,4}.
        let m = groups
            .iter()
            .find(|g| g.descriptor.render(&ds) == "u:gender=m")
            .unwrap();
        let a = groups
            .iter()
            .find(|g| g.descriptor.render(&ds) == "i:genre=a")
            .unwrap();
        assert_eq!(group_support([m, a]), 4);
        assert_eq!(group_support::<[&TaggingGroup; 0]>([]), 0);
    }

    #[test]
    fn duplicate_attribute_rejected() {
        let p = |attr, value| Predicate {
            dim: Dimension::User,
            attr,
            value,
        };
        assert!(GroupDescriptor::new(vec![p(0, 0), p(0, 1)]).is_err());
        assert!(GroupDescriptor::new(vec![]).is_err());
    }
}

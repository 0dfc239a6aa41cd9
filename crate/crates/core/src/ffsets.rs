//! Flip-flop sets, their collections and multiplicity statistics.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::{FaninCone, FaultSite};
use crate::netlist::{FfId, NetId};

/// A nonempty, sorted, duplicate-free set of flip-flops. Its multiplicity is
/// its cardinality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FfSet(Vec<FfId>);

impl FfSet {
    /// Returns `None` for an empty input.
    pub fn new(members: impl IntoIterator<Item = FfId>) -> Option<Self> {
        let set: BTreeSet<FfId> = members.into_iter().collect();
        (!set.is_empty()).then(|| FfSet(set.into_iter().collect()))
    }

    pub fn members(&self) -> &[FfId] {
        &self.0
    }

    pub fn multiplicity(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, f: FfId) -> bool {
        self.0.binary_search(&f).is_ok()
    }

    pub fn is_subset(&self, other: &FfSet) -> bool {
        self.0.iter().all(|&f| other.contains(f))
    }
}

impl fmt::Display for FfSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.0.iter().map(|x| x.0.to_string()).collect();
        write!(f, "({})", ids.join(", "))
    }
}

/// Where a raw set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SetOrigin {
    /// A fault site, identified by its net.
    Site(NetId),
    /// The fan-in cone of a flip-flop (affected-cone view).
    Cone(FfId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSet {
    pub origin: SetOrigin,
    pub set: FfSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetError {
    #[error("collections range over different flip-flop spaces")]
    FfSpaceMismatch,
}

/// Raw sets with traceability plus the deduplicated view. Subsets are kept:
/// `{1,2}` and `{1,2,3}` may both appear in `unique`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetCollection {
    ff_names: Vec<String>,
    raw: Vec<RawSet>,
    unique: Vec<FfSet>,
}

impl SetCollection {
    pub fn from_raw(ff_names: Vec<String>, raw: Vec<RawSet>) -> Self {
        let unique: BTreeSet<FfSet> = raw.iter().map(|r| r.set.clone()).collect();
        Self {
            ff_names,
            raw,
            unique: unique.into_iter().collect(),
        }
    }

    pub fn empty(ff_names: Vec<String>) -> Self {
        Self::from_raw(ff_names, Vec::new())
    }

    /// Flip-flop names indexed by [`FfId`]; identifies the id space.
    pub fn ff_names(&self) -> &[String] {
        &self.ff_names
    }

    pub fn raw(&self) -> &[RawSet] {
        &self.raw
    }

    /// Sorted lexicographically by member ids.
    pub fn unique(&self) -> &[FfSet] {
        &self.unique
    }

    pub fn num_sets(&self) -> usize {
        self.raw.len()
    }

    pub fn num_unique(&self) -> usize {
        self.unique.len()
    }

    pub fn max_multiplicity(&self) -> usize {
        self.unique.iter().map(FfSet::multiplicity).max().unwrap_or(0)
    }

    /// Origins that produced `set`, in raw order.
    pub fn origins_of<'a>(&'a self, set: &'a FfSet) -> impl Iterator<Item = SetOrigin> + 'a {
        self.raw
            .iter()
            .filter(move |r| &r.set == set)
            .map(|r| r.origin)
    }
}

/// One raw set per site that reaches at least one flip-flop.
pub fn collect_static_sets(ff_names: Vec<String>, sites: &[FaultSite]) -> SetCollection {
    let raw = sites
        .iter()
        .filter_map(|s| {
            FfSet::new(s.static_ffs.iter().copied()).map(|set| RawSet {
                origin: SetOrigin::Site(s.net),
                set,
            })
        })
        .collect();
    SetCollection::from_raw(ff_names, raw)
}

pub fn merge_collections(a: &SetCollection, b: &SetCollection) -> Result<SetCollection, SetError> {
    if a.ff_names != b.ff_names {
        return Err(SetError::FfSpaceMismatch);
    }
    let raw = a.raw.iter().chain(&b.raw).cloned().collect();
    Ok(SetCollection::from_raw(a.ff_names.clone(), raw))
}

/// Affected-cone view: for each flip-flop, the union of the per-site sets of
/// every site lying in its fan-in cone. `site_sets` gives, per site, the
/// sets attributed to it (static set, or achievable patterns). Cones whose
/// union is empty contribute no raw set.
pub fn collect_cone_sets<'a, F, I>(
    ff_names: Vec<String>,
    cones: &[FaninCone],
    sites: &[FaultSite],
    mut site_sets: F,
) -> SetCollection
where
    F: FnMut(&FaultSite) -> I,
    I: IntoIterator<Item = &'a FfSet>,
{
    let per_site: Vec<(NetId, BTreeSet<FfId>)> = sites
        .iter()
        .map(|s| {
            let union = site_sets(s)
                .into_iter()
                .flat_map(|set| set.members().iter().copied())
                .collect();
            (s.net, union)
        })
        .collect();
    let raw = cones
        .iter()
        .filter_map(|cone| {
            let union = per_site
                .iter()
                .filter(|(net, _)| cone.contains(*net) || cone.support.contains(net))
                .flat_map(|(_, ffs)| ffs.iter().copied());
            FfSet::new(union).map(|set| RawSet {
                origin: SetOrigin::Cone(cone.ff),
                set,
            })
        })
        .collect();
    SetCollection::from_raw(ff_names, raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[u32]) -> FfSet {
        FfSet::new(ids.iter().map(|&i| FfId(i))).unwrap()
    }

    fn coll(sets: &[&[u32]]) -> SetCollection {
        let raw = sets
            .iter()
            .enumerate()
            .map(|(i, s)| RawSet {
                origin: SetOrigin::Site(NetId(i as u32)),
                set: set(s),
            })
            .collect();
        SetCollection::from_raw(vec!["A".into(), "B".into(), "C".into(), "D".into(), "E".into()], raw)
    }

    #[test]
    fn ffset_invariants() {
        assert!(FfSet::new([]).is_none());
        let s = FfSet::new([FfId(3), FfId(1), FfId(3)]).unwrap();
        assert_eq!(s.members(), &[FfId(1), FfId(3)]);
        assert_eq!(s.multiplicity(), 2);
        assert!(set(&[1]).is_subset(&s));
        assert_eq!(s.to_string(), "(1, 3)");
    }

    #[test]
    fn four_distinct_sets() {
        // {A,B},{A,B,C},{B,C,D},{C,D}
        let c = coll(&[&[0, 1], &[0, 1, 2], &[1, 2, 3], &[2, 3]]);
        assert_eq!(c.num_sets(), 4);
        assert_eq!(c.num_unique(), 4);
        assert_eq!(c.max_multiplicity(), 3);
    }

    #[test]
    fn duplicates_removed_subsets_kept() {
        let c = coll(&[&[1, 2, 3, 4], &[1, 2, 3, 4], &[1, 2], &[2, 3]]);
        assert_eq!(c.num_sets(), 4);
        assert_eq!(c.num_unique(), 3);
        assert_eq!(c.unique(), &[set(&[1, 2]), set(&[1, 2, 3, 4]), set(&[2, 3])]);
    }

    #[test]
    fn same_single_ff() {
        let c = coll(&[&[0], &[0], &[0], &[0], &[0]]);
        assert_eq!((c.num_sets(), c.num_unique(), c.max_multiplicity()), (5, 1, 1));
    }

    #[test]
    fn empty_collection() {
        let c = SetCollection::empty(vec![]);
        assert_eq!((c.num_sets(), c.num_unique(), c.max_multiplicity()), (0, 0, 0));
    }

    #[test]
    fn merge_identity_and_dedup() {
        let a = coll(&[&[0]]);
        let e = SetCollection::empty(a.ff_names().to_vec());
        assert_eq!(merge_collections(&a, &e).unwrap(), a);
        let m = merge_collections(&a, &a).unwrap();
        assert_eq!(m.num_unique(), 1);
        assert_eq!(m.num_sets(), 2);
    }

    #[test]
    fn merge_split_equals_one_shot() {
        let whole = coll(&[&[0, 1], &[0, 1, 2], &[1, 2, 3], &[2, 3]]);
        let left = SetCollection::from_raw(whole.ff_names().to_vec(), whole.raw()[..2].to_vec());
        let right = SetCollection::from_raw(whole.ff_names().to_vec(), whole.raw()[2..].to_vec());
        assert_eq!(merge_collections(&left, &right).unwrap(), whole);
    }

    #[test]
    fn merge_rejects_foreign_ff_space() {
        let a = coll(&[&[0]]);
        let b = SetCollection::empty(vec!["X".into()]);
        assert_eq!(merge_collections(&a, &b), Err(SetError::FfSpaceMismatch));
    }

    #[test]
    fn origins_are_traceable() {
        let c = coll(&[&[0], &[1], &[0]]);
        let o: Vec<_> = c.origins_of(&set(&[0])).collect();
        assert_eq!(o, vec![SetOrigin::Site(NetId(0)), SetOrigin::Site(NetId(2))]);
    }
}

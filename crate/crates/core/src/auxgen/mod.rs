//! Auxiliary rival-set generation.
//!
//! For every seed, its nearest entities in the static embedding space are
//! clustered together with the seeds themselves; clustering halts as soon as
//! a seed would join a non-seed cluster, so every surviving group is of a
//! different type than the seeds. Groups of different seeds are then merged
//! when they stand in the same offset relation to their seeds: translating
//! one group's centre by `v(e') - v(e)` must land among the other group.

pub mod hac;

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::EntityId;
use crate::embedding::{CentroidProvider, EmbeddingTable, Scope, Term};
use crate::error::{Error, Result};

pub use hac::{complete_linkage_with_seed_stop, euclidean, HacOutcome, Merge};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxConfig {
    /// Related terms retrieved per seed.
    pub k_related: usize,
    /// Size of the pseudo group retrieved around a translated centre.
    pub neighbors: usize,
    /// Keep at most this many auxiliary sets (largest first).
    pub max_sets: usize,
}

impl Default for AuxConfig {
    fn default() -> Self {
        AuxConfig {
            k_related: 10,
            neighbors: 15,
            max_sets: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialGroup {
    pub seed: EntityId,
    pub index: usize,
    pub members: Vec<EntityId>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRef {
    pub seed: EntityId,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxiliarySet {
    pub members: Vec<EntityId>,
    /// Initial groups merged into this set.
    pub provenance: Vec<GroupRef>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxiliarySets {
    pub sets: Vec<AuxiliarySet>,
    pub initial_groups: Vec<InitialGroup>,
}

impl AuxiliarySets {
    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn member_sets(&self) -> Vec<Vec<EntityId>> {
        self.sets.iter().map(|s| s.members.clone()).collect()
    }
}

/// Grows a small group into a larger one of the same type.
pub trait GroupExpander {
    fn expand(&self, group: &[EntityId]) -> Result<Vec<EntityId>>;
}

/// Leaves groups as they are.
pub struct NoExpansion;

impl GroupExpander for NoExpansion {
    fn expand(&self, group: &[EntityId]) -> Result<Vec<EntityId>> {
        Ok(group.to_vec())
    }
}

/// Cluster `related ∪ seeds` and return the groups of related terms formed
/// before the first seed/non-seed merge, singletons dropped.
pub fn hac_with_seed_stop(
    related: &[EntityId],
    seeds: &[EntityId],
    centroids: &CentroidProvider,
) -> Result<Vec<Vec<EntityId>>> {
    let items: Vec<EntityId> = related.iter().chain(seeds).copied().collect();
    let points = items
        .iter()
        .map(|&e| centroids.centroid(e).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>>>()?;
    let is_seed: Vec<bool> = (0..items.len()).map(|i| i >= related.len()).collect();
    let outcome = complete_linkage_with_seed_stop(&points, &is_seed);
    Ok(outcome
        .clusters
        .into_iter()
        .filter(|c| c.len() >= 2 && c.iter().all(|&i| !is_seed[i]))
        .map(|c| c.into_iter().map(|i| items[i]).collect())
        .collect())
}

/// Mean of the members' static vectors.
pub fn group_center(members: &[EntityId], table: &EmbeddingTable) -> Result<Vec<f64>> {
    if members.is_empty() {
        return Err(Error::Invariant("centre of an empty group".into()));
    }
    let mut center = vec![0.0; table.dim()];
    for &m in members {
        for (c, x) in center.iter_mut().zip(table.entity_vector(m)?) {
            *c += x;
        }
    }
    let n = members.len() as f64;
    center.iter_mut().for_each(|c| *c /= n);
    Ok(center)
}

/// `v(to) - v(from) + center`.
pub fn parallel_translate(
    center: &[f64],
    from: EntityId,
    to: EntityId,
    table: &EmbeddingTable,
) -> Result<Vec<f64>> {
    let vf = table.entity_vector(from)?;
    let vt = table.entity_vector(to)?;
    Ok(center
        .iter()
        .zip(vf)
        .zip(vt)
        .map(|((c, f), t)| t - f + c)
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpandedGroup {
    pub group: InitialGroup,
    pub expanded: Vec<EntityId>,
    pub center: Vec<f64>,
}

impl ExpandedGroup {
    pub fn new(
        group: InitialGroup,
        expander: &dyn GroupExpander,
        table: &EmbeddingTable,
    ) -> Result<Self> {
        let expanded = expander.expand(&group.members)?;
        let center = group_center(&expanded, table)?;
        Ok(ExpandedGroup {
            group,
            expanded,
            center,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergeDecision {
    pub merged: bool,
    pub overlap: usize,
    pub threshold: f64,
    pub pseudo_group: Vec<EntityId>,
}

/// Test whether group `gi` of seed `e` and group `gj` of seed `e'` hold the
/// same relation to their seeds. The expanded centre of `gi` is translated
/// by `v(e') - v(e)`; the `neighbors` entities nearest to that point (seeds
/// and members of `gi` excluded) must overlap `gj`'s expansion in at least
/// `sqrt(min(|gi expanded|, |gj expanded|))` entities.
pub fn try_merge(
    gi: &ExpandedGroup,
    gj: &ExpandedGroup,
    target: &[EntityId],
    table: &EmbeddingTable,
    neighbors: usize,
) -> Result<MergeDecision> {
    let translated = parallel_translate(&gi.center, gi.group.seed, gj.group.seed, table)?;
    let exclude: HashSet<EntityId> = target
        .iter()
        .chain(&gi.group.members)
        .copied()
        .collect();
    let pseudo_group: Vec<EntityId> = table
        .nearest_entities(&translated, neighbors, &exclude)
        .into_iter()
        .map(|(e, _)| e)
        .collect();
    let other: HashSet<EntityId> = gj.expanded.iter().copied().collect();
    let overlap = pseudo_group.iter().filter(|e| other.contains(e)).count();
    let threshold = (gi.expanded.len().min(gj.expanded.len()) as f64).sqrt();
    Ok(MergeDecision {
        merged: overlap as f64 >= threshold,
        overlap,
        threshold,
        pseudo_group,
    })
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller root wins so component ids follow group order
        if ra < rb {
            self.0[rb] = ra;
        } else if rb < ra {
            self.0[ra] = rb;
        }
    }
}

pub struct AuxGenerator<'a> {
    pub table: &'a EmbeddingTable,
    pub centroids: &'a CentroidProvider,
    pub expander: &'a dyn GroupExpander,
    pub config: AuxConfig,
}

impl AuxGenerator<'_> {
    /// Initial groups of one seed.
    pub fn initial_groups(&self, seed: EntityId, target: &[EntityId]) -> Result<Vec<InitialGroup>> {
        let exclude: HashSet<EntityId> = target.iter().copied().collect();
        let related: Vec<EntityId> = self
            .table
            .related_terms(seed, self.config.k_related, &exclude, Scope::Entities)?
            .into_iter()
            .filter_map(|(t, _)| match t {
                Term::Entity(e) => Some(e),
                Term::Word(_) => None,
            })
            .collect();
        if related.is_empty() {
            return Ok(Vec::new());
        }
        Ok(hac_with_seed_stop(&related, target, self.centroids)?
            .into_iter()
            .enumerate()
            .map(|(index, members)| InitialGroup {
                seed,
                index,
                members,
            })
            .collect())
    }

    pub fn generate(&self, target: &[EntityId]) -> Result<AuxiliarySets> {
        if target.len() < 2 {
            return Ok(AuxiliarySets::default());
        }
        let mut groups = Vec::new();
        for &seed in target {
            groups.extend(self.initial_groups(seed, target)?);
        }
        let expanded = groups
            .iter()
            .map(|g| ExpandedGroup::new(g.clone(), self.expander, self.table))
            .collect::<Result<Vec<_>>>()?;

        let mut uf = UnionFind::new(expanded.len());
        for (i, gi) in expanded.iter().enumerate() {
            for (j, gj) in expanded.iter().enumerate() {
                if gi.group.seed == gj.group.seed || uf.find(i) == uf.find(j) {
                    continue;
                }
                if try_merge(gi, gj, target, self.table, self.config.neighbors)?.merged {
                    uf.union(i, j);
                }
            }
        }

        // Components with at least two initial groups, in group order.
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut root_slot = vec![usize::MAX; expanded.len()];
        for i in 0..expanded.len() {
            let r = uf.find(i);
            if root_slot[r] == usize::MAX {
                root_slot[r] = components.len();
                components.push(Vec::new());
            }
            components[root_slot[r]].push(i);
        }
        components.retain(|c| c.len() >= 2);

        let target_set: HashSet<EntityId> = target.iter().copied().collect();
        let mut members: Vec<BTreeSet<EntityId>> = Vec::with_capacity(components.len());
        let mut centers = Vec::with_capacity(components.len());
        for comp in &components {
            let m: BTreeSet<EntityId> = comp
                .iter()
                .flat_map(|&g| expanded[g].group.members.iter().copied())
                .filter(|e| !target_set.contains(e))
                .collect();
            let reach: BTreeSet<EntityId> = comp
                .iter()
                .flat_map(|&g| expanded[g].expanded.iter().copied())
                .collect();
            let reach: Vec<EntityId> = reach.into_iter().collect();
            centers.push(group_center(&reach, self.table)?);
            members.push(m);
        }

        // An entity claimed by several sets goes to the cosine-nearest centre.
        let all: BTreeSet<EntityId> = members.iter().flatten().copied().collect();
        for e in all {
            let owners: Vec<usize> = (0..members.len()).filter(|&k| members[k].contains(&e)).collect();
            if owners.len() < 2 {
                continue;
            }
            let v = self.table.entity_vector(e)?;
            let mut best = owners[0];
            let mut best_sim = f64::NEG_INFINITY;
            for &k in &owners {
                let s = crate::embedding::cosine(v, &centers[k])?;
                if s > best_sim {
                    best = k;
                    best_sim = s;
                }
            }
            for &k in &owners {
                if k != best {
                    members[k].remove(&e);
                }
            }
        }

        let mut sets: Vec<AuxiliarySet> = components
            .iter()
            .zip(members)
            .filter(|(_, m)| m.len() >= 2)
            .map(|(comp, m)| AuxiliarySet {
                members: m.into_iter().collect(),
                provenance: comp
                    .iter()
                    .map(|&g| GroupRef {
                        seed: expanded[g].group.seed,
                        index: expanded[g].group.index,
                    })
                    .collect(),
            })
            .collect();
        if sets.len() > self.config.max_sets {
            let mut order: Vec<usize> = (0..sets.len()).collect();
            order.sort_by(|&a, &b| sets[b].members.len().cmp(&sets[a].members.len()).then(a.cmp(&b)));
            let mut keep: Vec<usize> = order[..self.config.max_sets].to_vec();
            keep.sort_unstable();
            let mut taken: Vec<Option<AuxiliarySet>> = sets.into_iter().map(Some).collect();
            sets = keep.into_iter().filter_map(|k| taken[k].take()).collect();
        }
        Ok(AuxiliarySets {
            sets,
            initial_groups: groups,
        })
    }
}

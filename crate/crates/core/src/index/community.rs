//! Offline community precomputation: one community per vertex, holding every
//! unit pattern within the community radius, plus the inverted
//! pattern-to-community map and per-type count maxima.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::geom::Point;
use crate::graph::{RoadGraph, VertexId};
use crate::index::artree::ARTree;
use crate::similarity::{group_by_type, ScoreVectors, TypeGroup};
use crate::unit_pattern::{PatternId, PatternType, UnitPattern};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Community {
    pub center: VertexId,
    pub radius: f64,
    /// Sorted ascending.
    pub patterns: Vec<PatternId>,
    /// Members grouped by type, sorted by type.
    pub groups: Vec<TypeGroup>,
}

impl Community {
    pub fn count(&self, t: PatternType) -> usize {
        self.groups
            .binary_search_by(|g| g.ptype.cmp(&t))
            .map_or(0, |i| self.groups[i].len())
    }

    pub fn group(&self, t: PatternType) -> Option<&TypeGroup> {
        self.groups
            .binary_search_by(|g| g.ptype.cmp(&t))
            .ok()
            .map(|i| &self.groups[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityStore {
    pub radius: f64,
    /// Indexed by center vertex id.
    pub communities: Vec<Community>,
    /// `inverted[p]`: centers of the communities containing pattern `p`, ascending.
    pub inverted: Vec<Vec<VertexId>>,
    pub max_count_per_type: BTreeMap<PatternType, usize>,
    /// `pattern_max_count[p]`: max of `|c_h|` (h = type of `p`) over the
    /// communities containing `p`.
    pub pattern_max_count: Vec<u32>,
}

impl CommunityStore {
    /// Assembles a store from per-vertex membership lists.
    pub fn from_members(
        members: Vec<Vec<PatternId>>,
        radius: f64,
        patterns: &[UnitPattern],
        vectors: &ScoreVectors,
    ) -> Self {
        let mut communities = Vec::with_capacity(members.len());
        let mut inverted = vec![Vec::new(); patterns.len()];
        for (v, mut ids) in members.into_iter().enumerate() {
            ids.sort_unstable();
            ids.dedup();
            for &p in &ids {
                inverted[p.index()].push(VertexId(v as u32));
            }
            let groups = group_by_type(ids.iter().copied(), patterns, vectors);
            communities.push(Community { center: VertexId(v as u32), radius, patterns: ids, groups });
        }
        let mut store = CommunityStore {
            radius,
            communities,
            inverted,
            max_count_per_type: BTreeMap::new(),
            pattern_max_count: vec![0; patterns.len()],
        };
        store.recount(patterns);
        store
    }

    fn recount(&mut self, patterns: &[UnitPattern]) {
        self.max_count_per_type.clear();
        for c in &self.communities {
            for g in &c.groups {
                let e = self.max_count_per_type.entry(g.ptype).or_insert(0);
                *e = (*e).max(g.len());
                for &p in &g.members {
                    let slot = &mut self.pattern_max_count[p.index()];
                    *slot = (*slot).max(g.len() as u32);
                }
            }
        }
        debug_assert!(patterns.len() == self.pattern_max_count.len());
    }

    pub fn get(&self, v: VertexId) -> &Community {
        &self.communities[v.index()]
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    pub fn max_count(&self, t: PatternType) -> usize {
        self.max_count_per_type.get(&t).copied().unwrap_or(0)
    }

    /// Rebuilds the per-type max vectors for a new scoring mode.
    pub fn set_scoring(&mut self, patterns: &[UnitPattern], vectors: &ScoreVectors) {
        for c in &mut self.communities {
            c.groups = group_by_type(c.patterns.iter().copied(), patterns, vectors);
        }
    }

    pub fn membership(&self) -> Vec<Vec<PatternId>> {
        self.communities.iter().map(|c| c.patterns.clone()).collect()
    }
}

/// One community per vertex of `g`, found with circle range queries on `tree`.
pub fn compute_communities(
    g: &RoadGraph,
    tree: &ARTree,
    patterns: &[UnitPattern],
    vectors: &ScoreVectors,
    r: f64,
) -> CommunityStore {
    let mut io = 0;
    let members: Vec<Vec<PatternId>> = g
        .vertices()
        .iter()
        .map(|v| tree.circle_range_query(g, patterns, &Point::new(v.x, v.y), r, &mut io))
        .collect();
    CommunityStore::from_members(members, r, patterns, vectors)
}

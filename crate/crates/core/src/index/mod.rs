//! The offline index: detected patterns, their aR-tree and the precomputed
//! community store, bundled with the scoring configuration.

pub mod artree;
pub mod community;

pub use artree::{mindist_point_pattern, ARTree, Node, NodeInfo, NodeKind, TreeStats, TypeSummary, DEFAULT_FANOUT};
pub use community::{compute_communities, Community, CommunityStore};

use serde::Serialize;

use crate::graph::RoadGraph;
use crate::similarity::{ScoreVectors, ScoringMode};
use crate::unit_pattern::{detect_unit_patterns, PatternError, UnitPattern};

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityIndex {
    pub graph: RoadGraph,
    pub patterns: Vec<UnitPattern>,
    pub tree: ARTree,
    pub store: CommunityStore,
    pub vectors: ScoreVectors,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexStats {
    pub vertices: usize,
    pub edges: usize,
    pub patterns: usize,
    pub pattern_types: std::collections::BTreeMap<String, usize>,
    pub radius: f64,
    pub scoring: ScoringMode,
    pub tree: TreeStats,
    pub mean_community_size: f64,
    pub max_count_per_type: std::collections::BTreeMap<String, usize>,
}

impl CommunityIndex {
    pub fn build(graph: RoadGraph, radius: f64, fanout: usize, mode: ScoringMode) -> Result<Self, PatternError> {
        let patterns = detect_unit_patterns(&graph)?;
        Ok(Self::from_patterns(graph, patterns, radius, fanout, mode))
    }

    pub fn from_patterns(
        graph: RoadGraph,
        patterns: Vec<UnitPattern>,
        radius: f64,
        fanout: usize,
        mode: ScoringMode,
    ) -> Self {
        let m = graph.poi_type_count();
        let vectors = ScoreVectors::build(&patterns, m, mode);
        let mut tree = ARTree::build(&patterns, m, &vectors, fanout);
        let store = compute_communities(&graph, &tree, &patterns, &vectors, radius);
        tree.set_community_counts(&patterns, &store.pattern_max_count);
        CommunityIndex { graph, patterns, tree, store, vectors }
    }

    pub fn mode(&self) -> ScoringMode {
        self.vectors.mode()
    }

    pub fn radius(&self) -> f64 {
        self.store.radius
    }

    /// Switches the scoring mode, recomputing every mode-dependent aggregate.
    pub fn set_scoring(&mut self, mode: ScoringMode) {
        if mode == self.mode() {
            return;
        }
        self.vectors = ScoreVectors::build(&self.patterns, self.graph.poi_type_count(), mode);
        self.tree.set_scoring(&self.patterns, &self.vectors);
        self.store.set_scoring(&self.patterns, &self.vectors);
    }

    pub fn stats(&self) -> IndexStats {
        let name = |t: &crate::unit_pattern::PatternType| t.to_string();
        let total: usize = self.store.communities.iter().map(|c| c.patterns.len()).sum();
        IndexStats {
            vertices: self.graph.vertex_count(),
            edges: self.graph.edge_count(),
            patterns: self.patterns.len(),
            pattern_types: crate::unit_pattern::type_histogram(&self.patterns)
                .iter()
                .map(|(t, c)| (name(t), *c))
                .collect(),
            radius: self.radius(),
            scoring: self.mode(),
            tree: self.tree.stats(),
            mean_community_size: total as f64 / self.store.len().max(1) as f64,
            max_count_per_type: self.store.max_count_per_type.iter().map(|(t, c)| (name(t), *c)).collect(),
        }
    }
}

//! Aggregate R-tree over unit-pattern MBRs, bulk loaded with
//! sort-tile-recursive packing. Every node carries `NodeInfo`: its MBR, the
//! POI-type presence bits and per-pattern-type summaries (count, element-wise
//! max POI vector, max community count, max scoring vector).

use std::ops::Range;

use serde::Serialize;

use crate::geom::{point_segment_dist, Mbr, Point};
use crate::graph::{PoiVec, RoadGraph};
use crate::similarity::{ScoreVectors, VectorLookup};
use crate::unit_pattern::{PatternId, PatternType, UnitPattern};

pub const DEFAULT_FANOUT: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct TypeSummary {
    pub ptype: PatternType,
    pub count: u32,
    pub vmax: PoiVec,
    /// Largest per-type community count of any descendant pattern.
    pub max_comm_count: u32,
    /// Element-wise max of the descendants' scoring vectors.
    pub score_max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeInfo {
    pub mbr: Mbr,
    pub arr: Vec<bool>,
    /// Sorted by pattern type.
    pub types: Vec<TypeSummary>,
}

impl NodeInfo {
    pub fn summary(&self, t: PatternType) -> Option<&TypeSummary> {
        self.types
            .binary_search_by(|s| s.ptype.cmp(&t))
            .ok()
            .map(|i| &self.types[i])
    }

    /// Row of the VMAX matrix for type `t` (zeros if absent).
    pub fn vmax(&self, t: PatternType) -> PoiVec {
        self.summary(t)
            .map(|s| s.vmax.clone())
            .unwrap_or_else(|| PoiVec::zeros(self.arr.len()))
    }

    fn merge(&mut self, other: &NodeInfo) {
        self.mbr = self.mbr.union(&other.mbr);
        for (a, b) in self.arr.iter_mut().zip(&other.arr) {
            *a |= *b;
        }
        for s in &other.types {
            match self.types.binary_search_by(|x| x.ptype.cmp(&s.ptype)) {
                Ok(i) => {
                    let t = &mut self.types[i];
                    t.count += s.count;
                    t.vmax.max_assign(&s.vmax);
                    t.max_comm_count = t.max_comm_count.max(s.max_comm_count);
                    for (a, b) in t.score_max.iter_mut().zip(&s.score_max) {
                        *a = a.max(*b);
                    }
                }
                Err(i) => self.types.insert(i, s.clone()),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf(Vec<PatternId>),
    Internal(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub info: NodeInfo,
    pub kind: NodeKind,
    /// 0 for leaves.
    pub level: u32,
    /// Range of this subtree's patterns in [`ARTree::leaf_order`].
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ARTree {
    nodes: Vec<Node>,
    root: usize,
    fanout: usize,
    order: Vec<PatternId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeStats {
    pub height: u32,
    pub node_count: usize,
    pub leaf_count: usize,
    pub pattern_count: usize,
    pub fanout: usize,
    /// Entry counts per level, root level first.
    pub entries_per_level: Vec<usize>,
}

/// Minimum distance from `p` to any member segment of `pattern`.
pub fn mindist_point_pattern(g: &RoadGraph, p: &Point, pattern: &UnitPattern) -> f64 {
    pattern
        .segments(g)
        .map(|(a, b)| point_segment_dist(p, &a, &b))
        .fold(f64::INFINITY, f64::min)
}

/// Sort-tile-recursive grouping of `items` (with their MBRs) into runs of at
/// most `fanout`.
fn str_pack<T: Copy>(mut items: Vec<(Mbr, T)>, fanout: usize, key: impl Fn(&T) -> u64) -> Vec<Vec<(Mbr, T)>> {
    let n = items.len();
    let leaves = n.div_ceil(fanout);
    let slices = (leaves as f64).sqrt().ceil().max(1.0) as usize;
    let per_slice = slices * fanout;
    let cx = |m: &Mbr| m.min_x + m.max_x;
    let cy = |m: &Mbr| m.min_y + m.max_y;
    items.sort_by(|a, b| cx(&a.0).total_cmp(&cx(&b.0)).then(key(&a.1).cmp(&key(&b.1))));
    let mut out = Vec::with_capacity(leaves);
    for chunk in items.chunks_mut(per_slice) {
        chunk.sort_by(|a, b| cy(&a.0).total_cmp(&cy(&b.0)).then(key(&a.1).cmp(&key(&b.1))));
        for run in chunk.chunks(fanout) {
            out.push(run.to_vec());
        }
    }
    out
}

impl ARTree {
    /// Bulk loads the tree. Community-count aggregates start at zero; see
    /// [`ARTree::set_community_counts`].
    pub fn build(patterns: &[UnitPattern], m: usize, vectors: &ScoreVectors, fanout: usize) -> ARTree {
        assert!(fanout >= 2, "fanout must be at least 2");
        let mut nodes: Vec<Node> = Vec::new();
        let mut order = Vec::with_capacity(patterns.len());

        let items: Vec<(Mbr, PatternId)> = patterns.iter().map(|p| (p.mbr, p.id)).collect();
        let mut level: Vec<(Mbr, usize)> = Vec::new();
        if items.is_empty() {
            nodes.push(Node {
                info: NodeInfo { mbr: Mbr::from_point(Point::new(0.0, 0.0)), arr: vec![false; m], types: Vec::new() },
                kind: NodeKind::Leaf(Vec::new()),
                level: 0,
                span: 0..0,
            });
            return ARTree { nodes, root: 0, fanout, order };
        }
        for run in str_pack(items, fanout, |id| id.0 as u64) {
            let ids: Vec<PatternId> = run.iter().map(|r| r.1).collect();
            let start = order.len();
            order.extend_from_slice(&ids);
            let info = leaf_info(&ids, patterns, m, vectors);
            level.push((info.mbr, nodes.len()));
            nodes.push(Node { info, kind: NodeKind::Leaf(ids), level: 0, span: start..order.len() });
        }
        let mut height = 0;
        while level.len() > 1 {
            height += 1;
            let mut next = Vec::new();
            for run in str_pack(level, fanout, |&i| i as u64) {
                let children: Vec<usize> = run.iter().map(|r| r.1).collect();
                let mut info = nodes[children[0]].info.clone();
                for &c in &children[1..] {
                    let ci = nodes[c].info.clone();
                    info.merge(&ci);
                }
                next.push((info.mbr, nodes.len()));
                nodes.push(Node { info, kind: NodeKind::Internal(children), level: height, span: 0..0 });
            }
            level = next;
        }
        let root = level[0].1;
        let mut tree = ARTree { nodes, root, fanout, order: Vec::new() };
        tree.relayout();
        tree
    }

    /// Recomputes `order` and each node's `span` by a depth-first walk.
    fn relayout(&mut self) {
        let mut order = Vec::new();
        fn walk(nodes: &mut [Node], i: usize, order: &mut Vec<PatternId>) {
            let start = order.len();
            match nodes[i].kind.clone() {
                NodeKind::Leaf(ids) => order.extend(ids),
                NodeKind::Internal(ch) => {
                    for c in ch {
                        walk(nodes, c, order);
                    }
                }
            }
            nodes[i].span = start..order.len();
        }
        walk(&mut self.nodes, self.root, &mut order);
        self.order = order;
    }

    pub fn from_raw(nodes: Vec<Node>, root: usize, fanout: usize) -> ARTree {
        let mut t = ARTree { nodes, root, fanout, order: Vec::new() };
        t.relayout();
        t
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn fanout(&self) -> usize {
        self.fanout
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn height(&self) -> u32 {
        self.nodes[self.root].level + 1
    }

    pub fn leaf_order(&self) -> &[PatternId] {
        &self.order
    }

    /// Patterns of the subtree rooted at `i`.
    pub fn subtree_patterns(&self, i: usize) -> &[PatternId] {
        &self.order[self.nodes[i].span.clone()]
    }

    /// Refreshes score-vector maxima after a scoring-mode change.
    pub fn set_scoring(&mut self, patterns: &[UnitPattern], vectors: &ScoreVectors) {
        self.refresh_leaves(|info, ids| {
            for s in info.types.iter_mut() {
                s.score_max.iter_mut().for_each(|x| *x = 0.0);
            }
            for &id in ids {
                let s = summary_mut(info, patterns[id.index()].ptype);
                for (a, b) in s.score_max.iter_mut().zip(vectors.vector(id)) {
                    *a = a.max(*b);
                }
            }
        });
    }

    /// Stores, per node and type, the largest per-type community count among
    /// descendant patterns. `counts[p]` is that count for pattern `p`.
    pub fn set_community_counts(&mut self, patterns: &[UnitPattern], counts: &[u32]) {
        self.refresh_leaves(|info, ids| {
            for s in info.types.iter_mut() {
                s.max_comm_count = 0;
            }
            for &id in ids {
                let s = summary_mut(info, patterns[id.index()].ptype);
                s.max_comm_count = s.max_comm_count.max(counts[id.index()]);
            }
        });
    }

    fn refresh_leaves(&mut self, mut fix: impl FnMut(&mut NodeInfo, &[PatternId])) {
        for n in self.nodes.iter_mut() {
            if let NodeKind::Leaf(ids) = &n.kind {
                fix(&mut n.info, ids);
            }
        }
        if !self.nodes[self.root].span.is_empty() {
            self.reaggregate(self.root);
        }
    }

    fn reaggregate(&mut self, i: usize) -> NodeInfo {
        let children = match &self.nodes[i].kind {
            NodeKind::Leaf(_) => return self.nodes[i].info.clone(),
            NodeKind::Internal(ch) => ch.clone(),
        };
        let mut info = self.reaggregate(children[0]);
        for &c in &children[1..] {
            let ci = self.reaggregate(c);
            info.merge(&ci);
        }
        self.nodes[i].info = info.clone();
        info
    }

    /// Patterns whose geometry meets the closed disc `(center, r)`. Adds one
    /// to `io` per node touched; a subtree fully inside the disc costs one
    /// access and is reported without descent.
    pub fn circle_range_query(
        &self,
        g: &RoadGraph,
        patterns: &[UnitPattern],
        center: &Point,
        r: f64,
        io: &mut u64,
    ) -> Vec<PatternId> {
        let mut out = Vec::new();
        let root = &self.nodes[self.root];
        if root.span.is_empty() || root.info.mbr.mindist(center) > r {
            *io += 1;
            return out;
        }
        let mut stack = vec![self.root];
        while let Some(i) = stack.pop() {
            *io += 1;
            let node = &self.nodes[i];
            match &node.kind {
                NodeKind::Leaf(ids) => {
                    for &id in ids {
                        let p = &patterns[id.index()];
                        if p.mbr.mindist(center) <= r && mindist_point_pattern(g, center, p) <= r {
                            out.push(id);
                        }
                    }
                }
                NodeKind::Internal(children) => {
                    for &c in children {
                        let m = &self.nodes[c].info.mbr;
                        if m.mindist(center) > r {
                            continue;
                        }
                        if m.maxdist(center) <= r {
                            *io += 1;
                            out.extend_from_slice(self.subtree_patterns(c));
                        } else {
                            stack.push(c);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Patterns with some member segment within `r` of segment `ab`.
    pub fn segment_range_query(
        &self,
        g: &RoadGraph,
        patterns: &[UnitPattern],
        a: &Point,
        b: &Point,
        r: f64,
        io: &mut u64,
    ) -> Vec<PatternId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(i) = stack.pop() {
            *io += 1;
            let node = &self.nodes[i];
            if node.info.mbr.segment_dist(a, b) > r {
                continue;
            }
            match &node.kind {
                NodeKind::Leaf(ids) => {
                    for &id in ids {
                        let p = &patterns[id.index()];
                        if p.mbr.segment_dist(a, b) > r {
                            continue;
                        }
                        let hit = p
                            .segments(g)
                            .any(|(p0, p1)| crate::geom::segment_segment_dist(a, b, &p0, &p1) <= r);
                        if hit {
                            out.push(id);
                        }
                    }
                }
                NodeKind::Internal(children) => stack.extend(children.iter().copied()),
            }
        }
        out.sort_unstable();
        out
    }

    pub fn stats(&self) -> TreeStats {
        let height = self.height();
        let mut entries_per_level = vec![0; height as usize];
        let mut leaf_count = 0;
        for n in &self.nodes {
            let depth = (height - 1 - n.level) as usize;
            entries_per_level[depth] += match &n.kind {
                NodeKind::Leaf(ids) => {
                    leaf_count += 1;
                    ids.len()
                }
                NodeKind::Internal(ch) => ch.len(),
            };
        }
        TreeStats {
            height,
            node_count: self.nodes.len(),
            leaf_count,
            pattern_count: self.order.len(),
            fanout: self.fanout,
            entries_per_level,
        }
    }
}

fn summary_mut(info: &mut NodeInfo, t: PatternType) -> &mut TypeSummary {
    let i = info
        .types
        .binary_search_by(|s| s.ptype.cmp(&t))
        .expect("leaf summary covers every member type");
    &mut info.types[i]
}

fn leaf_info(ids: &[PatternId], patterns: &[UnitPattern], m: usize, vectors: &ScoreVectors) -> NodeInfo {
    let mut info = NodeInfo {
        mbr: patterns[ids[0].index()].mbr,
        arr: vec![false; m],
        types: Vec::new(),
    };
    for &id in ids {
        let p = &patterns[id.index()];
        let single = NodeInfo {
            mbr: p.mbr,
            arr: p.vec.0.iter().map(|&c| c > 0).collect(),
            types: vec![TypeSummary {
                ptype: p.ptype,
                count: 1,
                vmax: p.vec.clone(),
                max_comm_count: 0,
                score_max: vectors.vector(id).to_vec(),
            }],
        };
        info.merge(&single);
    }
    info
}

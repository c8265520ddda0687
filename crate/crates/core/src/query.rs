//! Online top-k community similarity search and its brute-force baseline.
//!
//! Candidate communities are examined nearest first, so once `k` answers are
//! held the next candidate ends the search. The default strategy walks the
//! aR-tree best-first by distance to `v_q`, discovering candidate
//! communities through the pattern-to-community map and releasing one only
//! when no undiscovered community can be nearer. The exhaustive strategy
//! retrieves every candidate pattern first and sorts the assembled list.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point;
use crate::graph::VertexId;
use crate::index::{CommunityIndex, NodeKind};
use crate::similarity::{
    clearly_below, community_sim, distance_prune, dot, group_by_type, groups_ub, groups_ub_literal, score_upper_bound_prune,
    QueryCommunity, TypeGroup, VectorLookup,
};
use crate::unit_pattern::{PatternId, PatternType};

#[derive(Debug, Error, PartialEq)]
pub enum QueryError {
    #[error("no unit pattern within {radius} of ({x}, {y})")]
    EmptyQuery { x: f64, y: f64, radius: f64 },
    #[error("unknown vertex {0}")]
    UnknownVertex(u32),
    #[error("invalid query: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    BestFirst,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    #[default]
    Corrected,
    Literal,
}

/// How the per-pattern retrieval threshold bounds `|c_h|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountBound {
    /// Max `|c_h|` over the communities containing the pattern itself.
    #[default]
    PerPattern,
    /// Max `|c_h|` over all communities.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SearchOptions {
    pub strategy: Strategy,
    pub bound: BoundKind,
    pub count_bound: CountBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub center: VertexId,
    pub score: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QueryStats {
    pub candidates_generated: u64,
    pub accepted: u64,
    pub pruned_by_ub: u64,
    pub pruned_by_exact: u64,
    pub pruned_by_distance: u64,
    pub io_count: u64,
    pub wall_time_ms: f64,
}

impl QueryStats {
    /// Share of candidates discarded without an exact score.
    pub fn pruning_power(&self) -> f64 {
        if self.candidates_generated == 0 {
            return 0.0;
        }
        (self.pruned_by_ub + self.pruned_by_distance) as f64 / self.candidates_generated as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKResult {
    pub entries: Vec<Entry>,
    pub stats: QueryStats,
}

impl TopKResult {
    pub fn empty() -> Self {
        TopKResult { entries: Vec::new(), stats: QueryStats::default() }
    }

    pub fn centers(&self) -> Vec<VertexId> {
        self.entries.iter().map(|e| e.center).collect()
    }
}

/// Query center given either as coordinates or as a vertex id.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CenterSpec {
    Point([f64; 2]),
    Vertex(u32),
}

/// Query specification as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub center: CenterSpec,
    pub radius: f64,
    pub k: usize,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_q: Option<[f64; 2]>,
}

impl CenterSpec {
    pub fn resolve(&self, idx: &CommunityIndex) -> Result<Point, QueryError> {
        match *self {
            CenterSpec::Point([x, y]) => Ok(Point::new(x, y)),
            CenterSpec::Vertex(v) => {
                if v as usize >= idx.graph.vertex_count() {
                    return Err(QueryError::UnknownVertex(v));
                }
                Ok(idx.graph.pos(VertexId(v)))
            }
        }
    }
}

pub(crate) fn check_params(k: usize, theta: f64, r: f64) -> Result<(), QueryError> {
    if k == 0 {
        return Err(QueryError::Invalid("k must be at least 1".into()));
    }
    if !theta.is_finite() {
        return Err(QueryError::Invalid(format!("theta must be finite, got {theta}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(QueryError::Invalid(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

/// Query community built from a known pattern set.
pub fn query_from_patterns(
    idx: &CommunityIndex,
    center: Point,
    r: f64,
    ids: impl IntoIterator<Item = PatternId>,
) -> QueryCommunity {
    QueryCommunity { center, radius: r, groups: group_by_type(ids, &idx.patterns, &idx.vectors) }
}

/// Unit patterns meeting the disc `(center, r)`, found through the index.
pub fn extract_query_community(
    idx: &CommunityIndex,
    center: Point,
    r: f64,
    io: &mut u64,
) -> Result<QueryCommunity, QueryError> {
    if !(r > 0.0) {
        return Err(QueryError::Invalid(format!("radius must be positive, got {r}")));
    }
    let ids = idx.tree.circle_range_query(&idx.graph, &idx.patterns, &center, r, io);
    if ids.is_empty() {
        return Err(QueryError::EmptyQuery { x: center.x, y: center.y, radius: r });
    }
    Ok(query_from_patterns(idx, center, r, ids))
}

/// Same as [`extract_query_community`] by linear scan over all patterns.
pub fn extract_query_community_scan(idx: &CommunityIndex, center: Point, r: f64) -> Result<QueryCommunity, QueryError> {
    if !(r > 0.0) {
        return Err(QueryError::Invalid(format!("radius must be positive, got {r}")));
    }
    let ids: Vec<PatternId> = idx
        .patterns
        .iter()
        .filter(|p| crate::index::mindist_point_pattern(&idx.graph, &center, p) <= r)
        .map(|p| p.id)
        .collect();
    if ids.is_empty() {
        return Err(QueryError::EmptyQuery { x: center.x, y: center.y, radius: r });
    }
    Ok(query_from_patterns(idx, center, r, ids))
}

/// Retrieval test for one query type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Keep patterns whose summed similarity is at least `t`.
    Fixed(f64),
    /// Keep pattern `p` when its summed similarity reaches
    /// `theta * q_count / maxc(p)`.
    Scaled { theta: f64, q_count: usize, count_bound: CountBound },
}

#[derive(Debug, Clone)]
struct TypePlan {
    ptype: PatternType,
    q_sum: Vec<f64>,
    threshold: Threshold,
    global_max: u32,
}

impl TypePlan {
    fn new(idx: &CommunityIndex, ptype: PatternType, q_sum: Vec<f64>, threshold: Threshold) -> Self {
        TypePlan { ptype, q_sum, threshold, global_max: idx.store.max_count(ptype) as u32 }
    }

    fn from_group(idx: &CommunityIndex, g: &TypeGroup, theta: f64, count_bound: CountBound) -> Self {
        let threshold = Threshold::Scaled { theta, q_count: g.len(), count_bound };
        TypePlan::new(idx, g.ptype, g.sum(&idx.vectors), threshold)
    }

    fn passes(&self, score: f64, count: u32) -> bool {
        match self.threshold {
            Threshold::Fixed(t) => score >= t,
            Threshold::Scaled { theta, q_count, count_bound } => {
                let c = match count_bound {
                    CountBound::PerPattern => count,
                    CountBound::Global => self.global_max,
                };
                c > 0 && !clearly_below(score * c as f64, theta * q_count as f64)
            }
        }
    }

    fn pattern_passes(&self, idx: &CommunityIndex, p: PatternId) -> bool {
        idx.patterns[p.index()].ptype == self.ptype
            && self.passes(dot(idx.vectors.vector(p), &self.q_sum), idx.store.pattern_max_count[p.index()])
    }

    fn node_passes(&self, idx: &CommunityIndex, node: usize) -> bool {
        let Some(s) = idx.tree.node(node).info.summary(self.ptype) else { return false };
        self.passes(dot(&s.score_max, &self.q_sum), s.max_comm_count)
    }
}

fn retrieve_with_plan(idx: &CommunityIndex, plan: &TypePlan, io: &mut u64) -> Vec<PatternId> {
    let mut out = Vec::new();
    let mut stack = vec![idx.tree.root()];
    while let Some(i) = stack.pop() {
        *io += 1;
        if !plan.node_passes(idx, i) {
            continue;
        }
        match &idx.tree.node(i).kind {
            NodeKind::Leaf(ids) => out.extend(ids.iter().copied().filter(|&p| plan.pattern_passes(idx, p))),
            NodeKind::Internal(ch) => stack.extend(ch.iter().copied()),
        }
    }
    out.sort_unstable();
    out
}

/// Type-`ptype` patterns whose summed similarity to the query patterns `q_h`
/// passes `threshold`, found by pruned index traversal.
pub fn retrieve_candidates(
    idx: &CommunityIndex,
    ptype: PatternType,
    q_h: &[PatternId],
    threshold: Threshold,
    io: &mut u64,
) -> Vec<PatternId> {
    let mut q_sum = vec![0.0; idx.vectors.dim()];
    for &q in q_h {
        for (a, b) in q_sum.iter_mut().zip(idx.vectors.vector(q)) {
            *a += b;
        }
    }
    retrieve_with_plan(idx, &TypePlan::new(idx, ptype, q_sum, threshold), io)
}

/// Communities containing any of `cands`, nearest to `v_q` first (ties by id).
pub fn assemble_candidates(idx: &CommunityIndex, cands: &[PatternId], v_q: Point) -> Vec<(f64, VertexId)> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &p in cands {
        for &v in &idx.store.inverted[p.index()] {
            if seen.insert(v) {
                out.push((v_q.dist(&idx.graph.pos(v)), v));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    out
}

/// Score source for the pruning cascade.
pub trait CommunityScorer {
    fn upper_bound(&self, v: VertexId) -> f64;
    fn score(&self, v: VertexId) -> f64;
}

struct IndexScorer<'a> {
    idx: &'a CommunityIndex,
    q: &'a QueryCommunity,
    bound: BoundKind,
}

impl CommunityScorer for IndexScorer<'_> {
    fn upper_bound(&self, v: VertexId) -> f64 {
        let c = self.idx.store.get(v);
        match self.bound {
            BoundKind::Corrected => groups_ub(&c.groups, &self.q.groups),
            BoundKind::Literal => groups_ub_literal(&c.groups, &self.q.groups),
        }
    }

    fn score(&self, v: VertexId) -> f64 {
        community_sim(self.idx.store.get(v), self.q, &self.idx.vectors).unwrap_or(0.0)
    }
}

/// Applies the pruning cascade to candidates offered in ascending distance.
struct Collector<S> {
    scorer: S,
    k: usize,
    theta: f64,
    entries: Vec<Entry>,
    stats: QueryStats,
}

impl<S: CommunityScorer> Collector<S> {
    fn new(scorer: S, k: usize, theta: f64) -> Self {
        Collector { scorer, k, theta, entries: Vec::new(), stats: QueryStats::default() }
    }

    fn full(&self) -> bool {
        self.entries.len() >= self.k
    }

    fn kth_distance(&self) -> f64 {
        if self.full() {
            self.entries[self.k - 1].distance
        } else {
            f64::INFINITY
        }
    }

    /// Returns false when the search should stop (this candidate included
    /// in the distance-pruned count).
    fn offer(&mut self, d: f64, v: VertexId) -> bool {
        if self.full() && distance_prune(d, self.kth_distance()) {
            self.stats.pruned_by_distance += 1;
            return false;
        }
        if score_upper_bound_prune(self.scorer.upper_bound(v), self.theta) {
            self.stats.pruned_by_ub += 1;
            return true;
        }
        let s = self.scorer.score(v);
        if s < self.theta {
            self.stats.pruned_by_exact += 1;
            return true;
        }
        self.stats.accepted += 1;
        self.entries.push(Entry { center: v, score: s, distance: d });
        true
    }

    fn finish(mut self, candidates: u64, io: u64) -> TopKResult {
        self.stats.candidates_generated = candidates;
        self.stats.io_count = io;
        TopKResult { entries: self.entries, stats: self.stats }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, u32);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Slack absorbing rounding in the triangle-inequality release test.
const RELEASE_SLACK: f64 = 1e-9;

fn plans_for(idx: &CommunityIndex, q: &QueryCommunity, theta: f64, cb: CountBound) -> Vec<TypePlan> {
    q.groups.iter().map(|g| TypePlan::from_group(idx, g, theta, cb)).collect()
}

/// Top-k communities nearest to `v_q` with similarity at least `theta` to `q`.
pub fn topk_search(
    idx: &CommunityIndex,
    q: &QueryCommunity,
    v_q: Point,
    k: usize,
    theta: f64,
    opts: SearchOptions,
) -> TopKResult {
    let start = Instant::now();
    let plans = plans_for(idx, q, theta, opts.count_bound);
    let mut res = match opts.strategy {
        Strategy::BestFirst => best_first(idx, q, &plans, v_q, k, theta, opts.bound),
        Strategy::Exhaustive => {
            let mut io = 0;
            let mut cands = Vec::new();
            for plan in &plans {
                cands.extend(retrieve_with_plan(idx, plan, &mut io));
            }
            let list = assemble_candidates(idx, &cands, v_q);
            run_list(idx, q, &list, k, theta, opts.bound, io)
        }
    };
    res.stats.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    res
}

/// Runs the pruning cascade over an ascending candidate list.
pub(crate) fn run_list(
    idx: &CommunityIndex,
    q: &QueryCommunity,
    list: &[(f64, VertexId)],
    k: usize,
    theta: f64,
    bound: BoundKind,
    io: u64,
) -> TopKResult {
    let mut res = rank_candidates(list, k, theta, IndexScorer { idx, q, bound });
    res.stats.io_count = io;
    res
}

/// Pruning cascade over `(distance, center)` pairs sorted ascending.
pub fn rank_candidates(list: &[(f64, VertexId)], k: usize, theta: f64, scorer: impl CommunityScorer) -> TopKResult {
    let mut col = Collector::new(scorer, k, theta);
    for (i, &(d, v)) in list.iter().enumerate() {
        if !col.offer(d, v) {
            col.stats.pruned_by_distance += (list.len() - i - 1) as u64;
            break;
        }
    }
    col.finish(list.len() as u64, 0)
}

fn best_first(
    idx: &CommunityIndex,
    q: &QueryCommunity,
    plans: &[TypePlan],
    v_q: Point,
    k: usize,
    theta: f64,
    bound: BoundKind,
) -> TopKResult {
    let r = idx.radius();
    let tree = &idx.tree;
    let mut io = 0u64;
    let mut col = Collector::new(IndexScorer { idx, q, bound }, k, theta);
    let mut nodes: BinaryHeap<Reverse<Key>> = BinaryHeap::new();
    let mut comms: BinaryHeap<Reverse<Key>> = BinaryHeap::new();
    let mut seen: HashSet<VertexId> = HashSet::new();
    let root = tree.root();
    nodes.push(Reverse(Key(tree.node(root).info.mbr.mindist(&v_q), root as u32)));

    loop {
        // undiscovered communities lie at least `frontier - r` from v_q
        let frontier = nodes.peek().map_or(f64::INFINITY, |n| n.0 .0);
        let release = frontier - r - RELEASE_SLACK;
        if let Some(&Reverse(Key(d, v))) = comms.peek() {
            if d < release {
                comms.pop();
                if !col.offer(d, VertexId(v)) {
                    col.stats.pruned_by_distance += comms.len() as u64;
                    break;
                }
                continue;
            }
        }
        if col.full() && col.kth_distance() <= release {
            col.stats.pruned_by_distance += comms.len() as u64;
            break;
        }
        // with no nodes left every discovered community is released above
        let Some(Reverse(Key(_, ni))) = nodes.pop() else { break };
        let ni = ni as usize;
        io += 1;
        if !plans.iter().any(|p| p.node_passes(idx, ni)) {
            continue;
        }
        match &tree.node(ni).kind {
            NodeKind::Leaf(ids) => {
                for &p in ids {
                    if !plans.iter().any(|pl| pl.pattern_passes(idx, p)) {
                        continue;
                    }
                    for &v in &idx.store.inverted[p.index()] {
                        if seen.insert(v) {
                            comms.push(Reverse(Key(v_q.dist(&idx.graph.pos(v)), v.0)));
                        }
                    }
                }
            }
            NodeKind::Internal(ch) => {
                for &c in ch {
                    nodes.push(Reverse(Key(tree.node(c).info.mbr.mindist(&v_q), c as u32)));
                }
            }
        }
    }
    let discovered = seen.len() as u64;
    col.finish(discovered, io)
}

/// Exact answer by scoring every community; no index, no pruning.
pub fn baseline_topk(idx: &CommunityIndex, q: &QueryCommunity, v_q: Point, k: usize, theta: f64) -> TopKResult {
    let start = Instant::now();
    let mut qualifying: Vec<Entry> = Vec::new();
    for c in &idx.store.communities {
        let s = community_sim(c, q, &idx.vectors).unwrap_or(0.0);
        if s >= theta {
            qualifying.push(Entry { center: c.center, score: s, distance: v_q.dist(&idx.graph.pos(c.center)) });
        }
    }
    qualifying.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.center.cmp(&b.center)));
    qualifying.truncate(k);
    let n = idx.store.len() as u64;
    let stats = QueryStats {
        candidates_generated: n,
        accepted: qualifying.len() as u64,
        pruned_by_exact: n - qualifying.len() as u64,
        io_count: idx.tree.node_count() as u64,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        ..QueryStats::default()
    };
    TopKResult { entries: qualifying, stats }
}

/// Full online pipeline for one query: extract `Q`, then search.
pub fn answer_topk(
    idx: &CommunityIndex,
    center: Point,
    r: f64,
    v_q: Option<Point>,
    k: usize,
    theta: f64,
    opts: SearchOptions,
) -> Result<TopKResult, QueryError> {
    check_params(k, theta, r)?;
    let start = Instant::now();
    let mut io = 0;
    let q = extract_query_community(idx, center, r, &mut io)?;
    let mut res = topk_search(idx, &q, v_q.unwrap_or(center), k, theta, opts);
    res.stats.io_count += io;
    res.stats.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(res)
}

/// Baseline counterpart of [`answer_topk`], extracting `Q` by scanning.
pub fn answer_baseline(
    idx: &CommunityIndex,
    center: Point,
    r: f64,
    v_q: Option<Point>,
    k: usize,
    theta: f64,
) -> Result<TopKResult, QueryError> {
    check_params(k, theta, r)?;
    let start = Instant::now();
    let q = extract_query_community_scan(idx, center, r)?;
    let mut res = baseline_topk(idx, &q, v_q.unwrap_or(center), k, theta);
    res.stats.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(res)
}

/// Qualifying communities holding no pattern that passes the retrieval
/// threshold, i.e. answers the candidate filter would miss.
pub fn recall_misses(idx: &CommunityIndex, q: &QueryCommunity, theta: f64, cb: CountBound) -> Vec<VertexId> {
    let plans = plans_for(idx, q, theta, cb);
    idx.store
        .communities
        .iter()
        .filter(|c| community_sim(c, q, &idx.vectors).unwrap_or(0.0) >= theta)
        .filter(|c| !c.patterns.iter().any(|&p| plans.iter().any(|pl| pl.pattern_passes(idx, p))))
        .map(|c| c.center)
        .collect()
}

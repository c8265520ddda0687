//! Continuous queries: the query disc slides along a segment `L`. We find
//! the positions where the set of patterns under the disc changes, maintain
//! that set incrementally across the resulting intervals, and answer top-k
//! per interval after a single batched candidate retrieval.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{line_capsule_span, line_disc_span, Point, Span};
use crate::index::CommunityIndex;
use crate::query::{
    assemble_candidates, baseline_topk, check_params, extract_query_community, query_from_patterns, retrieve_candidates,
    run_list, CountBound, QueryError, SearchOptions, Threshold, TopKResult,
};
use crate::similarity::{clearly_below, dot, VectorLookup};
use crate::unit_pattern::PatternId;

/// Event positions closer than this in `t` are treated as one.
pub const T_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuerySegment {
    pub q_st: Point,
    pub q_ed: Point,
    pub r: f64,
}

impl QuerySegment {
    pub fn at(&self, t: f64) -> Point {
        self.q_st.lerp(&self.q_ed, t)
    }

    pub fn midpoint(&self) -> Point {
        self.at(0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Enter,
    Leave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitEvent {
    pub t: f64,
    pub kind: EventKind,
    pub pattern: PatternId,
}

impl SplitEvent {
    pub fn point(&self, seg: &QuerySegment) -> Point {
        seg.at(self.t)
    }
}

/// How a pattern's active interval on `L` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitGeometry {
    /// Exact distance to each member segment.
    #[default]
    PerEdge,
    /// Circles around the pattern's vertices only.
    PerVertex,
}

#[derive(Debug, Error, PartialEq)]
pub enum ContinuousError {
    #[error("leave event at t={t} for pattern {pattern} which is not active")]
    LeaveWithoutEnter { t: f64, pattern: PatternId },
    #[error("query segment endpoints coincide")]
    DegenerateSegment,
    #[error(transparent)]
    Query(#[from] QueryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalResult {
    pub interval: [f64; 2],
    pub active_patterns: Vec<PatternId>,
    pub result: TopKResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousResult {
    pub intervals: Vec<IntervalResult>,
    /// Node accesses of the shared split-point and retrieval phase.
    pub shared_io: u64,
    pub wall_time_ms: f64,
}

fn union_spans(mut spans: Vec<Span>) -> Vec<Span> {
    spans.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<Span> = Vec::new();
    for s in spans {
        match out.last_mut() {
            Some(cur) if s.0 <= cur.1 + T_EPS => cur.1 = cur.1.max(s.1),
            _ => out.push(s),
        }
    }
    out
}

/// Active `t`-intervals of one pattern, clamped to `[0, 1]`.
pub fn pattern_spans(idx: &CommunityIndex, seg: &QuerySegment, p: PatternId, geometry: SplitGeometry) -> Vec<Span> {
    let pat = &idx.patterns[p.index()];
    let (a, b, r) = (seg.q_st, seg.q_ed, seg.r);
    let raw: Vec<Option<Span>> = match geometry {
        SplitGeometry::PerEdge => pat.segments(&idx.graph).map(|(p0, p1)| line_capsule_span(&a, &b, &p0, &p1, r)).collect(),
        SplitGeometry::PerVertex => pat.cycle.iter().map(|&v| line_disc_span(&a, &b, &idx.graph.pos(v), r)).collect(),
    };
    let clamped = raw
        .into_iter()
        .flatten()
        .filter_map(|(lo, hi)| {
            let (lo, hi) = (lo.max(0.0), hi.min(1.0));
            (lo <= hi).then_some((lo, hi))
        })
        .collect();
    union_spans(clamped)
}

/// Enter/leave events of every pattern whose active set on `L` is non-empty,
/// sorted by `t`, then kind (enter first), then pattern.
pub fn find_split_points(
    idx: &CommunityIndex,
    seg: &QuerySegment,
    geometry: SplitGeometry,
    io: &mut u64,
) -> Vec<SplitEvent> {
    let near = idx.tree.segment_range_query(&idx.graph, &idx.patterns, &seg.q_st, &seg.q_ed, seg.r, io);
    let mut events = Vec::new();
    for p in near {
        for (lo, hi) in pattern_spans(idx, seg, p, geometry) {
            events.push(SplitEvent { t: lo, kind: EventKind::Enter, pattern: p });
            events.push(SplitEvent { t: hi, kind: EventKind::Leave, pattern: p });
        }
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.kind.cmp(&b.kind)).then(a.pattern.cmp(&b.pattern)));
    events
}

/// Walks the events from `t = 0`, producing one `(interval, U_i)` per gap
/// between consecutive event positions. Events at one position apply enters
/// first, then leaves.
pub fn sweep_pattern_sets(
    events: &[SplitEvent],
    u0: &BTreeSet<PatternId>,
) -> Result<Vec<(Span, BTreeSet<PatternId>)>, ContinuousError> {
    let mut groups: Vec<(f64, Vec<SplitEvent>)> = Vec::new();
    for e in events {
        match groups.last_mut() {
            Some((t, g)) if e.t - *t <= T_EPS => g.push(*e),
            _ => groups.push((e.t, vec![*e])),
        }
    }
    let apply = |cur: &mut BTreeSet<PatternId>, g: &[SplitEvent]| -> Result<(), ContinuousError> {
        for e in g.iter().filter(|e| e.kind == EventKind::Enter) {
            cur.insert(e.pattern);
        }
        for e in g.iter().filter(|e| e.kind == EventKind::Leave) {
            if !cur.remove(&e.pattern) {
                return Err(ContinuousError::LeaveWithoutEnter { t: e.t, pattern: e.pattern });
            }
        }
        Ok(())
    };
    let mut cur = u0.clone();
    let mut out = Vec::new();
    let mut last = 0.0;
    for (t, g) in &groups {
        if *t <= T_EPS {
            apply(&mut cur, g)?;
            continue;
        }
        if *t >= 1.0 - T_EPS {
            out.push(((last, 1.0), cur.clone()));
            last = 1.0;
            apply(&mut cur, g)?;
            continue;
        }
        out.push(((last, *t), cur.clone()));
        last = *t;
        apply(&mut cur, g)?;
    }
    if last < 1.0 {
        out.push(((last, 1.0), cur));
    }
    Ok(out)
}

/// Split points and per-interval pattern sets of `seg`.
pub fn interval_sets(
    idx: &CommunityIndex,
    seg: &QuerySegment,
    geometry: SplitGeometry,
    io: &mut u64,
) -> Result<Vec<(Span, BTreeSet<PatternId>)>, ContinuousError> {
    if seg.q_st == seg.q_ed {
        return Err(ContinuousError::DegenerateSegment);
    }
    let events = find_split_points(idx, seg, geometry, io);
    let u0: BTreeSet<PatternId> = match extract_query_community(idx, seg.q_st, seg.r, io) {
        Ok(q) => q.pattern_ids().collect(),
        Err(QueryError::EmptyQuery { .. }) => BTreeSet::new(),
        Err(e) => return Err(e.into()),
    };
    sweep_pattern_sets(&events, &u0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContinuousOptions {
    pub search: SearchOptions,
    pub geometry: SplitGeometry,
}

/// Per-interval top-k along `seg` with one shared candidate retrieval.
pub fn ctopk_search(
    idx: &CommunityIndex,
    seg: &QuerySegment,
    v_q: Option<Point>,
    k: usize,
    theta: f64,
    opts: ContinuousOptions,
) -> Result<ContinuousResult, ContinuousError> {
    check_params(k, theta, seg.r)?;
    let start = Instant::now();
    let v_q = v_q.unwrap_or_else(|| seg.midpoint());
    let mut io = 0;
    let sets = interval_sets(idx, seg, opts.geometry, &mut io)?;

    // single-pattern retrieval is a superset of every interval's filter
    let distinct: BTreeSet<PatternId> = sets.iter().flat_map(|(_, u)| u.iter().copied()).collect();
    let mut cache: HashMap<PatternId, Vec<PatternId>> = HashMap::new();
    for &qp in &distinct {
        let t = idx.patterns[qp.index()].ptype;
        let th = Threshold::Scaled { theta, q_count: 1, count_bound: opts.search.count_bound };
        cache.insert(qp, retrieve_candidates(idx, t, &[qp], th, &mut io));
    }

    let mut intervals = Vec::with_capacity(sets.len());
    for ((lo, hi), u) in sets {
        let interval_start = Instant::now();
        if u.is_empty() {
            intervals.push(IntervalResult { interval: [lo, hi], active_patterns: Vec::new(), result: TopKResult::empty() });
            continue;
        }
        let q = query_from_patterns(idx, seg.at(0.5 * (lo + hi)), seg.r, u.iter().copied());
        let mut cands: BTreeSet<PatternId> = BTreeSet::new();
        for g in &q.groups {
            let q_sum = g.sum(&idx.vectors);
            let global = idx.store.max_count(g.ptype) as f64;
            for qp in &g.members {
                for &c in &cache[qp] {
                    let maxc = match opts.search.count_bound {
                        CountBound::PerPattern => idx.store.pattern_max_count[c.index()] as f64,
                        CountBound::Global => global,
                    };
                    if maxc > 0.0 && !clearly_below(dot(idx.vectors.vector(c), &q_sum) * maxc, theta * g.len() as f64) {
                        cands.insert(c);
                    }
                }
            }
        }
        let cands: Vec<PatternId> = cands.into_iter().collect();
        let list = assemble_candidates(idx, &cands, v_q);
        let mut result = run_list(idx, &q, &list, k, theta, opts.search.bound, 0);
        result.stats.wall_time_ms = interval_start.elapsed().as_secs_f64() * 1e3;
        intervals.push(IntervalResult { interval: [lo, hi], active_patterns: u.into_iter().collect(), result });
    }
    Ok(ContinuousResult { intervals, shared_io: io, wall_time_ms: start.elapsed().as_secs_f64() * 1e3 })
}

/// Per-interval brute-force answers over the same split points.
pub fn baseline_ctopk(
    idx: &CommunityIndex,
    seg: &QuerySegment,
    v_q: Option<Point>,
    k: usize,
    theta: f64,
    geometry: SplitGeometry,
) -> Result<ContinuousResult, ContinuousError> {
    check_params(k, theta, seg.r)?;
    let start = Instant::now();
    let v_q = v_q.unwrap_or_else(|| seg.midpoint());
    let mut io = 0;
    let sets = interval_sets(idx, seg, geometry, &mut io)?;
    let intervals = sets
        .into_iter()
        .map(|((lo, hi), u)| {
            let result = if u.is_empty() {
                TopKResult::empty()
            } else {
                let q = query_from_patterns(idx, seg.at(0.5 * (lo + hi)), seg.r, u.iter().copied());
                baseline_topk(idx, &q, v_q, k, theta)
            };
            IntervalResult { interval: [lo, hi], active_patterns: u.into_iter().collect(), result }
        })
        .collect();
    Ok(ContinuousResult { intervals, shared_io: io, wall_time_ms: start.elapsed().as_secs_f64() * 1e3 })
}

/// Continuous query as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CQuerySpec {
    pub q_st: [f64; 2],
    pub q_ed: [f64; 2],
    pub radius: f64,
    pub k: usize,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_q: Option<[f64; 2]>,
}

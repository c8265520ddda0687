//! Unit-pattern detection: bounded faces and dead-end edges of a planar road
//! network, found by tracing face walks with the clockwise-next rule.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{signed_area, Mbr, Point};
use crate::graph::{EdgeId, PoiVec, RoadGraph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternId(pub u32);

impl PatternId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Shape class of a unit pattern, decided by hop count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatternType {
    Edge,
    Delta,
    Rectangle,
    Pentagon,
    Hexagon,
    /// Face with seven or more corners.
    Polygon(u32),
}

impl PatternType {
    /// Compact numeric code: 0 for `Edge`, otherwise the cycle length.
    pub fn code(self) -> u32 {
        match self {
            PatternType::Edge => 0,
            PatternType::Delta => 3,
            PatternType::Rectangle => 4,
            PatternType::Pentagon => 5,
            PatternType::Hexagon => 6,
            PatternType::Polygon(k) => k,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(PatternType::Edge),
            1 | 2 => None,
            k => classify(k as usize, true).ok(),
        }
    }

    pub fn is_cyclic(self) -> bool {
        self != PatternType::Edge
    }
}

impl fmt::Display for PatternType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternType::Polygon(k) => write!(f, "polygon{k}"),
            other => write!(f, "{}", format!("{other:?}").to_lowercase()),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PatternError {
    #[error("a cyclic pattern needs at least 3 hops, got {0}")]
    ShortCycle(usize),
    #[error("hop count must be at least 1")]
    ZeroHops,
    #[error("embedding is not planar: {faces} face walks, Euler formula expects {expected}")]
    NonPlanar { faces: usize, expected: usize },
    #[error("face walk starting at vertex {start} has {positive} enclosing cycles (expected 1)")]
    FaceBoundary { start: VertexId, positive: usize, walk: Vec<VertexId> },
}

pub fn classify(hop_count: usize, is_cyclic: bool) -> Result<PatternType, PatternError> {
    if hop_count == 0 {
        return Err(PatternError::ZeroHops);
    }
    if !is_cyclic {
        return Ok(PatternType::Edge);
    }
    Ok(match hop_count {
        1 | 2 => return Err(PatternError::ShortCycle(hop_count)),
        3 => PatternType::Delta,
        4 => PatternType::Rectangle,
        5 => PatternType::Pentagon,
        6 => PatternType::Hexagon,
        k => PatternType::Polygon(k as u32),
    })
}

/// Rotation- and reflection-invariant form of a vertex cycle: starts at the
/// minimum id, direction chosen to be lexicographically smaller.
pub fn canonical_cycle(cycle: &[VertexId]) -> Vec<VertexId> {
    let n = cycle.len();
    if n == 0 {
        return Vec::new();
    }
    let start = (0..n).min_by_key(|&i| cycle[i]).unwrap();
    let forward: Vec<VertexId> = (0..n).map(|i| cycle[(start + i) % n]).collect();
    let backward: Vec<VertexId> = (0..n).map(|i| cycle[(start + n - i) % n]).collect();
    forward.min(backward)
}

pub fn fingerprint(cycle: &[VertexId]) -> u64 {
    let mut h = DefaultHasher::new();
    canonical_cycle(cycle).hash(&mut h);
    h.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitPattern {
    pub id: PatternId,
    pub ptype: PatternType,
    /// Vertices in traversal order (counter-clockwise for faces).
    pub cycle: Vec<VertexId>,
    pub edge_ids: Vec<EdgeId>,
    pub vec: PoiVec,
    pub mbr: Mbr,
}

impl UnitPattern {
    /// Member segments as coordinate pairs.
    pub fn segments<'a>(&'a self, g: &'a RoadGraph) -> impl Iterator<Item = (Point, Point)> + 'a {
        self.edge_ids.iter().map(move |&e| {
            let e = g.edge(e);
            (g.pos(e.u), g.pos(e.v))
        })
    }
}

/// One closed walk of the face-tracing permutation.
#[derive(Debug, Clone)]
pub struct FaceWalk {
    /// Directed edges `(tail, head)` in walk order.
    pub darts: Vec<(VertexId, VertexId)>,
    pub signed_area: f64,
}

impl FaceWalk {
    pub fn vertices(&self) -> Vec<VertexId> {
        self.darts.iter().map(|d| d.0).collect()
    }
}

/// Half-edge successor table for the clockwise-next rule. Dart `offsets[v] + i`
/// is `v -> neighbors(v)[i]`.
struct Darts {
    offsets: Vec<usize>,
    heads: Vec<VertexId>,
    tails: Vec<VertexId>,
    next: Vec<usize>,
}

impl Darts {
    fn new(g: &RoadGraph) -> Self {
        let n = g.vertex_count();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for v in 0..n {
            offsets.push(offsets[v] + g.degree(VertexId(v as u32)));
        }
        let total = offsets[n];
        let mut heads = Vec::with_capacity(total);
        let mut tails = Vec::with_capacity(total);
        // (edge) -> dart ids of its two directions
        let mut by_edge = vec![[usize::MAX; 2]; g.edge_count()];
        for v in 0..n {
            let vid = VertexId(v as u32);
            for (i, &(w, e)) in g.neighbors(vid).iter().enumerate() {
                heads.push(w);
                tails.push(vid);
                let slot = usize::from(g.edge(e).u != vid);
                by_edge[e.index()][slot] = offsets[v] + i;
            }
        }
        let mut next = vec![0; total];
        for v in 0..n {
            let vid = VertexId(v as u32);
            for (i, &(w, e)) in g.neighbors(vid).iter().enumerate() {
                let d = offsets[v] + i;
                let rev = by_edge[e.index()][usize::from(g.edge(e).u == vid)];
                // position of the reverse dart inside w's rotation
                let j = rev - offsets[w.index()];
                let deg = g.degree(w);
                let k = if j == 0 { deg - 1 } else { j - 1 };
                next[d] = offsets[w.index()] + k;
            }
        }
        Darts { offsets, heads, tails, next }
    }

    fn len(&self) -> usize {
        self.heads.len()
    }
}

/// Traces every face walk, visiting start vertices in `order` and their
/// neighbours in rotation order; each directed edge is consumed exactly once.
fn trace_walks(g: &RoadGraph, order: &[VertexId]) -> Vec<FaceWalk> {
    let darts = Darts::new(g);
    let mut visited = vec![false; darts.len()];
    let mut walks = Vec::new();
    for &start in order {
        let s = start.index();
        for d0 in darts.offsets[s]..darts.offsets[s + 1] {
            if visited[d0] {
                continue;
            }
            let mut seq = Vec::new();
            let mut d = d0;
            loop {
                visited[d] = true;
                seq.push((darts.tails[d], darts.heads[d]));
                d = darts.next[d];
                if d == d0 {
                    break;
                }
            }
            let pts: Vec<Point> = seq.iter().map(|&(t, _)| g.pos(t)).collect();
            walks.push(FaceWalk { darts: seq, signed_area: signed_area(&pts) });
        }
    }
    walks
}

pub fn face_walks(g: &RoadGraph) -> Vec<FaceWalk> {
    let order: Vec<VertexId> = (0..g.vertex_count() as u32).map(VertexId).collect();
    trace_walks(g, &order)
}

/// Splits a closed vertex walk into simple cycles by popping the stack at
/// every repeated vertex. Two-vertex cycles are out-and-back traversals.
fn split_simple_cycles(walk: &[VertexId]) -> Vec<Vec<VertexId>> {
    let mut stack: Vec<VertexId> = Vec::with_capacity(walk.len());
    let mut on_stack: HashMap<VertexId, usize> = HashMap::with_capacity(walk.len());
    let mut cycles = Vec::new();
    let first = match walk.first() {
        Some(&v) => v,
        None => return cycles,
    };
    for &v in walk.iter().chain(std::iter::once(&first)) {
        if let Some(&pos) = on_stack.get(&v) {
            let cycle: Vec<VertexId> = stack.drain(pos..).collect();
            for u in &cycle {
                on_stack.remove(u);
            }
            cycles.push(cycle);
        }
        on_stack.insert(v, stack.len());
        stack.push(v);
    }
    cycles
}

/// Detects all unit patterns of `g` in deterministic order.
pub fn detect_unit_patterns(g: &RoadGraph) -> Result<Vec<UnitPattern>, PatternError> {
    let order: Vec<VertexId> = (0..g.vertex_count() as u32).map(VertexId).collect();
    detect_with_order(g, &order)
}

/// As [`detect_unit_patterns`] but enumerating start vertices in `order`.
pub fn detect_with_order(g: &RoadGraph, order: &[VertexId]) -> Result<Vec<UnitPattern>, PatternError> {
    let walks = trace_walks(g, order);
    let expected = g.edge_count() + 2 - g.vertex_count();
    if walks.len() != expected {
        return Err(PatternError::NonPlanar { faces: walks.len(), expected });
    }
    // the unbounded face is traced clockwise, so it has the most negative area
    let outer = walks
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.signed_area.total_cmp(&b.1.signed_area))
        .map(|(i, _)| i)
        .unwrap_or(0);

    let mut seen: HashSet<Vec<VertexId>> = HashSet::new();
    let mut patterns = Vec::new();
    let mut push = |ptype: PatternType, cycle: Vec<VertexId>, edge_ids: Vec<EdgeId>, patterns: &mut Vec<UnitPattern>| {
        if !seen.insert(canonical_cycle(&cycle)) {
            return;
        }
        let mut vec = PoiVec::zeros(g.poi_type_count());
        for &e in &edge_ids {
            vec.add_assign(&g.edge(e).pois);
        }
        let mbr = Mbr::from_points(cycle.iter().map(|&v| g.pos(v)));
        patterns.push(UnitPattern {
            id: PatternId(patterns.len() as u32),
            ptype,
            cycle,
            edge_ids,
            vec,
            mbr,
        });
    };

    for (wi, walk) in walks.iter().enumerate() {
        let darts: HashSet<(VertexId, VertexId)> = walk.darts.iter().copied().collect();
        for &(a, b) in &walk.darts {
            // edge walked both ways inside one face: a bridge / dead end
            if a < b && darts.contains(&(b, a)) {
                let e = g.edge_between(a, b).expect("dart without edge");
                push(PatternType::Edge, vec![a, b], vec![e], &mut patterns);
            }
        }
        if wi == outer {
            continue;
        }
        let verts = walk.vertices();
        let enclosing: Vec<Vec<VertexId>> = split_simple_cycles(&verts)
            .into_iter()
            .filter(|c| c.len() >= 3)
            .filter(|c| {
                let pts: Vec<Point> = c.iter().map(|&v| g.pos(v)).collect();
                signed_area(&pts) > 0.0
            })
            .collect();
        if enclosing.len() != 1 {
            return Err(PatternError::FaceBoundary {
                start: verts[0],
                positive: enclosing.len(),
                walk: verts,
            });
        }
        let cycle = enclosing.into_iter().next().unwrap();
        let ptype = classify(cycle.len(), true)?;
        let n = cycle.len();
        let edge_ids = (0..n)
            .map(|i| g.edge_between(cycle[i], cycle[(i + 1) % n]).expect("cycle edge"))
            .collect();
        push(ptype, cycle, edge_ids, &mut patterns);
    }
    Ok(patterns)
}

/// Number of patterns per type.
pub fn type_histogram(patterns: &[UnitPattern]) -> std::collections::BTreeMap<PatternType, usize> {
    let mut h = std::collections::BTreeMap::new();
    for p in patterns {
        *h.entry(p.ptype).or_insert(0) += 1;
    }
    h
}

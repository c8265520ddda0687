//! Road-network graph model: embedded planar graph with POI count vectors on
//! edges, text-file ingestion, JSON round-tripping and embedding checks.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{segments_conflict, BucketGrid, Mbr, Point, Shared};

macro_rules! id_type {
    ($name:ident) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(VertexId);
id_type!(EdgeId);

/// Per-edge (or per-pattern) POI counts, one slot per POI type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PoiVec(pub Vec<u32>);

impl PoiVec {
    pub fn zeros(m: usize) -> Self {
        PoiVec(vec![0; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    pub fn add_assign(&mut self, other: &PoiVec) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn max_assign(&mut self, other: &PoiVec) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = (*a).max(*b);
        }
    }

    /// Element-wise `self >= other`.
    pub fn dominates(&self, other: &PoiVec) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    pub x: f64,
    pub y: f64,
}

impl Vertex {
    pub fn pos(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub u: VertexId,
    pub v: VertexId,
    pub length: f64,
    pub pois: PoiVec,
}

impl Edge {
    pub fn other(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// A single POI placed on an edge. Only the per-edge counts feed the
/// similarity math; the offset is kept so files round-trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoiRecord {
    pub edge: EdgeId,
    pub poi_type: u32,
    pub offset: f64,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("vertex ids must be dense and zero-based: missing id {0}")]
    SparseVertexIds(u32),
    #[error("edge ids must be dense and zero-based: missing id {0}")]
    SparseEdgeIds(u32),
    #[error("edge {edge} references unknown vertex {vertex}")]
    DanglingVertex { edge: u32, vertex: u32 },
    #[error("POI references unknown edge {edge}")]
    DanglingEdge { edge: u32 },
    #[error("POI type {poi_type} out of range (poi_type_count = {count})")]
    PoiTypeOutOfRange { poi_type: u32, count: usize },
    #[error("edge {0} is a self-loop")]
    SelfLoop(u32),
    #[error("edges {0} and {1} connect the same vertex pair")]
    DuplicateEdge(u32, u32),
    #[error("vertices {0} and {1} share identical coordinates")]
    DuplicateCoordinates(u32, u32),
    #[error("vertex {0} has non-finite coordinates")]
    NonFinite(u32),
    #[error("vertex {0} has two incident edges leaving in the same direction")]
    DirectionTie(u32),
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("graph has no vertices")]
    Empty,
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Connected, embedded road network. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    poi_type_count: usize,
    pois: Vec<PoiRecord>,
    /// Per vertex, `(neighbor, edge)` sorted counter-clockwise by direction angle.
    adjacency: Vec<Vec<(VertexId, EdgeId)>>,
}

/// JSON document layout used for round-trip serialization.
#[derive(Serialize, Deserialize)]
struct GraphDoc {
    poi_type_count: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    pois: Vec<PoiRecord>,
}

impl RoadGraph {
    /// Builds a graph from vertex positions, undirected edges and POI
    /// records. Edge lengths are the Euclidean segment lengths.
    pub fn from_parts(
        points: Vec<Point>,
        edges: Vec<(u32, u32)>,
        poi_type_count: usize,
        pois: Vec<PoiRecord>,
    ) -> Result<Self, GraphError> {
        if points.is_empty() {
            return Err(GraphError::Empty);
        }
        let n = points.len();
        let mut seen: HashMap<(u64, u64), u32> = HashMap::with_capacity(n);
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(GraphError::NonFinite(i as u32));
            }
            let key = ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits());
            if let Some(&j) = seen.get(&key) {
                return Err(GraphError::DuplicateCoordinates(j, i as u32));
            }
            seen.insert(key, i as u32);
        }
        let vertices: Vec<Vertex> = points
            .iter()
            .enumerate()
            .map(|(i, p)| Vertex { id: VertexId(i as u32), x: p.x, y: p.y })
            .collect();

        let mut pair_seen: HashMap<(u32, u32), u32> = HashMap::with_capacity(edges.len());
        let mut out_edges = Vec::with_capacity(edges.len());
        for (i, &(u, v)) in edges.iter().enumerate() {
            let id = i as u32;
            for w in [u, v] {
                if w as usize >= n {
                    return Err(GraphError::DanglingVertex { edge: id, vertex: w });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(id));
            }
            let key = (u.min(v), u.max(v));
            if let Some(&j) = pair_seen.get(&key) {
                return Err(GraphError::DuplicateEdge(j, id));
            }
            pair_seen.insert(key, id);
            out_edges.push(Edge {
                id: EdgeId(id),
                u: VertexId(u),
                v: VertexId(v),
                length: points[u as usize].dist(&points[v as usize]),
                pois: PoiVec::zeros(poi_type_count),
            });
        }

        for rec in &pois {
            let e = out_edges
                .get_mut(rec.edge.index())
                .ok_or(GraphError::DanglingEdge { edge: rec.edge.0 })?;
            if rec.poi_type as usize >= poi_type_count {
                return Err(GraphError::PoiTypeOutOfRange {
                    poi_type: rec.poi_type,
                    count: poi_type_count,
                });
            }
            e.pois.0[rec.poi_type as usize] += 1;
        }

        let adjacency = build_adjacency(&vertices, &out_edges)?;
        let g = RoadGraph { vertices, edges: out_edges, poi_type_count, pois, adjacency };
        let components = g.component_count();
        if components != 1 {
            return Err(GraphError::Disconnected { components });
        }
        Ok(g)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn pois(&self) -> &[PoiRecord] {
        &self.pois
    }

    pub fn poi_type_count(&self) -> usize {
        self.poi_type_count
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn pos(&self, v: VertexId) -> Point {
        self.vertices[v.index()].pos()
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.index()]
    }

    /// Neighbours of `v` in counter-clockwise angular order.
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adjacency[v.index()]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v.index()].len()
    }

    pub fn bounds(&self) -> Mbr {
        Mbr::from_points(self.vertices.iter().map(Vertex::pos))
    }

    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.neighbors(a).iter().find(|(n, _)| *n == b).map(|&(_, e)| e)
    }

    /// Neighbour of `at` reached by rotating clockwise from the reverse
    /// direction `at -> from`. A dead end yields `from` (U-turn). `None` when
    /// `from`-`at` is not an edge.
    pub fn clockwise_next(&self, from: VertexId, at: VertexId) -> Option<VertexId> {
        let adj = &self.adjacency[at.index()];
        let i = adj.iter().position(|(n, _)| *n == from)?;
        let j = if i == 0 { adj.len() - 1 } else { i - 1 };
        Some(adj[j].0)
    }

    pub fn component_count(&self) -> usize {
        let n = self.vertices.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for &(w, _) in &self.adjacency[v] {
                    if !seen[w.index()] {
                        seen[w.index()] = true;
                        queue.push_back(w.index());
                    }
                }
            }
        }
        count
    }

    pub fn to_json(&self) -> Result<String, GraphError> {
        let doc = GraphDoc {
            poi_type_count: self.poi_type_count,
            vertices: self.vertices.clone(),
            edges: self.edges.clone(),
            pois: self.pois.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self, GraphError> {
        let doc: GraphDoc = serde_json::from_str(s)?;
        let mut points = vec![None; doc.vertices.len()];
        for v in &doc.vertices {
            *points
                .get_mut(v.id.index())
                .ok_or(GraphError::SparseVertexIds(v.id.0))? = Some(Point::new(v.x, v.y));
        }
        let points = collect_dense(points).map_err(GraphError::SparseVertexIds)?;
        let mut edges = vec![None; doc.edges.len()];
        for e in &doc.edges {
            *edges
                .get_mut(e.id.index())
                .ok_or(GraphError::SparseEdgeIds(e.id.0))? = Some((e.u.0, e.v.0));
        }
        let edges = collect_dense(edges).map_err(GraphError::SparseEdgeIds)?;
        RoadGraph::from_parts(points, edges, doc.poi_type_count, doc.pois)
    }

    /// Writes the three whitespace-separated text files.
    pub fn write_files(&self, nodes: &Path, edges: &Path, pois: &Path) -> Result<(), GraphError> {
        let mut buf = String::new();
        for v in &self.vertices {
            buf.push_str(&format!("{} {} {}\n", v.id, v.x, v.y));
        }
        write_file(nodes, &buf)?;
        buf.clear();
        for e in &self.edges {
            buf.push_str(&format!("{} {} {} {}\n", e.id, e.u, e.v, e.length));
        }
        write_file(edges, &buf)?;
        buf.clear();
        for p in &self.pois {
            buf.push_str(&format!("{} {} {}\n", p.edge, p.poi_type, p.offset));
        }
        write_file(pois, &buf)
    }
}

fn collect_dense<T>(items: Vec<Option<T>>) -> Result<Vec<T>, u32> {
    items
        .into_iter()
        .enumerate()
        .map(|(i, x)| x.ok_or(i as u32))
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), GraphError> {
    let io = |source| GraphError::Io { path: path.to_path_buf(), source };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)
}

fn build_adjacency(
    vertices: &[Vertex],
    edges: &[Edge],
) -> Result<Vec<Vec<(VertexId, EdgeId)>>, GraphError> {
    let mut adj: Vec<Vec<(VertexId, EdgeId)>> = vec![Vec::new(); vertices.len()];
    for e in edges {
        adj[e.u.index()].push((e.v, e.id));
        adj[e.v.index()].push((e.u, e.id));
    }
    for (i, list) in adj.iter_mut().enumerate() {
        let origin = vertices[i].pos();
        let angle = |w: VertexId| {
            let d = vertices[w.index()].pos().sub(&origin);
            d.y.atan2(d.x)
        };
        list.sort_by(|a, b| angle(a.0).total_cmp(&angle(b.0)).then(a.0.cmp(&b.0)));
        for pair in list.windows(2) {
            if angle(pair[0].0) == angle(pair[1].0) {
                return Err(GraphError::DirectionTie(i as u32));
            }
        }
    }
    Ok(adj)
}

struct LineReader {
    path: PathBuf,
    lines: std::io::Lines<BufReader<fs::File>>,
    line_no: usize,
}

impl LineReader {
    fn open(path: &Path) -> Result<Self, GraphError> {
        let f = fs::File::open(path)
            .map_err(|source| GraphError::Io { path: path.to_path_buf(), source })?;
        Ok(LineReader { path: path.to_path_buf(), lines: BufReader::new(f).lines(), line_no: 0 })
    }

    /// Next non-blank line split into fields, with its line number.
    fn next_fields(&mut self) -> Option<Result<(usize, Vec<String>), GraphError>> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            match line {
                Err(source) => {
                    return Some(Err(GraphError::Io { path: self.path.clone(), source }))
                }
                Ok(l) => {
                    let fields: Vec<String> = l.split_whitespace().map(str::to_owned).collect();
                    if !fields.is_empty() {
                        return Some(Ok((self.line_no, fields)));
                    }
                }
            }
        }
    }

    fn malformed(&self, line: usize, msg: impl Into<String>) -> GraphError {
        GraphError::Malformed { path: self.path.clone(), line, msg: msg.into() }
    }

    fn parse<T: std::str::FromStr>(&self, line: usize, field: &str, what: &str) -> Result<T, GraphError> {
        field
            .parse()
            .map_err(|_| self.malformed(line, format!("invalid {what} `{field}`")))
    }
}

/// Loads a road network from the node / edge / POI text files.
///
/// Edge lengths in the edge file are optional and always replaced by the
/// Euclidean length of the segment.
pub fn load_graph(
    nodes_path: &Path,
    edges_path: &Path,
    pois_path: &Path,
    poi_type_count: usize,
) -> Result<RoadGraph, GraphError> {
    let mut rd = LineReader::open(nodes_path)?;
    let mut points: Vec<Option<Point>> = Vec::new();
    while let Some(item) = rd.next_fields() {
        let (line, f) = item?;
        if f.len() != 3 {
            return Err(rd.malformed(line, format!("expected `id x y`, got {} fields", f.len())));
        }
        let id: u32 = rd.parse(line, &f[0], "vertex id")?;
        let x: f64 = rd.parse(line, &f[1], "x coordinate")?;
        let y: f64 = rd.parse(line, &f[2], "y coordinate")?;
        let idx = id as usize;
        if idx >= points.len() {
            points.resize(idx + 1, None);
        }
        if points[idx].is_some() {
            return Err(rd.malformed(line, format!("duplicate vertex id {id}")));
        }
        points[idx] = Some(Point::new(x, y));
    }
    let points = collect_dense(points).map_err(GraphError::SparseVertexIds)?;

    let mut rd = LineReader::open(edges_path)?;
    let mut edges: Vec<Option<(u32, u32)>> = Vec::new();
    while let Some(item) = rd.next_fields() {
        let (line, f) = item?;
        if f.len() != 3 && f.len() != 4 {
            return Err(rd.malformed(line, format!("expected `id u v [length]`, got {} fields", f.len())));
        }
        let id: u32 = rd.parse(line, &f[0], "edge id")?;
        let u: u32 = rd.parse(line, &f[1], "vertex id")?;
        let v: u32 = rd.parse(line, &f[2], "vertex id")?;
        if let Some(len) = f.get(3) {
            let len: f64 = rd.parse(line, len, "length")?;
            if !(len >= 0.0) {
                return Err(rd.malformed(line, "negative length"));
            }
        }
        let idx = id as usize;
        if idx >= edges.len() {
            edges.resize(idx + 1, None);
        }
        if edges[idx].is_some() {
            return Err(rd.malformed(line, format!("duplicate edge id {id}")));
        }
        edges[idx] = Some((u, v));
    }
    let edges = collect_dense(edges).map_err(GraphError::SparseEdgeIds)?;

    let mut rd = LineReader::open(pois_path)?;
    let mut pois = Vec::new();
    while let Some(item) = rd.next_fields() {
        let (line, f) = item?;
        if f.len() != 3 {
            return Err(rd.malformed(line, format!("expected `edge_id poi_type offset`, got {} fields", f.len())));
        }
        let edge: u32 = rd.parse(line, &f[0], "edge id")?;
        let poi_type: u32 = rd.parse(line, &f[1], "POI type")?;
        let offset: f64 = rd.parse(line, &f[2], "offset")?;
        if !(0.0..=1.0).contains(&offset) {
            return Err(rd.malformed(line, format!("offset {offset} outside [0, 1]")));
        }
        if edge as usize >= edges.len() {
            return Err(rd.malformed(line, format!("unknown edge {edge}")));
        }
        if poi_type as usize >= poi_type_count {
            return Err(rd.malformed(line, format!("POI type {poi_type} >= {poi_type_count}")));
        }
        pois.push(PoiRecord { edge: EdgeId(edge), poi_type, offset });
    }

    RoadGraph::from_parts(points, edges, poi_type_count, pois)
}

/// Result of [`validate_planarity`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanarityReport {
    pub crossing_pairs: Vec<(EdgeId, EdgeId)>,
}

impl PlanarityReport {
    pub fn is_planar(&self) -> bool {
        self.crossing_pairs.is_empty()
    }
}

pub(crate) fn edges_conflict(g: &RoadGraph, a: &Edge, b: &Edge) -> bool {
    let (pa, pb, pc, pd) = (g.pos(a.u), g.pos(a.v), g.pos(b.u), g.pos(b.v));
    let shared = if a.u == b.u {
        Some(Shared { pivot: pa, other1: pb, other2: pd })
    } else if a.u == b.v {
        Some(Shared { pivot: pa, other1: pb, other2: pc })
    } else if a.v == b.u {
        Some(Shared { pivot: pb, other1: pa, other2: pd })
    } else if a.v == b.v {
        Some(Shared { pivot: pb, other1: pa, other2: pc })
    } else {
        None
    };
    segments_conflict(&pa, &pb, &pc, &pd, shared)
}

/// Lists every pair of edges whose segments meet anywhere other than a
/// shared endpoint. Pairs are `(smaller id, larger id)`, sorted.
pub fn validate_planarity(g: &RoadGraph) -> PlanarityReport {
    let edges = g.edges();
    if edges.len() < 2 {
        return PlanarityReport::default();
    }
    let mut grid: BucketGrid<u32> = BucketGrid::new(g.bounds(), edges.len());
    let mbr = |e: &Edge| Mbr::from_points([g.pos(e.u), g.pos(e.v)]);
    for e in edges {
        grid.insert(&mbr(e), e.id.0);
    }
    let mut pairs = HashSet::new();
    for e in edges {
        grid.visit(&mbr(e), |other| {
            if other > e.id.0 && !pairs.contains(&(e.id.0, other)) && edges_conflict(g, e, &edges[other as usize]) {
                pairs.insert((e.id.0, other));
            }
        });
    }
    let mut crossing_pairs: Vec<_> = pairs.into_iter().map(|(a, b)| (EdgeId(a), EdgeId(b))).collect();
    crossing_pairs.sort();
    PlanarityReport { crossing_pairs }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_with_diagonals() -> RoadGraph {
        let pts = vec![
            Point::new(0., 0.),
            Point::new(1., 0.),
            Point::new(1., 1.),
            Point::new(0., 1.),
        ];
        RoadGraph::from_parts(pts, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)], 1, vec![]).unwrap()
    }

    #[test]
    fn clockwise_next_on_square() {
        let pts = vec![
            Point::new(0., 0.),
            Point::new(1., 0.),
            Point::new(1., 1.),
            Point::new(0., 1.),
        ];
        let g = RoadGraph::from_parts(pts, vec![(0, 1), (1, 2), (2, 3), (3, 0)], 1, vec![]).unwrap();
        assert_eq!(g.clockwise_next(VertexId(0), VertexId(1)), Some(VertexId(2)));
        assert_eq!(g.clockwise_next(VertexId(1), VertexId(2)), Some(VertexId(3)));
        assert_eq!(g.clockwise_next(VertexId(0), VertexId(2)), None);
    }

    #[test]
    fn clockwise_next_dead_end_u_turn() {
        let pts = vec![Point::new(0., 0.), Point::new(1., 0.)];
        let g = RoadGraph::from_parts(pts, vec![(0, 1)], 1, vec![]).unwrap();
        assert_eq!(g.clockwise_next(VertexId(0), VertexId(1)), Some(VertexId(0)));
    }

    #[test]
    fn clockwise_next_t_junction() {
        // at = origin; neighbours at 0, 90 and 180 degrees; travelling east
        // (arriving from the 180-degree neighbour).
        let pts = vec![
            Point::new(0., 0.),
            Point::new(1., 0.),
            Point::new(0., 1.),
            Point::new(-1., 0.),
        ];
        let g = RoadGraph::from_parts(pts.clone(), vec![(0, 1), (0, 2), (0, 3)], 1, vec![]).unwrap();
        let got = g.clockwise_next(VertexId(3), VertexId(0)).unwrap();
        // brute force: smallest clockwise rotation from the reverse direction
        let back = pts[3].sub(&pts[0]);
        let back_angle = back.y.atan2(back.x);
        let best = [1usize, 2]
            .into_iter()
            .min_by(|&a, &b| {
                let cw = |i: usize| {
                    let d = pts[i].sub(&pts[0]);
                    (back_angle - d.y.atan2(d.x)).rem_euclid(std::f64::consts::TAU)
                };
                cw(a).total_cmp(&cw(b))
            })
            .unwrap();
        assert_eq!(got, VertexId(best as u32));
        assert_eq!(got, VertexId(2));
    }

    #[test]
    fn planarity_report() {
        let g = square_with_diagonals();
        let rep = validate_planarity(&g);
        assert_eq!(rep.crossing_pairs, vec![(EdgeId(4), EdgeId(5))]);
        let single = RoadGraph::from_parts(vec![Point::new(0., 0.), Point::new(1., 1.)], vec![(0, 1)], 1, vec![]).unwrap();
        assert!(validate_planarity(&single).is_planar());
    }

    #[test]
    fn poi_aggregation_and_errors() {
        let pts = vec![Point::new(0., 0.), Point::new(1., 0.)];
        let pois = vec![PoiRecord { edge: EdgeId(0), poi_type: 0, offset: 0.5 }];
        let g = RoadGraph::from_parts(pts.clone(), vec![(0, 1)], 3, pois).unwrap();
        assert_eq!(g.edge(EdgeId(0)).pois, PoiVec(vec![1, 0, 0]));
        assert!(matches!(
            RoadGraph::from_parts(pts.clone(), vec![(0, 2)], 1, vec![]),
            Err(GraphError::DanglingVertex { .. })
        ));
        assert!(matches!(
            RoadGraph::from_parts(vec![Point::new(0., 0.), Point::new(0., 0.)], vec![(0, 1)], 1, vec![]),
            Err(GraphError::DuplicateCoordinates(0, 1))
        ));
        let three = vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(5., 5.)];
        assert!(matches!(
            RoadGraph::from_parts(three, vec![(0, 1)], 1, vec![]),
            Err(GraphError::Disconnected { components: 2 })
        ));
        let collinear = vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(2., 0.)];
        assert!(matches!(
            RoadGraph::from_parts(collinear, vec![(0, 1), (0, 2)], 1, vec![]),
            Err(GraphError::DirectionTie(0))
        ));
    }

    #[test]
    fn triangle_without_pois_has_zero_vectors() {
        let pts = vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(0., 1.)];
        let g = RoadGraph::from_parts(pts, vec![(0, 1), (1, 2), (2, 0)], 4, vec![]).unwrap();
        assert!(g.edges().iter().all(|e| e.pois == PoiVec::zeros(4)));
    }
}

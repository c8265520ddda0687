//! Versioned little-endian binary format for a built [`CommunityIndex`].
//!
//! Layout: magic `RCIX`, format version (u32), scoring mode (u8), then the
//! graph, pattern list, tree and community membership. Scoring-vector
//! aggregates are derived data and are recomputed on load.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::geom::{Mbr, Point};
use crate::graph::{EdgeId, GraphError, PoiRecord, PoiVec, RoadGraph, VertexId};
use crate::index::{ARTree, CommunityIndex, CommunityStore, Node, NodeInfo, NodeKind, TypeSummary};
use crate::similarity::{ScoreVectors, ScoringMode};
use crate::unit_pattern::{PatternId, PatternType, UnitPattern};

pub const MAGIC: [u8; 4] = *b"RCIX";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index format version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("index file truncated")]
    Truncated,
    #[error("corrupt index file: {0}")]
    Corrupt(String),
    #[error("stored graph is invalid: {0}")]
    Graph(#[from] GraphError),
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }
    fn u32s(&mut self, vs: impl ExactSizeIterator<Item = u32>) {
        self.len(vs.len());
        for v in vs {
            self.u32(v);
        }
    }
    fn mbr(&mut self, m: &Mbr) {
        for v in [m.min_x, m.min_y, m.max_x, m.max_y] {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PersistError> {
        let end = self.pos.checked_add(n).ok_or(PersistError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(PersistError::Truncated)?;
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, PersistError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, PersistError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, PersistError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    /// Element count, rejected if it cannot fit in the remaining bytes.
    fn len(&mut self, elem_size: usize) -> Result<usize, PersistError> {
        let n = self.u64()?;
        let remaining = (self.buf.len() - self.pos) as u64;
        if n.saturating_mul(elem_size.max(1) as u64) > remaining {
            return Err(PersistError::Truncated);
        }
        Ok(n as usize)
    }
    fn u32s(&mut self) -> Result<Vec<u32>, PersistError> {
        let n = self.len(4)?;
        (0..n).map(|_| self.u32()).collect()
    }
    fn mbr(&mut self) -> Result<Mbr, PersistError> {
        Ok(Mbr { min_x: self.f64()?, min_y: self.f64()?, max_x: self.f64()?, max_y: self.f64()? })
    }
}

fn ptype(code: u32) -> Result<PatternType, PersistError> {
    PatternType::from_code(code).ok_or_else(|| PersistError::Corrupt(format!("pattern type code {code}")))
}

pub fn encode(idx: &CommunityIndex) -> Vec<u8> {
    let mut w = Writer::default();
    w.0.extend_from_slice(&MAGIC);
    w.u32(FORMAT_VERSION);
    w.u8(idx.mode().code());

    let g = &idx.graph;
    w.u32(g.poi_type_count() as u32);
    w.len(g.vertex_count());
    for v in g.vertices() {
        w.f64(v.x);
        w.f64(v.y);
    }
    w.len(g.edge_count());
    for e in g.edges() {
        w.u32(e.u.0);
        w.u32(e.v.0);
    }
    w.len(g.pois().len());
    for p in g.pois() {
        w.u32(p.edge.0);
        w.u32(p.poi_type);
        w.f64(p.offset);
    }

    w.len(idx.patterns.len());
    for p in &idx.patterns {
        w.u32(p.ptype.code());
        w.u32s(p.cycle.iter().map(|v| v.0));
        w.u32s(p.edge_ids.iter().map(|e| e.0));
        w.u32s(p.vec.0.iter().copied());
        w.mbr(&p.mbr);
    }

    let t = &idx.tree;
    w.u32(t.fanout() as u32);
    w.u32(t.root() as u32);
    w.len(t.node_count());
    for n in t.nodes() {
        w.u32(n.level);
        match &n.kind {
            NodeKind::Leaf(ids) => {
                w.u8(0);
                w.u32s(ids.iter().map(|p| p.0));
            }
            NodeKind::Internal(ch) => {
                w.u8(1);
                w.u32s(ch.iter().map(|&c| c as u32));
            }
        }
        w.mbr(&n.info.mbr);
        w.u32s(n.info.arr.iter().map(|&b| b as u32));
        w.len(n.info.types.len());
        for s in &n.info.types {
            w.u32(s.ptype.code());
            w.u32(s.count);
            w.u32(s.max_comm_count);
            w.u32s(s.vmax.0.iter().copied());
        }
    }

    w.f64(idx.store.radius);
    w.len(idx.store.len());
    for c in &idx.store.communities {
        w.u32s(c.patterns.iter().map(|p| p.0));
    }
    w.0
}

pub fn decode(buf: &[u8]) -> Result<CommunityIndex, PersistError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4).map_err(|_| PersistError::BadMagic)? != MAGIC {
        return Err(PersistError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(PersistError::Version(version));
    }
    let mode = ScoringMode::from_code(r.u8()?).ok_or_else(|| PersistError::Corrupt("scoring mode".into()))?;

    let m = r.u32()? as usize;
    let nv = r.len(16)?;
    let mut points = Vec::with_capacity(nv);
    for _ in 0..nv {
        points.push(Point::new(r.f64()?, r.f64()?));
    }
    let ne = r.len(8)?;
    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        edges.push((r.u32()?, r.u32()?));
    }
    let np = r.len(16)?;
    let mut pois = Vec::with_capacity(np);
    for _ in 0..np {
        pois.push(PoiRecord { edge: EdgeId(r.u32()?), poi_type: r.u32()?, offset: r.f64()? });
    }
    let graph = RoadGraph::from_parts(points, edges, m, pois)?;

    let npat = r.len(4)?;
    let mut patterns = Vec::with_capacity(npat);
    for i in 0..npat {
        let t = ptype(r.u32()?)?;
        let cycle = r.u32s()?.into_iter().map(VertexId).collect::<Vec<_>>();
        let edge_ids = r.u32s()?.into_iter().map(EdgeId).collect::<Vec<_>>();
        if cycle.iter().any(|v| v.index() >= nv) || edge_ids.iter().any(|e| e.index() >= ne) {
            return Err(PersistError::Corrupt(format!("pattern {i} references missing graph items")));
        }
        let vec = PoiVec(r.u32s()?);
        let mbr = r.mbr()?;
        patterns.push(UnitPattern { id: PatternId(i as u32), ptype: t, cycle, edge_ids, vec, mbr });
    }

    let fanout = r.u32()? as usize;
    let root = r.u32()? as usize;
    let nn = r.len(4)?;
    let mut nodes = Vec::with_capacity(nn);
    for _ in 0..nn {
        let level = r.u32()?;
        let kind = match r.u8()? {
            0 => NodeKind::Leaf(r.u32s()?.into_iter().map(PatternId).collect()),
            1 => NodeKind::Internal(r.u32s()?.into_iter().map(|c| c as usize).collect()),
            k => return Err(PersistError::Corrupt(format!("node kind {k}"))),
        };
        match &kind {
            NodeKind::Leaf(ids) if ids.iter().any(|p| p.index() >= npat) => {
                return Err(PersistError::Corrupt("leaf references missing pattern".into()))
            }
            NodeKind::Internal(ch) if ch.iter().any(|&c| c >= nn) => {
                return Err(PersistError::Corrupt("node references missing child".into()))
            }
            _ => {}
        }
        let mbr = r.mbr()?;
        let arr = r.u32s()?.into_iter().map(|b| b != 0).collect();
        let nt = r.len(12)?;
        let mut types = Vec::with_capacity(nt);
        for _ in 0..nt {
            let t = ptype(r.u32()?)?;
            let count = r.u32()?;
            let max_comm_count = r.u32()?;
            let vmax = PoiVec(r.u32s()?);
            types.push(TypeSummary { ptype: t, count, vmax, max_comm_count, score_max: vec![0.0; m] });
        }
        nodes.push(Node { info: NodeInfo { mbr, arr, types }, kind, level, span: 0..0 });
    }
    if root >= nn {
        return Err(PersistError::Corrupt("root out of range".into()));
    }

    let radius = r.f64()?;
    let nc = r.len(8)?;
    if nc != nv {
        return Err(PersistError::Corrupt(format!("{nc} communities for {nv} vertices")));
    }
    let mut members = Vec::with_capacity(nc);
    for _ in 0..nc {
        let ids: Vec<PatternId> = r.u32s()?.into_iter().map(PatternId).collect();
        if ids.iter().any(|p| p.index() >= npat) {
            return Err(PersistError::Corrupt("community references missing pattern".into()));
        }
        members.push(ids);
    }
    if r.pos != buf.len() {
        return Err(PersistError::Corrupt("trailing bytes".into()));
    }

    let vectors = ScoreVectors::build(&patterns, m, mode);
    let mut tree = ARTree::from_raw(nodes, root, fanout);
    tree.set_scoring(&patterns, &vectors);
    let store = CommunityStore::from_members(members, radius, &patterns, &vectors);
    Ok(CommunityIndex { graph, patterns, tree, store, vectors })
}

pub fn save_index(idx: &CommunityIndex, path: &Path) -> Result<(), PersistError> {
    fs::write(path, encode(idx)).map_err(|source| PersistError::Io { path: path.display().to_string(), source })
}

pub fn load_index(path: &Path) -> Result<CommunityIndex, PersistError> {
    let buf = fs::read(path).map_err(|source| PersistError::Io { path: path.display().to_string(), source })?;
    decode(&buf)
}

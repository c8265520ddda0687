#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roadcomm::geom::Point;
use roadcomm::graph::{PoiRecord, RoadGraph};
use roadcomm::index::DEFAULT_FANOUT;
use roadcomm::similarity::{community_sim, ScoringMode};
use roadcomm::synth::{Distribution2d, GenSpec};
use roadcomm::CommunityIndex;

/// Extent keeping vertex density equal to 30K vertices on a 100x100 square.
pub fn extent_for(n: usize) -> f64 {
    (n as f64 / 3.0).sqrt()
}

pub fn spec(n: usize, mode: Distribution2d, seed: u64) -> GenSpec {
    GenSpec { n, mode, extent: extent_for(n), seed, ..GenSpec::default() }
}

pub fn index(n: usize, mode: Distribution2d, seed: u64, scoring: ScoringMode) -> CommunityIndex {
    let g = spec(n, mode, seed).generate().expect("generate");
    CommunityIndex::build(g, 1.0, DEFAULT_FANOUT, scoring).expect("build")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(rng: &mut ChaCha8Rng, idx: &CommunityIndex) -> Point {
    let b = idx.graph.bounds();
    Point::new(rng.random_range(b.min_x..=b.max_x), rng.random_range(b.min_y..=b.max_y))
}

pub fn random_vertex_pos(rng: &mut ChaCha8Rng, idx: &CommunityIndex) -> Point {
    let v = rng.random_range(0..idx.graph.vertex_count()) as u32;
    idx.graph.pos(roadcomm::graph::VertexId(v))
}

/// Score of the community at quantile `q` (0 = lowest) against `query`,
/// used to pick thresholds that exercise every pruning branch.
pub fn score_quantile(idx: &CommunityIndex, query: &roadcomm::similarity::QueryCommunity, q: f64) -> f64 {
    let mut s: Vec<f64> =
        idx.store.communities.iter().map(|c| community_sim(c, query, &idx.vectors).unwrap_or(0.0)).collect();
    s.sort_by(f64::total_cmp);
    let i = ((s.len() - 1) as f64 * q).round() as usize;
    s[i]
}

/// Graph from coordinates and edges with no POIs beyond `pois`.
pub fn graph(points: &[(f64, f64)], edges: &[(u32, u32)], m: usize, pois: Vec<PoiRecord>) -> RoadGraph {
    let pts = points.iter().map(|&(x, y)| Point::new(x, y)).collect();
    RoadGraph::from_parts(pts, edges.to_vec(), m, pois).expect("graph")
}

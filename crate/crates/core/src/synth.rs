//! Synthetic planar road networks: uniform or clustered vertices, nearest
//! neighbour edges that never cross, and Poisson POI counts per edge.

use std::collections::HashSet;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{segments_conflict, BucketGrid, Mbr, Point, Shared};
use crate::graph::{EdgeId, GraphError, PoiRecord, RoadGraph};

pub const DEFAULT_EXTENT: f64 = 100.0;
pub const DEFAULT_POI_MEAN: f64 = 3.0;
pub const DEFAULT_POI_TYPES: usize = 4;

/// Nearest neighbours examined per vertex when linking.
const NEIGHBOUR_POOL: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution2d {
    Uniform,
    Clustered,
}

impl FromStr for Distribution2d {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Distribution2d::Uniform),
            "clustered" => Ok(Distribution2d::Clustered),
            o => Err(format!("unknown distribution `{o}` (expected uniform|clustered)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator parameter: {0}")]
    Param(String),
    #[error("could not connect {components} components without crossings")]
    Repair { components: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Full recipe for one synthetic network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpec {
    pub n: usize,
    pub mode: Distribution2d,
    pub clusters: usize,
    pub extent: f64,
    pub deg_min: usize,
    pub deg_max: usize,
    pub poi_types: usize,
    pub poi_mean: f64,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            n: 1000,
            mode: Distribution2d::Uniform,
            clusters: 5,
            extent: DEFAULT_EXTENT,
            deg_min: 3,
            deg_max: 3,
            poi_types: DEFAULT_POI_TYPES,
            poi_mean: DEFAULT_POI_MEAN,
            seed: 1,
        }
    }
}

fn sub_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl GenSpec {
    pub fn generate(&self) -> Result<RoadGraph, SynthError> {
        let pts = gen_vertices(self.n, self.mode, self.clusters, self.extent, self.seed)?;
        let g = gen_edges(pts, self.deg_min, self.deg_max, self.seed)?;
        gen_pois(&g, self.poi_types, self.poi_mean, self.seed)
    }
}

/// `n` distinct points in `[0, extent]^2`.
pub fn gen_vertices(
    n: usize,
    mode: Distribution2d,
    clusters: usize,
    extent: f64,
    seed: u64,
) -> Result<Vec<Point>, SynthError> {
    Ok(gen_vertices_with_seeds(n, mode, clusters, extent, seed)?.0)
}

/// Like [`gen_vertices`], also returning the cluster seed points (empty in
/// uniform mode).
pub fn gen_vertices_with_seeds(
    n: usize,
    mode: Distribution2d,
    clusters: usize,
    extent: f64,
    seed: u64,
) -> Result<(Vec<Point>, Vec<Point>), SynthError> {
    if n < 3 {
        return Err(SynthError::Param(format!("n must be at least 3, got {n}")));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(SynthError::Param(format!("extent must be positive, got {extent}")));
    }
    if mode == Distribution2d::Clustered && clusters == 0 {
        return Err(SynthError::Param("clustered mode needs at least one cluster".into()));
    }
    let mut rng = sub_rng(seed, 0);
    let uniform = |rng: &mut ChaCha8Rng| Point::new(rng.random_range(0.0..=extent), rng.random_range(0.0..=extent));
    let centres: Vec<Point> = match mode {
        Distribution2d::Uniform => Vec::new(),
        Distribution2d::Clustered => (0..clusters).map(|_| uniform(&mut rng)).collect(),
    };
    let sigma = extent / (10.0 * clusters.max(1) as f64);
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    let mut seen = HashSet::with_capacity(n);
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let p = match mode {
            Distribution2d::Uniform => uniform(&mut rng),
            Distribution2d::Clustered => {
                let c = centres[rng.random_range(0..centres.len())];
                loop {
                    let p = Point::new(c.x + normal.sample(&mut rng), c.y + normal.sample(&mut rng));
                    if (0.0..=extent).contains(&p.x) && (0.0..=extent).contains(&p.y) {
                        break p;
                    }
                }
            }
        };
        if seen.insert(((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits())) {
            pts.push(p);
        }
    }
    Ok((pts, centres))
}

struct Linker<'a> {
    pts: &'a [Point],
    edges: Vec<(u32, u32)>,
    adj: Vec<Vec<u32>>,
    edge_grid: BucketGrid<u32>,
}

impl<'a> Linker<'a> {
    fn new(pts: &'a [Point], bounds: Mbr) -> Self {
        Linker {
            pts,
            edges: Vec::new(),
            adj: vec![Vec::new(); pts.len()],
            edge_grid: BucketGrid::new(bounds, pts.len() * 2),
        }
    }

    fn conflicts(&self, a: u32, b: u32) -> bool {
        let (pa, pb) = (self.pts[a as usize], self.pts[b as usize]);
        let mut hit = false;
        self.edge_grid.visit(&Mbr::from_points([pa, pb]), |e| {
            if hit {
                return;
            }
            let (c, d) = self.edges[e as usize];
            let (pc, pd) = (self.pts[c as usize], self.pts[d as usize]);
            let shared = if a == c {
                Some(Shared { pivot: pa, other1: pb, other2: pd })
            } else if a == d {
                Some(Shared { pivot: pa, other1: pb, other2: pc })
            } else if b == c {
                Some(Shared { pivot: pb, other1: pa, other2: pd })
            } else if b == d {
                Some(Shared { pivot: pb, other1: pa, other2: pc })
            } else {
                None
            };
            hit = segments_conflict(&pa, &pb, &pc, &pd, shared);
        });
        hit
    }

    fn try_link(&mut self, a: u32, b: u32) -> bool {
        if a == b || self.adj[a as usize].contains(&b) || self.conflicts(a, b) {
            return false;
        }
        let id = self.edges.len() as u32;
        self.edges.push((a.min(b), a.max(b)));
        self.adj[a as usize].push(b);
        self.adj[b as usize].push(a);
        let m = Mbr::from_points([self.pts[a as usize], self.pts[b as usize]]);
        self.edge_grid.insert(&m, id);
        true
    }
}

/// The `k` nearest other points to `pts[i]`, nearest first (ties by index).
fn nearest(grid: &BucketGrid<u32>, pts: &[Point], i: usize, k: usize) -> Vec<u32> {
    let p = pts[i];
    let mut found: Vec<(f64, u32)> = Vec::new();
    let mut ring = 0;
    loop {
        let inside = grid.visit_ring(&p, ring, |j| {
            if j as usize != i {
                found.push((p.dist(&pts[j as usize]), j));
            }
        });
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let covered = ring as f64 * grid.cell_size();
        if !inside || (found.len() >= k && found[k - 1].0 <= covered) {
            break;
        }
        ring += 1;
    }
    found.truncate(k);
    found.into_iter().map(|(_, j)| j).collect()
}

struct UnionFind(Vec<u32>);

impl UnionFind {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.0[x as usize] != x {
            let up = self.0[self.0[x as usize] as usize];
            self.0[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb) as usize] = ra.min(rb);
        true
    }
}

/// Links each vertex (in random order) to nearby vertices until it reaches a
/// random target degree in `[deg_min, deg_max]`, never creating a crossing,
/// then joins components with the shortest admissible bridges.
pub fn gen_edges(points: Vec<Point>, deg_min: usize, deg_max: usize, seed: u64) -> Result<RoadGraph, SynthError> {
    if deg_min < 1 || deg_max < deg_min {
        return Err(SynthError::Param(format!("bad degree range [{deg_min}, {deg_max}]")));
    }
    let n = points.len();
    if n < 2 {
        return Err(SynthError::Param("need at least two points".into()));
    }
    let bounds = Mbr::from_points(points.iter().copied());
    let mut grid = BucketGrid::new(bounds, n.div_ceil(2));
    for (i, p) in points.iter().enumerate() {
        grid.insert(&Mbr::from_point(*p), i as u32);
    }
    let mut rng = sub_rng(seed, 1);
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(&mut rng);
    let pool = NEIGHBOUR_POOL.max(deg_max * 2).min(n - 1);
    let mut link = Linker::new(&points, bounds);
    for &v in &order {
        let target = rng.random_range(deg_min..=deg_max);
        if link.adj[v as usize].len() >= target {
            continue;
        }
        for u in nearest(&grid, &points, v as usize, pool) {
            if link.adj[v as usize].len() >= target {
                break;
            }
            link.try_link(v, u);
        }
    }
    connect_components(&mut link, &grid, pool)?;
    Ok(RoadGraph::from_parts(points.clone(), link.edges, 0, Vec::new())?)
}

fn connect_components(link: &mut Linker<'_>, grid: &BucketGrid<u32>, pool: usize) -> Result<(), SynthError> {
    let n = link.pts.len();
    let mut uf = UnionFind((0..n as u32).collect());
    let mut comps = n;
    for &(a, b) in &link.edges {
        if uf.union(a, b) {
            comps -= 1;
        }
    }
    let mut k = pool;
    while comps > 1 {
        let mut cands: Vec<(f64, u32, u32)> = Vec::new();
        for i in 0..n {
            for j in nearest(grid, link.pts, i, k) {
                if (i as u32) < j && uf.find(i as u32) != uf.find(j) {
                    cands.push((link.pts[i].dist(&link.pts[j as usize]), i as u32, j));
                }
            }
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        for (_, a, b) in cands {
            if uf.find(a) != uf.find(b) && link.try_link(a, b) {
                uf.union(a, b);
                comps -= 1;
            }
        }
        if comps > 1 {
            if k >= n - 1 {
                return Err(SynthError::Repair { components: comps });
            }
            k = (k * 2).min(n - 1);
        }
    }
    Ok(())
}

/// Copy of `g` with Poisson(`mean_per_edge`) POIs per edge, types uniform over
/// `poi_type_count`, fractional offsets uniform along the edge.
pub fn gen_pois(g: &RoadGraph, poi_type_count: usize, mean_per_edge: f64, seed: u64) -> Result<RoadGraph, SynthError> {
    if !(mean_per_edge >= 0.0 && mean_per_edge.is_finite()) {
        return Err(SynthError::Param(format!("mean_per_edge must be >= 0, got {mean_per_edge}")));
    }
    if poi_type_count == 0 && mean_per_edge > 0.0 {
        return Err(SynthError::Param("POIs need at least one type".into()));
    }
    let mut rng = sub_rng(seed, 2);
    let poisson = (mean_per_edge > 0.0).then(|| Poisson::new(mean_per_edge).expect("positive mean"));
    let mut pois = Vec::new();
    for e in g.edges() {
        let count = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as u64);
        for _ in 0..count {
            pois.push(PoiRecord {
                edge: EdgeId(e.id.0),
                poi_type: rng.random_range(0..poi_type_count as u32),
                offset: rng.random_range(0.0..=1.0),
            });
        }
    }
    let points = g.vertices().iter().map(|v| v.pos()).collect();
    let edges = g.edges().iter().map(|e| (e.u.0, e.v.0)).collect();
    Ok(RoadGraph::from_parts(points, edges, poi_type_count, pois)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_planarity;

    #[test]
    fn vertices_are_reproducible_and_distinct() {
        let a = gen_vertices(3, Distribution2d::Uniform, 0, 10.0, 7).unwrap();
        let b = gen_vertices(3, Distribution2d::Uniform, 0, 10.0, 7).unwrap();
        assert_eq!(a, b);
        assert!(a[0] != a[1] && a[1] != a[2] && a[0] != a[2]);
        assert!(gen_vertices(2, Distribution2d::Uniform, 0, 10.0, 7).is_err());
        assert!(gen_vertices(10, Distribution2d::Clustered, 0, 10.0, 7).is_err());
    }

    #[test]
    fn clustered_points_stay_near_their_seeds() {
        let extent = 100.0;
        let (pts, seeds) = gen_vertices_with_seeds(1000, Distribution2d::Clustered, 5, extent, 3).unwrap();
        let sigma = extent / 50.0;
        let near = pts
            .iter()
            .filter(|p| seeds.iter().any(|s| s.dist(p) <= 3.0 * sigma))
            .count();
        assert!(near as f64 >= 0.9 * pts.len() as f64, "{near}");
        assert!(pts.iter().all(|p| (0.0..=extent).contains(&p.x) && (0.0..=extent).contains(&p.y)));
    }

    #[test]
    fn small_graph_is_planar_and_connected() {
        let pts = gen_vertices(400, Distribution2d::Uniform, 0, 11.5, 5).unwrap();
        let g = gen_edges(pts, 2, 4, 5).unwrap();
        assert!(validate_planarity(&g).is_planar());
        assert_eq!(g.component_count(), 1);
    }

    #[test]
    fn zero_mean_gives_zero_vectors() {
        let pts = gen_vertices(50, Distribution2d::Uniform, 0, 4.0, 9).unwrap();
        let g = gen_edges(pts, 3, 3, 9).unwrap();
        let g = gen_pois(&g, 4, 0.0, 9).unwrap();
        assert!(g.edges().iter().all(|e| e.pois.len() == 4 && e.pois.total() == 0));
    }

    #[test]
    fn poisson_total_is_concentrated() {
        let spec = GenSpec { n: 6000, extent: 44.7, ..GenSpec::default() };
        let pts = gen_vertices(spec.n, spec.mode, 0, spec.extent, 11).unwrap();
        let g = gen_edges(pts, 3, 3, 11).unwrap();
        let g = gen_pois(&g, 4, 3.0, 11).unwrap();
        let e = g.edge_count() as f64;
        let total: u64 = g.edges().iter().map(|e| e.pois.total()).sum();
        assert!((total as f64 - 3.0 * e).abs() <= 3.0 * (3.0 * e).sqrt(), "{total} vs {e}");
        assert_eq!(total as usize, g.pois().len());
    }
}

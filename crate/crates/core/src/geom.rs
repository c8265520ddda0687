//! Planar geometry primitives shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

/// Collinearity tolerance for orientation tests.
pub const ORIENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(&self, other: &Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Minimum bounding rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mbr {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Mbr {
    pub fn from_point(p: Point) -> Self {
        Mbr {
            min_x: p.x,
            min_y: p.y,
            max_x: p.x,
            max_y: p.y,
        }
    }

    /// Smallest rectangle bounding all points. Panics on an empty iterator.
    pub fn from_points<I: IntoIterator<Item = Point>>(points: I) -> Self {
        let mut it = points.into_iter();
        let first = it.next().expect("Mbr::from_points on empty input");
        it.fold(Mbr::from_point(first), |acc, p| acc.expand_point(p))
    }

    pub fn expand_point(mut self, p: Point) -> Self {
        self.min_x = self.min_x.min(p.x);
        self.min_y = self.min_y.min(p.y);
        self.max_x = self.max_x.max(p.x);
        self.max_y = self.max_y.max(p.y);
        self
    }

    pub fn union(&self, other: &Mbr) -> Mbr {
        Mbr {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn contains(&self, other: &Mbr) -> bool {
        self.min_x <= other.min_x
            && self.min_y <= other.min_y
            && self.max_x >= other.max_x
            && self.max_y >= other.max_y
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
        )
    }

    /// Distance from `p` to the closest point of the rectangle (0 inside).
    pub fn mindist(&self, p: &Point) -> f64 {
        let dx = (self.min_x - p.x).max(0.0).max(p.x - self.max_x);
        let dy = (self.min_y - p.y).max(0.0).max(p.y - self.max_y);
        dx.hypot(dy)
    }

    /// Distance from `p` to the farthest corner.
    pub fn maxdist(&self, p: &Point) -> f64 {
        let dx = (p.x - self.min_x).abs().max((p.x - self.max_x).abs());
        let dy = (p.y - self.min_y).abs().max((p.y - self.max_y).abs());
        dx.hypot(dy)
    }

    fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.min_x, self.min_y),
            Point::new(self.max_x, self.min_y),
            Point::new(self.max_x, self.max_y),
            Point::new(self.min_x, self.max_y),
        ]
    }

    /// Distance from segment `ab` to the rectangle (0 when they touch).
    pub fn segment_dist(&self, a: &Point, b: &Point) -> f64 {
        if self.contains_point(a) || self.contains_point(b) {
            return 0.0;
        }
        let c = self.corners();
        let mut best = f64::INFINITY;
        for i in 0..4 {
            let (p, q) = (c[i], c[(i + 1) % 4]);
            best = best.min(segment_segment_dist(a, b, &p, &q));
            if best == 0.0 {
                return 0.0;
            }
        }
        best
    }
}

/// Signed area of the parallelogram (b - a) x (c - a); positive for a left turn.
pub fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    b.sub(a).cross(&c.sub(a))
}

fn orient_sign(a: &Point, b: &Point, c: &Point) -> i8 {
    let o = orient(a, b, c);
    if o > ORIENT_EPS {
        1
    } else if o < -ORIENT_EPS {
        -1
    } else {
        0
    }
}

/// `p` collinear with `ab` and inside its bounding box.
fn on_segment(a: &Point, b: &Point, p: &Point) -> bool {
    p.x >= a.x.min(b.x) - ORIENT_EPS
        && p.x <= a.x.max(b.x) + ORIENT_EPS
        && p.y >= a.y.min(b.y) - ORIENT_EPS
        && p.y <= a.y.max(b.y) + ORIENT_EPS
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let o1 = orient_sign(a, b, c);
    let o2 = orient_sign(a, b, d);
    let o3 = orient_sign(c, d, a);
    let o4 = orient_sign(c, d, b);
    if o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0 {
        return true;
    }
    (o1 == 0 && on_segment(a, b, c))
        || (o2 == 0 && on_segment(a, b, d))
        || (o3 == 0 && on_segment(c, d, a))
        || (o4 == 0 && on_segment(c, d, b))
}

/// Embedding conflict between two road segments `ab` and `cd`.
///
/// `shared` says whether the segments have a common endpoint vertex (the
/// caller knows this from vertex ids, avoiding float equality). Segments
/// sharing an endpoint conflict only when they overlap collinearly.
pub fn segments_conflict(a: &Point, b: &Point, c: &Point, d: &Point, shared: Option<Shared>) -> bool {
    match shared {
        None => segments_intersect(a, b, c, d),
        Some(Shared { pivot, other1, other2 }) => {
            orient_sign(&pivot, &other1, &other2) == 0
                && other1.sub(&pivot).dot(&other2.sub(&pivot)) > 0.0
        }
    }
}

/// Shared-endpoint description for [`segments_conflict`].
#[derive(Debug, Clone, Copy)]
pub struct Shared {
    pub pivot: Point,
    pub other1: Point,
    pub other2: Point,
}

pub fn point_segment_dist(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(&ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(&ab) / len2).clamp(0.0, 1.0);
    p.dist(&a.lerp(b, t))
}

pub fn segment_segment_dist(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_dist(a, c, d)
        .min(point_segment_dist(b, c, d))
        .min(point_segment_dist(c, a, b))
        .min(point_segment_dist(d, a, b))
}

/// Shoelace signed area of a closed polygon (positive when counter-clockwise).
pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let (p, q) = (points[i], points[(i + 1) % n]);
        acc += p.x * q.y - q.x * p.y;
    }
    0.5 * acc
}

/// Closed parameter interval `[lo, hi]` on a line.
pub type Span = (f64, f64);

/// Parameters `t` (unbounded) where `a + t (b - a)` lies within distance `r`
/// of `center`.
pub fn line_disc_span(a: &Point, b: &Point, center: &Point, r: f64) -> Option<Span> {
    let d = b.sub(a);
    let f = a.sub(center);
    let qa = d.dot(&d);
    let qb = 2.0 * d.dot(&f);
    let qc = f.dot(&f) - r * r;
    if qa == 0.0 {
        return (qc <= 0.0).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // numerically stable root pair
    let sign = if qb >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (qb + sign * sq);
    let (t1, t2) = if q != 0.0 {
        (q / qa, qc / q)
    } else {
        (-qb / (2.0 * qa), -qb / (2.0 * qa))
    };
    Some((t1.min(t2), t1.max(t2)))
}

/// Parameters where `alpha + beta t` lies in `[lo, hi]`.
fn linear_slab(alpha: f64, beta: f64, lo: f64, hi: f64) -> Option<Span> {
    if beta.abs() < 1e-300 {
        return (alpha >= lo && alpha <= hi).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let t1 = (lo - alpha) / beta;
    let t2 = (hi - alpha) / beta;
    Some((t1.min(t2), t1.max(t2)))
}

fn intersect_span(a: Span, b: Span) -> Option<Span> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (lo <= hi).then_some((lo, hi))
}

/// Parameters `t` (unbounded) where the point `a + t (b - a)` is within
/// distance `r` of segment `pq`: the line clipped by the capsule around `pq`.
pub fn line_capsule_span(a: &Point, b: &Point, p: &Point, q: &Point, r: f64) -> Option<Span> {
    let mut best: Option<Span> = None;
    let mut merge = |s: Option<Span>| {
        if let Some(s) = s {
            best = Some(match best {
                None => s,
                Some(cur) => (cur.0.min(s.0), cur.1.max(s.1)),
            });
        }
    };
    merge(line_disc_span(a, b, p, r));
    merge(line_disc_span(a, b, q, r));
    let e = q.sub(p);
    let len = e.dot(&e).sqrt();
    if len > 0.0 {
        let u = Point::new(e.x / len, e.y / len);
        let n = Point::new(-u.y, u.x);
        let d = b.sub(a);
        let f = a.sub(p);
        let along = linear_slab(f.dot(&u), d.dot(&u), 0.0, len);
        let across = linear_slab(f.dot(&n), d.dot(&n), -r, r);
        if let (Some(s1), Some(s2)) = (along, across) {
            merge(intersect_span(s1, s2));
        }
    }
    // The capsule is convex, so the union of its three pieces along a line
    // is a single interval.
    best
}

/// Uniform bucket grid over a square domain, used for neighbour candidate
/// lookups and crossing checks during graph generation and validation.
#[derive(Debug, Clone)]
pub struct BucketGrid<T> {
    origin: Point,
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<T>>,
}

impl<T: Copy + PartialEq> BucketGrid<T> {
    pub fn new(bounds: Mbr, target_cells: usize) -> Self {
        let w = (bounds.max_x - bounds.min_x).max(1e-9);
        let h = (bounds.max_y - bounds.min_y).max(1e-9);
        let cell = ((w * h) / target_cells.max(1) as f64).sqrt().max(1e-9);
        let cols = ((w / cell).ceil() as usize).max(1);
        let rows = ((h / cell).ceil() as usize).max(1);
        BucketGrid {
            origin: Point::new(bounds.min_x, bounds.min_y),
            cell,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    fn col(&self, x: f64) -> usize {
        (((x - self.origin.x) / self.cell).floor().max(0.0) as usize).min(self.cols - 1)
    }

    fn row(&self, y: f64) -> usize {
        (((y - self.origin.y) / self.cell).floor().max(0.0) as usize).min(self.rows - 1)
    }

    /// Registers `item` in every cell overlapped by `mbr`.
    pub fn insert(&mut self, mbr: &Mbr, item: T) {
        for r in self.row(mbr.min_y)..=self.row(mbr.max_y) {
            for c in self.col(mbr.min_x)..=self.col(mbr.max_x) {
                self.buckets[r * self.cols + c].push(item);
            }
        }
    }

    /// Calls `f` for every item registered in a cell overlapped by `mbr`.
    /// Items spanning several cells may be reported more than once.
    pub fn visit(&self, mbr: &Mbr, mut f: impl FnMut(T)) {
        for r in self.row(mbr.min_y)..=self.row(mbr.max_y) {
            for c in self.col(mbr.min_x)..=self.col(mbr.max_x) {
                for &item in &self.buckets[r * self.cols + c] {
                    f(item);
                }
            }
        }
    }

    /// Items in the ring of cells at Chebyshev distance exactly `ring` from
    /// the cell containing `p`. Returns false once the ring lies entirely
    /// outside the grid.
    pub fn visit_ring(&self, p: &Point, ring: usize, mut f: impl FnMut(T)) -> bool {
        let (pc, pr) = (self.col(p.x) as isize, self.row(p.y) as isize);
        let ring = ring as isize;
        let mut any = false;
        for r in (pr - ring)..=(pr + ring) {
            if r < 0 || r >= self.rows as isize {
                continue;
            }
            for c in (pc - ring)..=(pc + ring) {
                if c < 0 || c >= self.cols as isize {
                    continue;
                }
                if (r - pr).abs() != ring && (c - pc).abs() != ring {
                    continue;
                }
                any = true;
                for &item in &self.buckets[r as usize * self.cols + c as usize] {
                    f(item);
                }
            }
        }
        any
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn crossing_diagonals_intersect() {
        assert!(segments_intersect(&p(0., 0.), &p(1., 1.), &p(0., 1.), &p(1., 0.)));
        assert!(!segments_intersect(&p(0., 0.), &p(1., 0.), &p(0., 1.), &p(1., 1.)));
        // T-touch counts
        assert!(segments_intersect(&p(0., 0.), &p(2., 0.), &p(1., 0.), &p(1., 1.)));
    }

    #[test]
    fn shared_endpoint_overlap() {
        let shared = Shared { pivot: p(0., 0.), other1: p(2., 0.), other2: p(1., 0.) };
        assert!(segments_conflict(&p(0., 0.), &p(2., 0.), &p(0., 0.), &p(1., 0.), Some(shared)));
        let shared = Shared { pivot: p(0., 0.), other1: p(2., 0.), other2: p(-1., 0.) };
        assert!(!segments_conflict(&p(0., 0.), &p(2., 0.), &p(0., 0.), &p(-1., 0.), Some(shared)));
    }

    #[test]
    fn point_segment_distance_cases() {
        assert_eq!(point_segment_dist(&p(0.5, 0.0), &p(0., 0.), &p(1., 0.)), 0.0);
        assert!((point_segment_dist(&p(0.5, 2.0), &p(0., 0.), &p(1., 0.)) - 2.0).abs() < 1e-15);
        assert!((point_segment_dist(&p(4.0, 4.0), &p(0., 0.), &p(1., 0.)) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn mbr_distances() {
        let m = Mbr { min_x: 0., min_y: 0., max_x: 2., max_y: 1. };
        assert_eq!(m.mindist(&p(1., 0.5)), 0.0);
        assert!((m.mindist(&p(5., 5.)) - 5.0).abs() < 1e-12);
        assert!((m.maxdist(&p(0., 0.)) - 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(m.segment_dist(&p(-1., 0.5), &p(3., 0.5)), 0.0);
        assert!((m.segment_dist(&p(-1., 3.), &p(3., 3.)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn signed_area_orientation() {
        let sq = [p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)];
        assert!((signed_area(&sq) - 1.0).abs() < 1e-15);
        let rev: Vec<_> = sq.iter().rev().copied().collect();
        assert!((signed_area(&rev) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn capsule_span_matches_sampling() {
        let (a, b) = (p(0., 0.), p(10., 0.));
        let (e0, e1) = (p(3., 1.), p(5., 3.));
        let r = 1.5;
        let (lo, hi) = line_capsule_span(&a, &b, &e0, &e1, r).unwrap();
        let n = 100_000;
        let mut s_lo = f64::INFINITY;
        let mut s_hi = f64::NEG_INFINITY;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            if point_segment_dist(&a.lerp(&b, t), &e0, &e1) <= r {
                s_lo = s_lo.min(t);
                s_hi = s_hi.max(t);
            }
        }
        assert!((lo - s_lo).abs() < 1e-4, "{lo} vs {s_lo}");
        assert!((hi - s_hi).abs() < 1e-4, "{hi} vs {s_hi}");
    }

    #[test]
    fn disc_span_miss_and_hit() {
        assert!(line_disc_span(&p(0., 0.), &p(1., 0.), &p(0.5, 3.), 1.0).is_none());
        let (lo, hi) = line_disc_span(&p(0., 0.), &p(1., 0.), &p(0.5, 0.), 0.25).unwrap();
        assert!((lo - 0.25).abs() < 1e-12 && (hi - 0.75).abs() < 1e-12);
    }
}

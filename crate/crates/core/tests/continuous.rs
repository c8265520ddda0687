mod common;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use roadcomm::continuous::{
    baseline_ctopk, ctopk_search, find_split_points, interval_sets, pattern_spans, ContinuousOptions, EventKind,
    QuerySegment, SplitGeometry,
};
use roadcomm::geom::Point;
use roadcomm::index::mindist_point_pattern;
use roadcomm::query::{extract_query_community_scan, query_from_patterns, topk_search, SearchOptions};
use roadcomm::similarity::ScoringMode;
use roadcomm::synth::Distribution2d;
use roadcomm::unit_pattern::PatternId;
use roadcomm::CommunityIndex;

fn random_segment(rng: &mut ChaCha8Rng, idx: &CommunityIndex, len: f64) -> QuerySegment {
    let a = common::random_point(rng, idx);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    QuerySegment { q_st: a, q_ed: Point::new(a.x + len * phi.cos(), a.y + len * phi.sin()), r: 1.0 }
}

fn direct_set(idx: &CommunityIndex, p: Point, r: f64) -> BTreeSet<PatternId> {
    extract_query_community_scan(idx, p, r).map(|q| q.pattern_ids().collect()).unwrap_or_default()
}

#[test]
fn spans_match_dense_sampling() {
    let idx = common::index(800, Distribution2d::Uniform, 31, ScoringMode::Dot);
    let mut rng = common::rng(31);
    let samples = 10_000;
    for _ in 0..4 {
        let seg = random_segment(&mut rng, &idx, 4.0);
        let mut io = 0;
        let events = find_split_points(&idx, &seg, SplitGeometry::PerEdge, &mut io);
        let touched: BTreeSet<PatternId> = events.iter().map(|e| e.pattern).collect();
        // patterns near the segment but without events must never be active
        let near: Vec<PatternId> = idx
            .patterns
            .iter()
            .filter(|p| p.mbr.segment_dist(&seg.q_st, &seg.q_ed) <= 2.0 * seg.r)
            .map(|p| p.id)
            .collect();
        for p in near {
            let spans = pattern_spans(&idx, &seg, p, SplitGeometry::PerEdge);
            assert_eq!(spans.is_empty(), !touched.contains(&p));
            let pat = &idx.patterns[p.index()];
            let inside = |t: f64| mindist_point_pattern(&idx.graph, &seg.at(t), pat) <= seg.r;
            for i in 0..=samples {
                let t = i as f64 / samples as f64;
                let in_span = spans.iter().any(|&(lo, hi)| lo <= t && t <= hi);
                if in_span != inside(t) {
                    let gap = spans.iter().map(|&(lo, hi)| (t - lo).abs().min((t - hi).abs())).fold(f64::INFINITY, f64::min);
                    assert!(gap <= 1e-4, "pattern {p:?} at t={t}: span {in_span}, sampled {}", inside(t));
                }
            }
        }
    }
}

#[test]
fn events_alternate_per_pattern() {
    let idx = common::index(1000, Distribution2d::Clustered, 32, ScoringMode::Dot);
    let mut rng = common::rng(32);
    for len in [2.0, 4.0, 6.0] {
        let seg = random_segment(&mut rng, &idx, len);
        let mut io = 0;
        let mut per: BTreeMap<PatternId, Vec<(f64, EventKind)>> = BTreeMap::new();
        let events = find_split_points(&idx, &seg, SplitGeometry::PerEdge, &mut io);
        assert!(events.windows(2).all(|w| w[0].t <= w[1].t));
        for e in events {
            assert!((0.0..=1.0).contains(&e.t));
            per.entry(e.pattern).or_default().push((e.t, e.kind));
        }
        for evs in per.values() {
            assert_eq!(evs.len() % 2, 0);
            for (i, (_, k)) in evs.iter().enumerate() {
                assert_eq!(*k, if i % 2 == 0 { EventKind::Enter } else { EventKind::Leave });
            }
        }
    }
}

#[test]
fn interval_sets_are_stable_inside() {
    let idx = common::index(700, Distribution2d::Uniform, 33, ScoringMode::Dot);
    let mut rng = common::rng(33);
    for len in [2.0, 4.0, 6.0] {
        let seg = random_segment(&mut rng, &idx, len);
        let mut io = 0;
        let sets = interval_sets(&idx, &seg, SplitGeometry::PerEdge, &mut io).unwrap();
        assert_eq!(sets.first().unwrap().0 .0, 0.0);
        assert_eq!(sets.last().unwrap().0 .1, 1.0);
        for w in sets.windows(2) {
            assert_eq!(w[0].0 .1, w[1].0 .0);
        }
        for ((lo, hi), u) in &sets {
            for _ in 0..100 {
                let t = lo + (hi - lo) * rng.random_range(1e-6..1.0 - 1e-6);
                assert_eq!(&direct_set(&idx, seg.at(t), seg.r), u, "t={t} in [{lo}, {hi}]");
            }
        }
    }
}

#[test]
fn batched_answers_match_independent_searches() {
    let idx = common::index(900, Distribution2d::Clustered, 34, ScoringMode::Dot);
    let mut rng = common::rng(34);
    for (i, len) in [2.0, 4.0, 6.0, 4.0].into_iter().enumerate() {
        let seg = random_segment(&mut rng, &idx, len);
        let theta = [0.6, 20.0, 60.0, 120.0][i];
        let res = ctopk_search(&idx, &seg, None, 5, theta, ContinuousOptions::default()).unwrap();
        for iv in &res.intervals {
            if iv.active_patterns.is_empty() {
                assert!(iv.result.entries.is_empty());
                continue;
            }
            let mid = seg.at(0.5 * (iv.interval[0] + iv.interval[1]));
            let q = query_from_patterns(&idx, mid, seg.r, iv.active_patterns.iter().copied());
            let solo = topk_search(&idx, &q, seg.midpoint(), 5, theta, SearchOptions::default());
            assert_eq!(iv.result.entries, solo.entries);
        }
    }
}

#[test]
fn ctopk_equals_baseline_with_both_geometries() {
    let idx = common::index(600, Distribution2d::Uniform, 35, ScoringMode::Cosine);
    let mut rng = common::rng(35);
    for geometry in [SplitGeometry::PerEdge, SplitGeometry::PerVertex] {
        for len in [2.0, 6.0] {
            let seg = random_segment(&mut rng, &idx, len);
            let v_q = Some(common::random_point(&mut rng, &idx));
            let opts = ContinuousOptions { geometry, ..Default::default() };
            let got = ctopk_search(&idx, &seg, v_q, 4, 0.8, opts).unwrap();
            let want = baseline_ctopk(&idx, &seg, v_q, 4, 0.8, geometry).unwrap();
            assert_eq!(got.intervals.len(), want.intervals.len());
            for (a, b) in got.intervals.iter().zip(&want.intervals) {
                assert_eq!(a.interval, b.interval);
                assert_eq!(a.active_patterns, b.active_patterns);
                assert_eq!(a.result.entries, b.result.entries);
            }
        }
    }
}

#[test]
fn near_degenerate_segment_matches_point_query() {
    let idx = common::index(500, Distribution2d::Uniform, 36, ScoringMode::Dot);
    let mut rng = common::rng(36);
    let mut checked = 0;
    while checked < 5 {
        let seg = random_segment(&mut rng, &idx, 1e-7);
        let res = ctopk_search(&idx, &seg, None, 3, 0.6, ContinuousOptions::default()).unwrap();
        if res.intervals.len() != 1 || res.intervals[0].active_patterns.is_empty() {
            continue;
        }
        let q = extract_query_community_scan(&idx, seg.midpoint(), seg.r).unwrap();
        let want = topk_search(&idx, &q, seg.midpoint(), 3, 0.6, SearchOptions::default());
        assert_eq!(res.intervals[0].result.entries, want.entries);
        checked += 1;
    }
}

#[test]
fn degenerate_segment_is_rejected() {
    let idx = common::index(200, Distribution2d::Uniform, 37, ScoringMode::Dot);
    let p = Point::new(1.0, 1.0);
    let seg = QuerySegment { q_st: p, q_ed: p, r: 1.0 };
    assert!(ctopk_search(&idx, &seg, None, 3, 0.6, ContinuousOptions::default()).is_err());
}

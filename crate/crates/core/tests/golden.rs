mod common;

use std::collections::BTreeSet;

use roadcomm::continuous::{pattern_spans, sweep_pattern_sets, EventKind, QuerySegment, SplitEvent, SplitGeometry};
use roadcomm::geom::Point;
use roadcomm::graph::{EdgeId, PoiRecord, PoiVec, VertexId};
use roadcomm::index::DEFAULT_FANOUT;
use roadcomm::query::{rank_candidates, CommunityScorer};
use roadcomm::similarity::{dot_sim, groups_ub, ScoringMode, TypeGroup};
use roadcomm::unit_pattern::{detect_unit_patterns, type_histogram, PatternId, PatternType};
use roadcomm::CommunityIndex;

struct Table(Vec<(f64, f64)>);

impl CommunityScorer for Table {
    fn upper_bound(&self, v: VertexId) -> f64 {
        self.0[v.index()].0
    }
    fn score(&self, v: VertexId) -> f64 {
        self.0[v.index()].1
    }
}

#[test]
fn edge_pattern_score_is_seven() {
    let q = PoiVec(vec![2, 2, 1, 1]);
    let c = PoiVec(vec![2, 1, 1, 0]);
    assert_eq!(dot_sim(&q, &c).unwrap(), 7.0);
}

#[test]
fn member_scores_and_max_vector_bound() {
    let c1 = PoiVec(vec![2, 5, 0, 2]);
    let c2 = PoiVec(vec![4, 3, 1, 2]);
    let q = PoiVec(vec![3, 3, 3, 3]);
    assert_eq!(dot_sim(&c1, &q).unwrap(), 27.0);
    assert_eq!(dot_sim(&c2, &q).unwrap(), 30.0);
    let mut max = c1.clone();
    max.max_assign(&c2);
    assert_eq!(max, PoiVec(vec![4, 5, 1, 2]));
    assert_eq!(dot_sim(&max, &q).unwrap(), 36.0);

    let vecs: Vec<Vec<f64>> = [&c1, &c2, &q].iter().map(|v| v.0.iter().map(|&x| x as f64).collect()).collect();
    let cg = TypeGroup::new(PatternType::Delta, vec![PatternId(0), PatternId(1)], &vecs);
    let qg = TypeGroup::new(PatternType::Delta, vec![PatternId(2)], &vecs);
    // two members against one query pattern, one type: bound 2 * 36 / 1
    assert_eq!(groups_ub(&[cg], &[qg]), 72.0);
}

#[test]
fn nearest_qualifying_community_wins() {
    // C1..C4 at ids 0..3, scores 0.7, 0.5, 0.35, 0.5
    let table = Table(vec![(0.7, 0.7), (0.5, 0.5), (0.35, 0.35), (0.5, 0.5)]);
    let list = [(0.2, VertexId(1)), (0.4, VertexId(3)), (0.55, VertexId(2)), (0.6, VertexId(0))];
    let res = rank_candidates(&list, 1, 0.5, table);
    assert_eq!(res.centers(), vec![VertexId(1)]);
    assert_eq!(res.entries[0].score, 0.5);
}

struct NoScoringPast(Vec<(f64, f64)>, usize);

impl CommunityScorer for NoScoringPast {
    fn upper_bound(&self, v: VertexId) -> f64 {
        assert!(v.index() < self.1, "community {v:?} should be pruned by distance");
        self.0[v.index()].0
    }
    fn score(&self, v: VertexId) -> f64 {
        assert!(v.index() < self.1, "community {v:?} should be pruned by distance");
        self.0[v.index()].1
    }
}

#[test]
fn second_distance_prunes_farther_communities() {
    let scores = vec![(0.9, 0.8); 4];
    let list = [(0.3, VertexId(0)), (0.4, VertexId(1)), (0.7, VertexId(2)), (0.9, VertexId(3))];
    let res = rank_candidates(&list, 2, 0.5, NoScoringPast(scores, 2));
    assert_eq!(res.centers(), vec![VertexId(0), VertexId(1)]);
    assert_eq!(res.stats.pruned_by_distance, 2);
    assert_eq!(res.stats.accepted, 2);
}

#[test]
fn grid_two_by_two_has_four_rectangles() {
    let mut pts = Vec::new();
    for y in 0..3 {
        for x in 0..3 {
            pts.push((x as f64, y as f64));
        }
    }
    let mut edges = Vec::new();
    for y in 0..3u32 {
        for x in 0..3u32 {
            let i = y * 3 + x;
            if x < 2 {
                edges.push((i, i + 1));
            }
            if y < 2 {
                edges.push((i, i + 3));
            }
        }
    }
    let g = common::graph(&pts, &edges, 1, Vec::new());
    let h = type_histogram(&detect_unit_patterns(&g).unwrap());
    assert_eq!(h.into_iter().collect::<Vec<_>>(), vec![(PatternType::Rectangle, 4)]);
}

#[test]
fn triangle_with_dangle() {
    let g = common::graph(&[(0.0, 0.0), (2.0, 0.0), (1.0, 1.5), (3.0, 0.5)], &[(0, 1), (1, 2), (2, 0), (1, 3)], 1, Vec::new());
    let h = type_histogram(&detect_unit_patterns(&g).unwrap());
    assert_eq!(h.into_iter().collect::<Vec<_>>(), vec![(PatternType::Edge, 1), (PatternType::Delta, 1)]);
}

#[test]
fn partially_covered_rectangle_joins_whole() {
    // rectangle v0..v3 with a tail off v3; community at the tail end only
    // touches one rectangle corner
    let pts = [(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0), (-1.0, 5.0)];
    let edges = [(0, 1), (1, 2), (2, 3), (3, 0), (3, 4)];
    let pois = vec![
        PoiRecord { edge: EdgeId(0), poi_type: 0, offset: 0.5 },
        PoiRecord { edge: EdgeId(1), poi_type: 1, offset: 0.5 },
    ];
    let g = common::graph(&pts, &edges, 2, pois);
    let idx = CommunityIndex::build(g, 1.5, DEFAULT_FANOUT, ScoringMode::Dot).unwrap();
    let c = idx.store.get(VertexId(4));
    let rect = c.group(PatternType::Rectangle).expect("rectangle in community");
    let p = &idx.patterns[rect.members[0].index()];
    assert_eq!(p.edge_ids.len(), 4);
    assert_eq!(p.vec, PoiVec(vec![1, 1]));
    assert_eq!(c.count(PatternType::Edge), 1);
}

#[test]
fn triangle_vertex_circles_union() {
    let g = common::graph(&[(3.0, 0.5), (4.0, 0.5), (3.5, 3.0)], &[(0, 1), (1, 2), (2, 0)], 1, Vec::new());
    let idx = CommunityIndex::build(g, 1.0, DEFAULT_FANOUT, ScoringMode::Dot).unwrap();
    let seg = QuerySegment { q_st: Point::new(0.0, 0.0), q_ed: Point::new(10.0, 0.0), r: 1.0 };
    let tri = idx.patterns.iter().find(|p| p.ptype == PatternType::Delta).unwrap().id;
    let spans = pattern_spans(&idx, &seg, tri, SplitGeometry::PerVertex);
    let h = 0.75f64.sqrt();
    assert_eq!(spans.len(), 1);
    assert!((spans[0].0 - (3.0 - h) / 10.0).abs() < 1e-12);
    assert!((spans[0].1 - (4.0 + h) / 10.0).abs() < 1e-12);
}

#[test]
fn single_enter_leave_gives_three_intervals() {
    let u0: BTreeSet<PatternId> = [PatternId(0)].into();
    let p = PatternId(5);
    let ev = [
        SplitEvent { t: 0.3, kind: EventKind::Enter, pattern: p },
        SplitEvent { t: 0.7, kind: EventKind::Leave, pattern: p },
    ];
    let out = sweep_pattern_sets(&ev, &u0).unwrap();
    let with_p: BTreeSet<PatternId> = [PatternId(0), p].into();
    assert_eq!(out, vec![((0.0, 0.3), u0.clone()), ((0.3, 0.7), with_p), ((0.7, 1.0), u0)]);
}

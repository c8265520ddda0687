mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use roadcomm::geom::Point;
use roadcomm::graph::{validate_planarity, PoiVec, VertexId};
use roadcomm::index::{mindist_point_pattern, NodeKind};
use roadcomm::query::{
    answer_baseline, answer_topk, baseline_topk, extract_query_community_scan, topk_search, SearchOptions, Strategy as Search,
};
use roadcomm::similarity::{dot_sim, groups_sim, groups_ub, ScoringMode, TypeGroup};
use roadcomm::synth::Distribution2d;
use roadcomm::unit_pattern::{detect_unit_patterns, PatternId, PatternType};

fn poi(m: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..8, m)
}

/// Random community and query groups over shared pattern vectors.
fn groups_case() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<TypeGroup>, Vec<TypeGroup>)> {
    let types = [PatternType::Edge, PatternType::Delta, PatternType::Rectangle, PatternType::Pentagon];
    (prop::collection::vec((0usize..6, 1usize..4), 4), prop::collection::vec(poi(4), 40)).prop_map(move |(counts, vecs)| {
        let vecs: Vec<Vec<f64>> = vecs.into_iter().map(|v| v.into_iter().map(f64::from).collect()).collect();
        let mut next = 0u32;
        let mut take = |n: usize| -> Vec<PatternId> {
            let out = (next..next + n as u32).map(PatternId).collect();
            next += n as u32;
            out
        };
        let mut c = Vec::new();
        let mut q = Vec::new();
        for (t, &(nc, nq)) in types.iter().zip(&counts) {
            if nc > 0 {
                c.push(TypeGroup::new(*t, take(nc), &vecs));
            }
            if t != &PatternType::Pentagon || nq > 2 {
                q.push(TypeGroup::new(*t, take(nq), &vecs));
            }
        }
        (vecs, c, q)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn dot_sim_symmetric(a in poi(5), b in poi(5)) {
        let (a, b) = (PoiVec(a), PoiVec(b));
        prop_assert_eq!(dot_sim(&a, &b).unwrap(), dot_sim(&b, &a).unwrap());
    }

    #[test]
    fn dot_sim_monotone(a in poi(5), b in poi(5), extra in poi(5)) {
        let (a, b) = (PoiVec(a), PoiVec(b));
        let mut bigger = a.clone();
        bigger.add_assign(&PoiVec(extra));
        prop_assert!(dot_sim(&bigger, &b).unwrap() >= dot_sim(&a, &b).unwrap());
    }

    #[test]
    fn upper_bound_dominates_exact((vecs, c, q) in groups_case()) {
        let exact = groups_sim(&c, &q, &vecs).unwrap();
        prop_assert!(groups_ub(&c, &q) >= exact);
    }

    #[test]
    fn score_ignores_member_order((vecs, c, q) in groups_case(), seed in any::<u64>()) {
        let shuffle = |gs: &[TypeGroup]| -> Vec<TypeGroup> {
            gs.iter().map(|g| {
                let mut m = g.members.clone();
                let k = (seed as usize) % m.len().max(1);
                m.rotate_left(k);
                m.reverse();
                TypeGroup::new(g.ptype, m, &vecs)
            }).collect()
        };
        let a = groups_sim(&c, &q, &vecs).unwrap();
        let b = groups_sim(&shuffle(&c), &shuffle(&q), &vecs).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generated_graphs_are_planar_and_euler(n in 60usize..400, clustered in any::<bool>(), seed in 0u64..1000) {
        let mode = if clustered { Distribution2d::Clustered } else { Distribution2d::Uniform };
        let g = common::spec(n, mode, seed).generate().unwrap();
        prop_assert!(validate_planarity(&g).is_planar());
        prop_assert_eq!(g.component_count(), 1);
        let pats = detect_unit_patterns(&g).unwrap();
        let cyclic = pats.iter().filter(|p| p.ptype.is_cyclic()).count();
        prop_assert_eq!(cyclic, g.edge_count() + 1 - g.vertex_count());
    }

    #[test]
    fn oracle_equivalence_small(n in 80usize..300, seed in 0u64..1000, q in 0.0f64..1.0, k in 1usize..12, cosine in any::<bool>()) {
        let scoring = if cosine { ScoringMode::Cosine } else { ScoringMode::Dot };
        let idx = common::index(n, Distribution2d::Uniform, seed, scoring);
        let mut rng = common::rng(seed);
        let center = common::random_vertex_pos(&mut rng, &idx);
        let query = extract_query_community_scan(&idx, center, 1.0).unwrap();
        let theta = common::score_quantile(&idx, &query, q);
        let want = baseline_topk(&idx, &query, center, k, theta);
        for strategy in [Search::BestFirst, Search::Exhaustive] {
            let got = topk_search(&idx, &query, center, k, theta, SearchOptions { strategy, ..Default::default() });
            prop_assert_eq!(&got.entries, &want.entries);
        }
    }
}

#[test]
fn aggregates_dominate_children() {
    let idx = common::index(1500, Distribution2d::Clustered, 4, ScoringMode::Dot);
    let tree = &idx.tree;
    for node in tree.nodes() {
        let pats = match &node.kind {
            NodeKind::Leaf(ids) => ids.clone(),
            NodeKind::Internal(ch) => {
                for &c in ch {
                    let child = &tree.node(c).info;
                    assert!(node.info.mbr.contains(&child.mbr));
                    for s in &child.types {
                        let mine = node.info.summary(s.ptype).unwrap();
                        assert!(mine.vmax.dominates(&s.vmax));
                        assert!(mine.max_comm_count >= s.max_comm_count);
                    }
                }
                continue;
            }
        };
        for p in pats {
            let pat = &idx.patterns[p.index()];
            assert!(node.info.mbr.contains(&pat.mbr));
            let s = node.info.summary(pat.ptype).unwrap();
            assert!(s.vmax.dominates(&pat.vec));
            assert!(s.max_comm_count >= idx.store.pattern_max_count[p.index()]);
            for (j, &c) in pat.vec.0.iter().enumerate() {
                assert!(c == 0 || node.info.arr[j]);
            }
        }
    }
}

#[test]
fn inverted_lists_transpose_membership() {
    let idx = common::index(1200, Distribution2d::Uniform, 9, ScoringMode::Dot);
    let mut pairs_a = BTreeSet::new();
    for c in &idx.store.communities {
        for &p in &c.patterns {
            pairs_a.insert((p, c.center));
        }
    }
    let mut pairs_b = BTreeSet::new();
    for (p, list) in idx.store.inverted.iter().enumerate() {
        assert!(list.windows(2).all(|w| w[0] < w[1]));
        for &v in list {
            pairs_b.insert((PatternId(p as u32), v));
        }
    }
    assert_eq!(pairs_a, pairs_b);
}

#[test]
fn communities_match_definition() {
    let idx = common::index(600, Distribution2d::Clustered, 2, ScoringMode::Dot);
    for v in (0..idx.graph.vertex_count()).step_by(7) {
        let v = VertexId(v as u32);
        let at = idx.graph.pos(v);
        let want: Vec<PatternId> =
            idx.patterns.iter().filter(|p| mindist_point_pattern(&idx.graph, &at, p) <= 1.0).map(|p| p.id).collect();
        assert_eq!(idx.store.get(v).patterns, want);
    }
}

#[test]
fn larger_k_extends_answer() {
    let idx = common::index(1500, Distribution2d::Uniform, 12, ScoringMode::Dot);
    let mut rng = common::rng(3);
    for _ in 0..10 {
        let c = common::random_vertex_pos(&mut rng, &idx);
        let q = extract_query_community_scan(&idx, c, 1.0).unwrap();
        let theta = common::score_quantile(&idx, &q, 0.5);
        let mut prev = Vec::new();
        for k in [1, 3, 5, 10, 20] {
            let got = topk_search(&idx, &q, c, k, theta, SearchOptions::default()).entries;
            assert!(got.len() <= k);
            assert_eq!(&got[..prev.len()], &prev[..]);
            prev = got;
        }
    }
}

#[test]
fn stats_partition_candidates_and_pruned_never_answer() {
    let idx = common::index(2000, Distribution2d::Clustered, 21, ScoringMode::Cosine);
    let mut rng = common::rng(8);
    for i in 0..30 {
        let c = common::random_vertex_pos(&mut rng, &idx);
        let q = extract_query_community_scan(&idx, c, 1.0).unwrap();
        let theta = common::score_quantile(&idx, &q, [0.2, 0.6, 0.9][i % 3]);
        for strategy in [Search::BestFirst, Search::Exhaustive] {
            let res = topk_search(&idx, &q, c, 10, theta, SearchOptions { strategy, ..Default::default() });
            let s = res.stats;
            assert_eq!(s.candidates_generated, s.accepted + s.pruned_by_ub + s.pruned_by_exact + s.pruned_by_distance);
            assert!((0.0..=1.0).contains(&s.pruning_power()));
            assert_eq!(res.entries, baseline_topk(&idx, &q, c, 10, theta).entries);
        }
    }
}

#[test]
fn exhaustive_and_best_first_report_consistent_answers_through_pipeline() {
    let idx = common::index(1000, Distribution2d::Uniform, 5, ScoringMode::Dot);
    let mut rng = common::rng(5);
    for _ in 0..20 {
        let c = common::random_point(&mut rng, &idx);
        let v_q = Some(common::random_point(&mut rng, &idx));
        let Ok(want) = answer_baseline(&idx, c, 1.0, v_q, 5, 0.6) else { continue };
        let got = answer_topk(&idx, c, 1.0, v_q, 5, 0.6, SearchOptions::default()).unwrap();
        assert_eq!(got.entries, want.entries);
    }
    let far = Point::new(-1e6, -1e6);
    assert!(answer_topk(&idx, far, 1.0, None, 5, 0.6, SearchOptions::default()).is_err());
}

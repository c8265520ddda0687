//! Scoring math: pattern similarity, community similarity, its max-vector
//! upper bound and the pruning predicates built on them.
//!
//! Two scoring modes exist. `Dot` scores raw POI count vectors with a plain
//! dot product; `Cosine` first scales every vector to unit length, after
//! which the same dot-product machinery yields cosine similarity. All bounds
//! are computed on the mode's vectors, so they stay valid in both modes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point;
use crate::graph::PoiVec;
use crate::index::Community;
use crate::unit_pattern::{PatternId, PatternType, UnitPattern};

pub type Score = f64;

/// Environment variable that overrides the scoring mode.
pub const SCORING_ENV: &str = "ROADCOMM_SCORING";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoringMode {
    #[default]
    Dot,
    Cosine,
}

impl ScoringMode {
    pub fn code(self) -> u8 {
        match self {
            ScoringMode::Dot => 0,
            ScoringMode::Cosine => 1,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(ScoringMode::Dot),
            1 => Some(ScoringMode::Cosine),
            _ => None,
        }
    }

    /// Mode requested through [`SCORING_ENV`], if set and valid.
    pub fn from_env() -> Option<Result<Self, String>> {
        std::env::var(SCORING_ENV).ok().map(|s| s.parse())
    }
}

impl FromStr for ScoringMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dot" => Ok(ScoringMode::Dot),
            "cosine" => Ok(ScoringMode::Cosine),
            other => Err(format!("unknown scoring mode `{other}` (expected dot|cosine)")),
        }
    }
}

impl fmt::Display for ScoringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoringMode::Dot => "dot",
            ScoringMode::Cosine => "cosine",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("vector length mismatch ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("query community has no unit patterns")]
    EmptyQuery,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Raw dot product of two POI count vectors.
pub fn dot_sim(a: &PoiVec, b: &PoiVec) -> Result<Score, SimError> {
    if a.len() != b.len() {
        return Err(SimError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.0.iter().zip(&b.0).map(|(&x, &y)| x as f64 * y as f64).sum())
}

/// Normalized cosine similarity; 0 when either vector is zero.
pub fn cosine_sim(a: &PoiVec, b: &PoiVec) -> Result<Score, SimError> {
    let d = dot_sim(a, b)?;
    let na = dot_sim(a, a)?.sqrt();
    let nb = dot_sim(b, b)?.sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(d / (na * nb))
}

/// Vector a POI count vector is scored with under `mode`.
pub fn score_vector(v: &PoiVec, mode: ScoringMode) -> Vec<f64> {
    let raw: Vec<f64> = v.0.iter().map(|&c| c as f64).collect();
    match mode {
        ScoringMode::Dot => raw,
        ScoringMode::Cosine => {
            let n = dot(&raw, &raw).sqrt();
            if n == 0.0 {
                raw
            } else {
                raw.into_iter().map(|x| x / n).collect()
            }
        }
    }
}

/// Access to per-pattern scoring vectors.
pub trait VectorLookup {
    fn vector(&self, id: PatternId) -> &[f64];
    fn dim(&self) -> usize;
}

/// Flat table of scoring vectors for every detected pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVectors {
    mode: ScoringMode,
    dim: usize,
    data: Vec<f64>,
}

impl ScoreVectors {
    pub fn build(patterns: &[UnitPattern], dim: usize, mode: ScoringMode) -> Self {
        let mut data = Vec::with_capacity(patterns.len() * dim);
        for p in patterns {
            data.extend(score_vector(&p.vec, mode));
        }
        ScoreVectors { mode, dim, data }
    }

    pub fn mode(&self) -> ScoringMode {
        self.mode
    }
}

impl VectorLookup for ScoreVectors {
    fn vector(&self, id: PatternId) -> &[f64] {
        let s = id.index() * self.dim;
        &self.data[s..s + self.dim]
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

impl VectorLookup for Vec<Vec<f64>> {
    fn vector(&self, id: PatternId) -> &[f64] {
        &self[id.index()]
    }

    fn dim(&self) -> usize {
        self.first().map_or(0, Vec::len)
    }
}

/// The patterns of one type inside a community, with their element-wise max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeGroup {
    pub ptype: PatternType,
    pub members: Vec<PatternId>,
    pub max: Vec<f64>,
}

impl TypeGroup {
    pub fn new(ptype: PatternType, members: Vec<PatternId>, vectors: &impl VectorLookup) -> Self {
        let mut max = vec![0.0; vectors.dim()];
        for &m in &members {
            for (a, b) in max.iter_mut().zip(vectors.vector(m)) {
                *a = f64::max(*a, *b);
            }
        }
        TypeGroup { ptype, members, max }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Sum of the member vectors.
    pub fn sum(&self, vectors: &impl VectorLookup) -> Vec<f64> {
        let mut s = vec![0.0; vectors.dim()];
        for &m in &self.members {
            for (a, b) in s.iter_mut().zip(vectors.vector(m)) {
                *a += b;
            }
        }
        s
    }
}

/// Groups pattern ids by type; groups sorted by type, members keep input order.
pub fn group_by_type(
    ids: impl IntoIterator<Item = PatternId>,
    patterns: &[UnitPattern],
    vectors: &impl VectorLookup,
) -> Vec<TypeGroup> {
    let mut buckets: std::collections::BTreeMap<PatternType, Vec<PatternId>> = Default::default();
    for id in ids {
        buckets.entry(patterns[id.index()].ptype).or_default().push(id);
    }
    buckets
        .into_iter()
        .map(|(t, m)| TypeGroup::new(t, m, vectors))
        .collect()
}

fn find_group(groups: &[TypeGroup], t: PatternType) -> Option<&TypeGroup> {
    groups
        .binary_search_by(|g| g.ptype.cmp(&t))
        .ok()
        .map(|i| &groups[i])
}

/// Query community: the unit patterns around a query center, by type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCommunity {
    pub center: Point,
    pub radius: f64,
    pub groups: Vec<TypeGroup>,
}

impl QueryCommunity {
    /// Number of types present.
    pub fn n(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn pattern_ids(&self) -> impl Iterator<Item = PatternId> + '_ {
        self.groups.iter().flat_map(|g| g.members.iter().copied())
    }
}

/// Average per-type summed similarity between the community groups `c` and
/// query groups `q`. Types absent from `c` contribute 0.
pub fn groups_sim(c: &[TypeGroup], q: &[TypeGroup], vectors: &impl VectorLookup) -> Result<Score, SimError> {
    if q.is_empty() {
        return Err(SimError::EmptyQuery);
    }
    let n = q.len() as f64;
    let mut total = 0.0;
    for qg in q {
        let Some(cg) = find_group(c, qg.ptype) else { continue };
        let mut s = 0.0;
        for &ci in &cg.members {
            let cv = vectors.vector(ci);
            for &qj in &qg.members {
                s += dot(cv, vectors.vector(qj));
            }
        }
        total += s / (qg.len() as f64 * n);
    }
    Ok(total)
}

/// Max-vector upper bound: sum over query types of `|c_h| * (c_h.max . q_h.max) / n`.
/// Terms are formed and summed like [`groups_sim`] so that rounding keeps the
/// bound on top whenever the member dot products are exact.
pub fn groups_ub(c: &[TypeGroup], q: &[TypeGroup]) -> Score {
    let n = q.len() as f64;
    let mut total = 0.0;
    for qg in q {
        let Some(cg) = find_group(c, qg.ptype) else { continue };
        let qn = qg.len() as f64;
        total += cg.len() as f64 * dot(&cg.max, &qg.max) * qn / (qn * n);
    }
    total
}

/// The bound exactly as `sum_h c_h.max . q_h.max`; not always an upper bound
/// of [`groups_sim`]. Kept for comparison experiments.
pub fn groups_ub_literal(c: &[TypeGroup], q: &[TypeGroup]) -> Score {
    q.iter()
        .filter_map(|qg| find_group(c, qg.ptype).map(|cg| dot(&cg.max, &qg.max)))
        .sum()
}

pub fn community_sim(c: &Community, q: &QueryCommunity, vectors: &impl VectorLookup) -> Result<Score, SimError> {
    groups_sim(&c.groups, &q.groups, vectors)
}

pub fn ub_community_sim(c: &Community, q: &QueryCommunity) -> Score {
    groups_ub(&c.groups, &q.groups)
}

/// Relative slack keeping bound tests conservative under rounding.
pub const BOUND_SLACK: f64 = 1e-9;

/// `a < b` by more than rounding noise.
pub fn clearly_below(a: f64, b: f64) -> bool {
    a < b - BOUND_SLACK * b.abs().max(1.0)
}

pub fn score_upper_bound_prune(ub: Score, theta: Score) -> bool {
    clearly_below(ub, theta)
}

pub fn distance_prune(d: f64, kth_d: f64) -> bool {
    d >= kth_d
}

/// Per-pattern retrieval threshold `theta * |q_h| / max|c_h|`; `+inf` when no
/// community holds the type.
pub fn candidate_threshold(theta: Score, q_count: usize, max_c_count: usize) -> Score {
    if max_c_count == 0 {
        return f64::INFINITY;
    }
    theta * q_count as f64 / max_c_count as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[u32]) -> PoiVec {
        PoiVec(v.to_vec())
    }

    #[test]
    fn worked_dot_products() {
        assert_eq!(dot_sim(&pv(&[2, 2, 1, 1]), &pv(&[2, 1, 1, 0])), Ok(7.0));
        assert_eq!(dot_sim(&pv(&[3, 3, 3, 3]), &pv(&[2, 5, 0, 2])), Ok(27.0));
        assert_eq!(dot_sim(&pv(&[3, 3, 3, 3]), &pv(&[4, 3, 1, 2])), Ok(30.0));
        assert_eq!(dot_sim(&pv(&[3, 3, 3, 3]), &pv(&[4, 5, 1, 2])), Ok(36.0));
        assert_eq!(dot_sim(&pv(&[5, 1]), &pv(&[0, 0])), Ok(0.0));
        assert_eq!(dot_sim(&pv(&[1]), &pv(&[1, 2])), Err(SimError::LengthMismatch(1, 2)));
    }

    #[test]
    fn cosine_of_zero_is_zero() {
        assert_eq!(cosine_sim(&pv(&[0, 0]), &pv(&[1, 1])), Ok(0.0));
        assert!((cosine_sim(&pv(&[1, 1]), &pv(&[2, 2])).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thresholds() {
        assert!((candidate_threshold(0.6, 2, 4) - 0.3).abs() < 1e-15);
        assert_eq!(candidate_threshold(0.6, 1, 1), 0.6);
        assert_eq!(candidate_threshold(0.6, 1, 0), f64::INFINITY);
        assert!(score_upper_bound_prune(0.4, 0.6));
        assert!(!score_upper_bound_prune(0.6, 0.6));
        assert!(distance_prune(0.7, 0.4) && distance_prune(0.9, 0.4));
        assert!(!distance_prune(0.3, 0.4));
    }

    #[test]
    fn max_vector_bound_example() {
        // two deltas in C, one delta in Q
        let vecs: Vec<Vec<f64>> = vec![vec![2., 5., 0., 2.], vec![4., 3., 1., 2.], vec![3., 3., 3., 3.]];
        let c = vec![TypeGroup::new(PatternType::Delta, vec![PatternId(0), PatternId(1)], &vecs)];
        let q = vec![TypeGroup::new(PatternType::Delta, vec![PatternId(2)], &vecs)];
        assert_eq!(c[0].max, vec![4., 5., 1., 2.]);
        assert_eq!(dot(&c[0].max, &q[0].max), 36.0);
        assert_eq!(groups_sim(&c, &q, &vecs), Ok(57.0));
        assert_eq!(groups_ub(&c, &q), 72.0);
        // the literal form (36) is below the exact score here
        assert!(groups_ub_literal(&c, &q) < groups_sim(&c, &q, &vecs).unwrap());
    }

    #[test]
    fn empty_query_errors() {
        let vecs: Vec<Vec<f64>> = vec![vec![1.0]];
        assert_eq!(groups_sim(&[], &[], &vecs), Err(SimError::EmptyQuery));
    }

    #[test]
    fn scoring_mode_parse() {
        assert_eq!("Cosine".parse::<ScoringMode>(), Ok(ScoringMode::Cosine));
        assert!("jaccard".parse::<ScoringMode>().is_err());
    }
}

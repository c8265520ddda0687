//! Experiment harness: vary one parameter, run random queries with the
//! indexed engine and the baseline, and report pruning power, wall time and
//! node accesses as CSV rows.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::continuous::{baseline_ctopk, ctopk_search, ContinuousOptions, ContinuousResult, QuerySegment};
use crate::geom::Point;
use crate::graph::VertexId;
use crate::index::{CommunityIndex, DEFAULT_FANOUT};
use crate::query::{answer_baseline, answer_topk, QueryStats, SearchOptions, TopKResult};
use crate::similarity::ScoringMode;
use crate::synth::{GenSpec, SynthError};
use crate::unit_pattern::PatternError;

pub const DEFAULT_TRIALS: usize = 15;
pub const CSV_HEADER: [&str; 8] =
    ["axis", "value", "method", "trials", "mean_pruning_power", "mean_wall_ms", "mean_io", "answers_checked"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    K,
    Deg,
    R,
    Theta,
    V,
    L,
}

impl FromStr for Axis {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "k" => Ok(Axis::K),
            "deg" => Ok(Axis::Deg),
            "r" => Ok(Axis::R),
            "theta" => Ok(Axis::Theta),
            "V" | "v" => Ok(Axis::V),
            "L" | "l" => Ok(Axis::L),
            o => Err(BenchError::UnknownAxis(o.to_string())),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::K => "k",
            Axis::Deg => "deg",
            Axis::R => "r",
            Axis::Theta => "theta",
            Axis::V => "V",
            Axis::L => "L",
        })
    }
}

impl Axis {
    /// Value list used when none is given.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            Axis::K => vec![1., 5., 10., 15., 20.],
            Axis::Deg => vec![2., 3., 4.],
            Axis::R => vec![0.1, 0.5, 1., 1.5, 2.],
            Axis::Theta => vec![0.5, 0.55, 0.6, 0.65, 0.7],
            Axis::V => vec![10_000., 20_000., 30_000., 50_000., 100_000.],
            Axis::L => vec![2., 4., 6.],
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown axis `{0}` (expected k|deg|r|theta|V|L)")]
    UnknownAxis(String),
    #[error("axis {0} needs a generator spec, not a fixed index")]
    NeedsGenerator(Axis),
    #[error("invalid value {value} for axis {axis}")]
    BadValue { axis: Axis, value: f64 },
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("query failed: {0}")]
    Query(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Parameter defaults for the axes not being varied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Defaults {
    pub k: usize,
    pub deg: usize,
    pub r: f64,
    pub theta: f64,
    pub n: usize,
    pub l: f64,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults { k: 10, deg: 3, r: 1.0, theta: 0.6, n: 30_000, l: 4.0 }
    }
}

/// Where benchmark data comes from.
#[derive(Debug, Clone)]
pub enum Source {
    /// Generate per configuration. Unless `fixed_extent` is set, the extent
    /// scales with the vertex count to keep the density of 30K vertices in a
    /// 100 x 100 square.
    Generate { spec: GenSpec, fixed_extent: bool },
    Index(Box<CommunityIndex>),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub defaults: Defaults,
    pub source: Source,
    pub mode: ScoringMode,
    pub fanout: usize,
    pub search: SearchOptions,
    /// Report zero wall times so output bytes depend only on the inputs.
    pub no_timing: bool,
}

impl BenchConfig {
    pub fn new(axis: Axis, source: Source) -> Self {
        BenchConfig {
            axis,
            values: axis.default_values(),
            trials: DEFAULT_TRIALS,
            seed: 1,
            defaults: Defaults::default(),
            source,
            mode: ScoringMode::Dot,
            fanout: DEFAULT_FANOUT,
            search: SearchOptions::default(),
            no_timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub axis: String,
    pub value: String,
    pub method: String,
    pub trials: usize,
    pub mean_pruning_power: f64,
    pub mean_wall_ms: f64,
    pub mean_io: f64,
    pub answers_checked: usize,
}

/// Reference density: 30K vertices in a 100 x 100 square.
const DENSITY_N: f64 = 30_000.0;
const DENSITY_EXTENT: f64 = 100.0;

pub fn density_matched_extent(n: usize) -> f64 {
    DENSITY_EXTENT * (n as f64 / DENSITY_N).sqrt()
}

#[derive(Default)]
struct Acc {
    pruning: f64,
    wall: f64,
    io: f64,
}

impl Acc {
    fn add(&mut self, s: &QueryStats) {
        self.pruning += s.pruning_power();
        self.wall += s.wall_time_ms;
        self.io += s.io_count as f64;
    }
}

fn fold_continuous(r: &ContinuousResult) -> QueryStats {
    let mut s = QueryStats { io_count: r.shared_io, wall_time_ms: r.wall_time_ms, ..QueryStats::default() };
    for i in &r.intervals {
        let t = &i.result.stats;
        s.candidates_generated += t.candidates_generated;
        s.accepted += t.accepted;
        s.pruned_by_ub += t.pruned_by_ub;
        s.pruned_by_exact += t.pruned_by_exact;
        s.pruned_by_distance += t.pruned_by_distance;
        s.io_count += t.io_count;
    }
    s
}

fn same_entries(a: &TopKResult, b: &TopKResult) -> bool {
    a.entries == b.entries
}

fn as_usize(axis: Axis, v: f64) -> Result<usize, BenchError> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(BenchError::BadValue { axis, value: v })
    }
}

fn build_for(cfg: &BenchConfig, n: usize, deg: usize, r: f64) -> Result<CommunityIndex, BenchError> {
    match &cfg.source {
        Source::Generate { spec, fixed_extent } => {
            let extent = if *fixed_extent { spec.extent } else { density_matched_extent(n) };
            let spec = GenSpec { n, deg_min: deg, deg_max: deg, extent, ..*spec };
            Ok(CommunityIndex::build(spec.generate()?, r, cfg.fanout, cfg.mode)?)
        }
        Source::Index(idx) => {
            if (idx.radius() - r).abs() > 0.0 {
                let mut idx = CommunityIndex::build(idx.graph.clone(), r, cfg.fanout, idx.mode())?;
                idx.set_scoring(cfg.mode);
                Ok(idx)
            } else {
                let mut idx = (**idx).clone();
                idx.set_scoring(cfg.mode);
                Ok(idx)
            }
        }
    }
}

/// Runs the configured sweep, returning two rows (indexed, baseline) per value.
pub fn run_experiment(cfg: &BenchConfig) -> Result<Vec<Row>, BenchError> {
    let d = cfg.defaults;
    let fixed = matches!(cfg.source, Source::Index(_));
    if fixed && matches!(cfg.axis, Axis::V | Axis::Deg) {
        return Err(BenchError::NeedsGenerator(cfg.axis));
    }
    let default_n = match &cfg.source {
        Source::Index(idx) => idx.graph.vertex_count(),
        Source::Generate { .. } => d.n,
    };
    let mut rows = Vec::new();
    let mut shared: Option<CommunityIndex> = None;
    for &value in &cfg.values {
        let (mut k, mut deg, mut r, mut theta, mut n, mut l) = (d.k, d.deg, d.r, d.theta, default_n, d.l);
        match cfg.axis {
            Axis::K => k = as_usize(cfg.axis, value)?,
            Axis::Deg => deg = as_usize(cfg.axis, value)?,
            Axis::R => r = value,
            Axis::Theta => theta = value,
            Axis::V => n = as_usize(cfg.axis, value)?,
            Axis::L => l = value,
        }
        if !(r > 0.0) || !(l > 0.0) || !theta.is_finite() {
            return Err(BenchError::BadValue { axis: cfg.axis, value });
        }
        let rebuild = matches!(cfg.axis, Axis::Deg | Axis::R | Axis::V);
        let local;
        let idx: &CommunityIndex = if rebuild {
            local = build_for(cfg, n, deg, r)?;
            &local
        } else {
            if shared.is_none() {
                shared = Some(build_for(cfg, n, deg, r)?);
            }
            shared.as_ref().unwrap()
        };

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (mut ia, mut ba) = (Acc::default(), Acc::default());
        let mut agree = 0;
        for _ in 0..cfg.trials {
            let v = VertexId(rng.random_range(0..idx.graph.vertex_count() as u32));
            let c = idx.graph.pos(v);
            let (si, sb, ok) = if cfg.axis == Axis::L {
                let ang = rng.random_range(0.0..std::f64::consts::TAU);
                let seg = QuerySegment { q_st: c, q_ed: Point::new(c.x + l * ang.cos(), c.y + l * ang.sin()), r };
                let copts = ContinuousOptions { search: cfg.search, ..ContinuousOptions::default() };
                let a = ctopk_search(idx, &seg, None, k, theta, copts).map_err(|e| BenchError::Query(e.to_string()))?;
                let b = baseline_ctopk(idx, &seg, None, k, theta, copts.geometry)
                    .map_err(|e| BenchError::Query(e.to_string()))?;
                let ok = a.intervals.len() == b.intervals.len()
                    && a.intervals.iter().zip(&b.intervals).all(|(x, y)| same_entries(&x.result, &y.result));
                (fold_continuous(&a), fold_continuous(&b), ok)
            } else {
                let a = answer_topk(idx, c, r, None, k, theta, cfg.search).map_err(|e| BenchError::Query(e.to_string()))?;
                let b = answer_baseline(idx, c, r, None, k, theta).map_err(|e| BenchError::Query(e.to_string()))?;
                let ok = same_entries(&a, &b);
                (a.stats, b.stats, ok)
            };
            ia.add(&si);
            ba.add(&sb);
            agree += ok as usize;
        }
        let t = cfg.trials.max(1) as f64;
        for (method, acc) in [("indexed", &ia), ("baseline", &ba)] {
            rows.push(Row {
                axis: cfg.axis.to_string(),
                value: format_value(value),
                method: method.to_string(),
                trials: cfg.trials,
                mean_pruning_power: round6(acc.pruning / t),
                mean_wall_ms: if cfg.no_timing { 0.0 } else { round6(acc.wall / t) },
                mean_io: round6(acc.io / t),
                answers_checked: agree,
            });
        }
    }
    Ok(rows)
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Comment line recording the parameters in effect.
pub fn defaults_comment(cfg: &BenchConfig) -> String {
    let d = cfg.defaults;
    let (n, data) = match &cfg.source {
        Source::Index(idx) => (idx.graph.vertex_count(), "index".to_string()),
        Source::Generate { spec, fixed_extent } => {
            let extent = if *fixed_extent { format!("{}", spec.extent) } else { "density-matched".to_string() };
            (
                d.n,
                format!(
                    "generated mode={} extent={} poi_types={} poi_mean={} gen_seed={}",
                    serde_json::to_value(spec.mode).unwrap().as_str().unwrap_or("?"),
                    extent,
                    spec.poi_types,
                    spec.poi_mean,
                    spec.seed
                ),
            )
        }
    };
    format!(
        "# defaults: k={} deg={} r={} theta={} V={} L={} scoring={} fanout={} seed={} data: {}",
        d.k, d.deg, d.r, d.theta, n, d.l, cfg.mode, cfg.fanout, cfg.seed, data
    )
}

pub fn write_csv<W: Write>(mut out: W, cfg: &BenchConfig, rows: &[Row]) -> Result<(), BenchError> {
    writeln!(out, "{}", defaults_comment(cfg))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.axis.clone(),
            r.value.clone(),
            r.method.clone(),
            r.trials.to_string(),
            format!("{:.6}", r.mean_pruning_power),
            format!("{:.6}", r.mean_wall_ms),
            format!("{:.6}", r.mean_io),
            r.answers_checked.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        assert_eq!("theta".parse::<Axis>().unwrap(), Axis::Theta);
        assert!(matches!("zeta".parse::<Axis>(), Err(BenchError::UnknownAxis(_))));
        assert_eq!(Axis::K.default_values().len(), 5);
    }

    #[test]
    fn small_k_sweep_is_deterministic() {
        let spec = GenSpec { n: 300, ..GenSpec::default() };
        let mut cfg = BenchConfig::new(Axis::K, Source::Generate { spec, fixed_extent: false });
        cfg.defaults.n = 300;
        cfg.trials = 2;
        cfg.no_timing = true;
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| r.answers_checked == 2 && (0.0..=1.0).contains(&r.mean_pruning_power)));
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&mut a, &cfg, &rows).unwrap();
        write_csv(&mut b, &cfg, &run_experiment(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fixed_index_rejects_size_axes() {
        let spec = GenSpec { n: 100, extent: 6.0, ..GenSpec::default() };
        let idx = CommunityIndex::build(spec.generate().unwrap(), 1.0, 8, ScoringMode::Dot).unwrap();
        let cfg = BenchConfig::new(Axis::V, Source::Index(Box::new(idx)));
        assert!(matches!(run_experiment(&cfg), Err(BenchError::NeedsGenerator(Axis::V))));
    }
}

//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{run_experiment, write_csv, Axis, BenchConfig, Source, DEFAULT_TRIALS};
use crate::continuous::{baseline_ctopk, ctopk_search, ContinuousOptions, CQuerySpec, QuerySegment, SplitGeometry};
use crate::geom::Point;
use crate::graph::load_graph;
use crate::index::{CommunityIndex, DEFAULT_FANOUT};
use crate::persist::{load_index, save_index};
use crate::query::{
    answer_baseline, answer_topk, BoundKind, CenterSpec, CountBound, QuerySpec, SearchOptions, Strategy, TopKResult,
};
use crate::similarity::ScoringMode;
use crate::synth::{Distribution2d, GenSpec, DEFAULT_EXTENT, DEFAULT_POI_MEAN, DEFAULT_POI_TYPES};
use crate::Error;

pub const NODES_FILE: &str = "nodes.txt";
pub const EDGES_FILE: &str = "edges.txt";
pub const POIS_FILE: &str = "pois.txt";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Parser)]
#[command(name = "roadcomm", version, about = "Top-k spatial community similarity search on road networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic road network with POIs.
    Gen(GenArgs),
    /// Detect unit patterns and build the community index.
    Build(BuildArgs),
    /// Answer a top-k community query.
    Query(QueryArgs),
    /// Answer a continuous query along a segment.
    Cquery(CQueryArgs),
    /// Run a parameter sweep and write CSV.
    Bench(BenchArgs),
    /// Print index statistics as JSON.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Uniform,
    Clustered,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScoringArg {
    Dot,
    Cosine,
}

impl From<ScoringArg> for ScoringMode {
    fn from(s: ScoringArg) -> Self {
        match s {
            ScoringArg::Dot => ScoringMode::Dot,
            ScoringArg::Cosine => ScoringMode::Cosine,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    BestFirst,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundArg {
    Corrected,
    Literal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CountBoundArg {
    PerPattern,
    Global,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GeometryArg {
    PerEdge,
    PerVertex,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Uniform)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 5)]
    pub clusters: usize,
    #[arg(long, default_value_t = 3)]
    pub deg_min: usize,
    #[arg(long, default_value_t = 3)]
    pub deg_max: usize,
    #[arg(long, default_value_t = DEFAULT_POI_TYPES)]
    pub poi_types: usize,
    #[arg(long, default_value_t = DEFAULT_POI_MEAN)]
    pub poi_mean: f64,
    #[arg(long, default_value_t = DEFAULT_EXTENT)]
    pub extent: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub graph_dir: PathBuf,
    /// POI type count; read from meta.json when omitted.
    #[arg(long)]
    pub poi_types: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = DEFAULT_FANOUT)]
    pub fanout: usize,
    #[arg(long, value_enum, default_value_t = ScoringArg::Dot)]
    pub scoring: ScoringArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value_t = StrategyArg::BestFirst)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = BoundArg::Corrected)]
    pub bound: BoundArg,
    #[arg(long, value_enum, default_value_t = CountBoundArg::PerPattern)]
    pub count_bound: CountBoundArg,
    /// Write zero wall times so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

impl SearchArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            strategy: match self.strategy {
                StrategyArg::BestFirst => Strategy::BestFirst,
                StrategyArg::Exhaustive => Strategy::Exhaustive,
            },
            bound: match self.bound {
                BoundArg::Corrected => BoundKind::Corrected,
                BoundArg::Literal => BoundKind::Literal,
            },
            count_bound: match self.count_bound {
                CountBoundArg::PerPattern => CountBound::PerPattern,
                CountBoundArg::Global => CountBound::Global,
            },
        }
    }
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("where").required(true).args(["center", "vertex", "spec"])))]
pub struct QueryArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Query center as `x,y`.
    #[arg(long, value_parser = parse_point)]
    pub center: Option<Point>,
    /// Query center as a vertex id.
    #[arg(long)]
    pub vertex: Option<u32>,
    /// JSON query spec; replaces the individual query flags.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Defaults to the index radius.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0.6)]
    pub theta: f64,
    #[arg(long, value_parser = parse_point)]
    pub vq: Option<Point>,
    /// Cross-check against the brute-force baseline.
    #[arg(long)]
    pub oracle: bool,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("segment").required(true).args(["from", "spec"])))]
pub struct CQueryArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long, value_parser = parse_point, requires = "to")]
    pub from: Option<Point>,
    #[arg(long, value_parser = parse_point)]
    pub to: Option<Point>,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0.6)]
    pub theta: f64,
    #[arg(long, value_parser = parse_point)]
    pub vq: Option<Point>,
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, value_enum, default_value_t = GeometryArg::PerEdge)]
    pub geometry: GeometryArg,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("data").required(true).args(["index", "gen_spec"])))]
pub struct BenchArgs {
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// JSON generator spec (fields of `gen`; missing fields take defaults).
    #[arg(long)]
    pub gen_spec: Option<PathBuf>,
    #[arg(long)]
    pub axis: String,
    /// Comma-separated values; the axis' standard list when omitted.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Vertex count used when |V| is not the varied axis.
    #[arg(long)]
    pub n: Option<usize>,
    /// Use the spec's extent instead of scaling it with |V|.
    #[arg(long)]
    pub fixed_extent: bool,
    #[arg(long, value_enum)]
    pub scoring: Option<ScoringArg>,
    #[arg(long, default_value_t = DEFAULT_FANOUT)]
    pub fanout: usize,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let x: f64 = x.trim().parse().map_err(|_| format!("bad x coordinate `{x}`"))?;
    let y: f64 = y.trim().parse().map_err(|_| format!("bad y coordinate `{y}`"))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(format!("coordinates must be finite, got `{s}`"));
    }
    Ok(Point::new(x, y))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(io_err(p)),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes).map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>, Error> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Error::Data(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

fn env_scoring() -> Result<Option<ScoringMode>, Error> {
    ScoringMode::from_env().transpose().map_err(Error::Usage)
}

fn open_index(path: &Path) -> Result<CommunityIndex, Error> {
    let mut idx = load_index(path)?;
    if let Some(mode) = env_scoring()? {
        idx.set_scoring(mode);
    }
    Ok(idx)
}

fn cmd_gen(a: &GenArgs) -> Result<(), Error> {
    let spec = GenSpec {
        n: a.n,
        mode: match a.mode {
            ModeArg::Uniform => Distribution2d::Uniform,
            ModeArg::Clustered => Distribution2d::Clustered,
        },
        clusters: a.clusters,
        extent: a.extent,
        deg_min: a.deg_min,
        deg_max: a.deg_max,
        poi_types: a.poi_types,
        poi_mean: a.poi_mean,
        seed: a.seed,
    };
    let g = spec.generate()?;
    fs::create_dir_all(&a.out_dir).map_err(io_err(&a.out_dir))?;
    let d = &a.out_dir;
    g.write_files(&d.join(NODES_FILE), &d.join(EDGES_FILE), &d.join(POIS_FILE))?;
    let meta = d.join(META_FILE);
    fs::write(&meta, to_json(&spec)?).map_err(io_err(&meta))?;
    eprintln!("wrote {} vertices, {} edges, {} POIs to {}", g.vertex_count(), g.edge_count(), g.pois().len(), d.display());
    Ok(())
}

fn cmd_build(a: &BuildArgs) -> Result<(), Error> {
    let d = &a.graph_dir;
    let m = match a.poi_types {
        Some(m) => m,
        None => {
            let meta = d.join(META_FILE);
            if !meta.exists() {
                return Err(Error::Usage(format!("--poi-types is required when {} is absent", meta.display())));
            }
            read_json::<GenSpec>(&meta)?.poi_types
        }
    };
    if !(a.radius > 0.0 && a.radius.is_finite()) {
        return Err(Error::Usage(format!("--radius must be positive, got {}", a.radius)));
    }
    if a.fanout < 2 {
        return Err(Error::Usage("--fanout must be at least 2".into()));
    }
    let g = load_graph(&d.join(NODES_FILE), &d.join(EDGES_FILE), &d.join(POIS_FILE), m)?;
    let mode = env_scoring()?.unwrap_or(a.scoring.into());
    let idx = CommunityIndex::build(g, a.radius, a.fanout, mode)?;
    save_index(&idx, &a.out)?;
    let s = idx.stats();
    eprintln!(
        "indexed {} patterns over {} vertices (tree height {}, {} nodes) -> {}",
        s.patterns,
        s.vertices,
        s.tree.height,
        s.tree.node_count,
        a.out.display()
    );
    Ok(())
}

fn entries_diff(a: &TopKResult, b: &TopKResult) -> String {
    let mut s = String::from("rank  indexed(center score dist)  baseline(center score dist)\n");
    let n = a.entries.len().max(b.entries.len());
    let fmt = |e: Option<&crate::query::Entry>| {
        e.map_or("-".to_string(), |e| format!("{} {} {}", e.center, e.score, e.distance))
    };
    for i in 0..n {
        let (x, y) = (a.entries.get(i), b.entries.get(i));
        let mark = if x == y { " " } else { "*" };
        s.push_str(&format!("{mark}{i:<4} {:<28} {}\n", fmt(x), fmt(y)));
    }
    s
}

fn cmd_query(a: &QueryArgs) -> Result<(), Error> {
    let idx = open_index(&a.index)?;
    let spec = match &a.spec {
        Some(p) => read_json::<QuerySpec>(p)?,
        None => QuerySpec {
            center: match (a.center, a.vertex) {
                (Some(c), _) => CenterSpec::Point([c.x, c.y]),
                (None, Some(v)) => CenterSpec::Vertex(v),
                (None, None) => unreachable!("clap enforces a center"),
            },
            radius: a.radius.unwrap_or(idx.radius()),
            k: a.k,
            theta: a.theta,
            v_q: a.vq.map(|p| [p.x, p.y]),
        },
    };
    let center = spec.center.resolve(&idx)?;
    let v_q = spec.v_q.map(|[x, y]| Point::new(x, y));
    let mut res = answer_topk(&idx, center, spec.radius, v_q, spec.k, spec.theta, a.search.options())?;
    if a.oracle {
        let base = answer_baseline(&idx, center, spec.radius, v_q, spec.k, spec.theta)?;
        if base.entries != res.entries {
            return Err(Error::OracleMismatch(entries_diff(&res, &base)));
        }
    }
    if a.search.no_timing {
        res.stats.wall_time_ms = 0.0;
    }
    emit(&a.out, &to_json(&res)?)
}

fn cmd_cquery(a: &CQueryArgs) -> Result<(), Error> {
    let idx = open_index(&a.index)?;
    let spec = match &a.spec {
        Some(p) => read_json::<CQuerySpec>(p)?,
        None => {
            let (f, t) = (a.from.expect("clap enforces --from"), a.to.expect("clap enforces --to"));
            CQuerySpec {
                q_st: [f.x, f.y],
                q_ed: [t.x, t.y],
                radius: a.radius.unwrap_or(idx.radius()),
                k: a.k,
                theta: a.theta,
                v_q: a.vq.map(|p| [p.x, p.y]),
            }
        }
    };
    let seg = QuerySegment {
        q_st: Point::new(spec.q_st[0], spec.q_st[1]),
        q_ed: Point::new(spec.q_ed[0], spec.q_ed[1]),
        r: spec.radius,
    };
    let v_q = spec.v_q.map(|[x, y]| Point::new(x, y));
    let opts = ContinuousOptions {
        search: a.search.options(),
        geometry: match a.geometry {
            GeometryArg::PerEdge => SplitGeometry::PerEdge,
            GeometryArg::PerVertex => SplitGeometry::PerVertex,
        },
    };
    let mut res = ctopk_search(&idx, &seg, v_q, spec.k, spec.theta, opts)?;
    if a.oracle {
        let base = baseline_ctopk(&idx, &seg, v_q, spec.k, spec.theta, opts.geometry)?;
        if base.intervals.len() != res.intervals.len() {
            return Err(Error::OracleMismatch(format!(
                "interval count differs: indexed {} vs baseline {}",
                res.intervals.len(),
                base.intervals.len()
            )));
        }
        for (i, (x, y)) in res.intervals.iter().zip(&base.intervals).enumerate() {
            if x.result.entries != y.result.entries {
                return Err(Error::OracleMismatch(format!(
                    "interval {i} [{}, {}]\n{}",
                    x.interval[0],
                    x.interval[1],
                    entries_diff(&x.result, &y.result)
                )));
            }
        }
    }
    if a.search.no_timing {
        for i in &mut res.intervals {
            i.result.stats.wall_time_ms = 0.0;
        }
    }
    emit(&a.out, &to_json(&res.intervals)?)
}

fn cmd_bench(a: &BenchArgs) -> Result<(), Error> {
    let axis: Axis = a.axis.parse()?;
    let mut mode = a.scoring.map(ScoringMode::from).unwrap_or_default();
    let source = match (&a.index, &a.gen_spec) {
        (Some(p), _) => {
            let idx = load_index(p)?;
            if a.scoring.is_none() {
                mode = idx.mode();
            }
            Source::Index(Box::new(idx))
        }
        (None, Some(p)) => Source::Generate { spec: read_json::<GenSpec>(p)?, fixed_extent: a.fixed_extent },
        (None, None) => unreachable!("clap enforces a data source"),
    };
    if let Some(m) = env_scoring()? {
        mode = m;
    }
    let mut cfg = BenchConfig::new(axis, source);
    if let Some(v) = &a.values {
        cfg.values = v.clone();
    }
    if a.trials == 0 {
        return Err(Error::Usage("--trials must be at least 1".into()));
    }
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    if let Some(n) = a.n {
        cfg.defaults.n = n;
    }
    cfg.mode = mode;
    cfg.fanout = a.fanout;
    cfg.search = a.search.options();
    cfg.no_timing = a.search.no_timing;
    let rows = run_experiment(&cfg)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &cfg, &rows)?;
    emit(&a.out, &buf)
}

fn cmd_inspect(a: &InspectArgs) -> Result<(), Error> {
    let idx = open_index(&a.index)?;
    emit(&a.out, &to_json(&idx.stats())?)
}

pub fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Build(a) => cmd_build(a),
        Command::Query(a) => cmd_query(a),
        Command::Cquery(a) => cmd_cquery(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Inspect(a) => cmd_inspect(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

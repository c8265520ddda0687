//! Top-k spatial community similarity search over planar road networks.
//!
//! A road network is decomposed into unit patterns (bounded faces and
//! dead-end edges). Each vertex anchors a community of the patterns within a
//! radius. Given a query community, the engine returns the `k` communities
//! nearest to a query point whose POI-based similarity reaches a threshold,
//! using an aggregate R-tree and score/distance pruning. A continuous variant
//! answers the same question for a query disc moving along a segment.

pub mod bench;
pub mod cli;
pub mod continuous;
pub mod geom;
pub mod graph;
pub mod index;
pub mod persist;
pub mod query;
pub mod similarity;
pub mod synth;
pub mod unit_pattern;

use thiserror::Error;

pub use index::CommunityIndex;

/// Top-level error; [`Error::exit_code`] maps it to the CLI exit status.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Pattern(#[from] unit_pattern::PatternError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
    #[error(transparent)]
    Persist(#[from] persist::PersistError),
    #[error(transparent)]
    Query(#[from] query::QueryError),
    #[error(transparent)]
    Continuous(#[from] continuous::ContinuousError),
    #[error(transparent)]
    Bench(#[from] bench::BenchError),
    #[error("indexed answer differs from the baseline:\n{0}")]
    OracleMismatch(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_)
            | Error::Query(query::QueryError::Invalid(_))
            | Error::Continuous(continuous::ContinuousError::Query(query::QueryError::Invalid(_)))
            | Error::Continuous(continuous::ContinuousError::DegenerateSegment)
            | Error::Synth(synth::SynthError::Param(_))
            | Error::Bench(bench::BenchError::UnknownAxis(_) | bench::BenchError::NeedsGenerator(_) | bench::BenchError::BadValue { .. }) => 1,
            Error::OracleMismatch(_) => 3,
            _ => 2,
        }
    }
}

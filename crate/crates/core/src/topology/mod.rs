//! Snapshot ingestion, the filtered channel graph, and parameter statistics.

mod defaults;
mod graph;
mod snapshot;
mod stats;

pub use defaults::{DefaultsTable, ImplDefaults};
pub use graph::{
    apply_slot_limits, build_graph, build_graph_counted, ChannelSpec, FilterCounts, GraphChannel,
    NetworkGraph, MAX_SLOT_LIMIT,
};
pub use snapshot::{
    parse_snapshot, parse_snapshot_str, parse_snapshot_value, ChannelPolicy, ChannelRecord,
    NodeRecord, ParsedSnapshot, SkipCounts, Snapshot, MAX_CLTV_EXPIRY_DELTA,
};
pub use stats::{
    parameter_histogram, Bucket, Histogram, HistogramEntry, PolicyParameter, OTHER_THRESHOLD,
};
pub(crate) use stats::usable_policies;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("parse error at line {line}, column {column} ({context}): {message}")]
    Parse {
        line: usize,
        column: usize,
        context: String,
        message: String,
    },
    #[error("io error: {0}")]
    Io(String),
    #[error("node {0} has no implementation label")]
    UnlabeledNode(String),
    #[error("snapshot has no usable policies")]
    EmptySnapshot,
    #[error("unknown policy parameter: {0}")]
    UnknownParameter(String),
}

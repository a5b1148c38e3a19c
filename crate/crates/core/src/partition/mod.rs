//! Pairwise connectivity and cut-based disconnection attacks.

mod betweenness;
mod connectivity;
mod disconnect;
mod kl;
mod spectral;

pub use betweenness::{edge_betweenness, edge_betweenness_by_id};
pub use connectivity::connected_pairs_fraction;
pub use disconnect::{plan_disconnection, ConnectivityPoint, ConnectivityReport, Method};
pub use kl::kernighan_lin_cut;
pub use spectral::{fiedler_cut, fiedler_vector, FiedlerVector, FIEDLER_MAX_ITERATIONS, FIEDLER_TOLERANCE};

use serde::Serialize;
use thiserror::Error;

use crate::planner::PlanError;
use crate::topology::{NetworkGraph, TopologyError};

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("need at least {needed} nodes, found {found}")]
    TooFewNodes { needed: usize, found: usize },
    #[error("Fiedler iteration stopped after {iterations} steps with residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("unknown cut method {0:?} (expected betweenness, spectral or kl)")]
    UnknownMethod(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Two-sided split of a component and the channels crossing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bipartition {
    pub side_a: Vec<String>,
    pub side_b: Vec<String>,
    pub cut_channels: Vec<String>,
}

impl Bipartition {
    /// `in_a[i]` tells which side node `i` of `graph` is on.
    pub(crate) fn from_sides(graph: &NetworkGraph, in_a: &[bool]) -> Self {
        let mut side_a = Vec::new();
        let mut side_b = Vec::new();
        for (i, &a) in in_a.iter().enumerate() {
            let id = graph.node_id(i).to_string();
            if a {
                side_a.push(id);
            } else {
                side_b.push(id);
            }
        }
        let cut_channels = graph
            .channels()
            .iter()
            .filter(|c| in_a[c.node_a] != in_a[c.node_b])
            .map(|c| c.channel_id.clone())
            .collect();
        Self { side_a, side_b, cut_channels }
    }

    pub fn cut_size(&self) -> usize {
        self.cut_channels.len()
    }
}

/// Largest component as its own graph.
pub(crate) fn largest_component_graph(graph: &NetworkGraph) -> NetworkGraph {
    graph.induced(&graph.largest_component())
}

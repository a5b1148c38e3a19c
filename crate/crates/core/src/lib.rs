//! Planning and verification of HTLC-slot congestion attacks on Lightning
//! channel graph snapshots.
//!
//! The crate reads `describegraph` snapshots ([`topology`]), guesses each
//! node's implementation from its channel policies ([`inference`]), packs
//! channels into locktime-feasible attack routes ([`planner`]), attacks
//! pairwise connectivity ([`partition`]) and single hubs ([`isolation`]),
//! prices the result ([`cost`]) and replays payments through a block-level
//! HTLC simulator ([`sim`]).

pub mod cli;
pub mod cost;
pub mod inference;
pub mod isolation;
pub mod partition;
pub mod planner;
pub mod sim;
pub mod synth;
pub mod topology;

pub use inference::{tag_nodes, ImplLabel};
pub use planner::{plan_network_attack, AttackPlan, AttackRoute, PlannerConfig};
pub use topology::{build_graph, parse_snapshot, DefaultsTable, NetworkGraph, Snapshot};

//! Greedy selection of locktime-feasible attack routes.
//!
//! A slot-class subgraph is split into channel-disjoint walks. Each walk
//! starts from the heaviest remaining channel, oriented along its cheaper
//! forwarding direction, and is extended at its head with the heaviest
//! adjacent channel that keeps the route locked for at least `tau_min`
//! blocks. Routes are circular through the attacker, who spends two of its
//! own channels per route.

mod choose;
mod plan;
mod sweep;

pub use choose::{can_extend_route, choose_routes, choose_routes_detailed, RouteSelection};
pub use plan::{
    plan_network_attack, plan_routes, upper_bound_capacity, upper_bound_capacity_with, AttackPlan,
    CurvePoint,
};
pub use sweep::{lock_period_sweep, route_length_sweep, SweepCurve, SweepRow};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{ChannelPolicy, TopologyError};

/// Hops allowed on a payment route.
pub const MAX_ROUTE_HOPS: usize = 20;
/// Victim channels per route once the attacker's two hops are subtracted.
pub const MAX_ROUTE_CHANNELS: usize = MAX_ROUTE_HOPS - 2;
pub const BLOCKS_PER_DAY: u32 = 144;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("subgraph mixes slot classes {0} and {1}")]
    MixedSlotClass(u32, u32),
    #[error("channel {0} has no slot limit; apply slot limits first")]
    SlotLimitUnset(String),
    #[error("budget of {0} attacker channels is below the 2 needed for one route")]
    BudgetTooSmall(usize),
    #[error("invalid sweep value: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightMode {
    Capacity,
    Betweenness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BetweennessRecompute {
    /// Recompute on the remaining channels before every new route.
    PerRoute,
    Once,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub tau_min: u32,
    pub max_route_channels: usize,
    pub locktime_max: u32,
    pub weight_mode: WeightMode,
    pub betweenness_recompute: BetweennessRecompute,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            tau_min: 3 * BLOCKS_PER_DAY,
            max_route_channels: MAX_ROUTE_CHANNELS,
            locktime_max: 2016,
            weight_mode: WeightMode::Capacity,
            betweenness_recompute: BetweennessRecompute::PerRoute,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.tau_min >= self.locktime_max {
            return Err(PlanError::InvalidConfig(format!(
                "tau_min {} must be below locktime_max {}",
                self.tau_min, self.locktime_max
            )));
        }
        if !(1..=MAX_ROUTE_CHANNELS).contains(&self.max_route_channels) {
            return Err(PlanError::InvalidConfig(format!(
                "max_route_channels {} outside 1..={MAX_ROUTE_CHANNELS}",
                self.max_route_channels
            )));
        }
        Ok(())
    }

    /// Total forwarding delay a route may accumulate.
    pub fn timeout_budget(&self) -> u32 {
        self.locktime_max.saturating_sub(self.tau_min)
    }
}

/// One directed traversal of a victim channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteHop {
    pub channel_id: String,
    pub from: String,
    pub to: String,
    pub capacity_sat: u64,
    /// The forwarding node's policy for this direction.
    pub policy: ChannelPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRoute {
    pub hops: Vec<RouteHop>,
    pub timeout_sum: u32,
    pub lock_duration: u32,
    pub weight: f64,
    pub slot_class: u32,
}

impl AttackRoute {
    pub fn capacity_sat(&self) -> u64 {
        self.hops.iter().map(|h| h.capacity_sat).sum()
    }

    pub fn channel_ids(&self) -> impl Iterator<Item = &str> {
        self.hops.iter().map(|h| h.channel_id.as_str())
    }

    /// Victim nodes in walk order, first node included.
    pub fn nodes(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.hops.len() + 1);
        if let Some(first) = self.hops.first() {
            out.push(first.from.as_str());
        }
        out.extend(self.hops.iter().map(|h| h.to.as_str()));
        out
    }

    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }
}

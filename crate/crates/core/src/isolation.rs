//! Hub isolation with back-and-forth payments.
//!
//! Each payment enters at the victim over an attacker channel, crosses one
//! victim channel `k` times in alternating directions and leaves through the
//! attacker channel it came in on. One payment therefore holds `k` slots on
//! the target channel but only two on the attacker's entry channel. An odd
//! leftover slot is filled by a pass-through payment that exits at the
//! neighbor over a separate attacker channel.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::ImplLabel;
use crate::planner::{RouteHop, MAX_ROUTE_HOPS};
use crate::topology::{
    apply_slot_limits, ChannelPolicy, DefaultsTable, NetworkGraph, TopologyError, MAX_SLOT_LIMIT,
};

/// Traversals that fit between the entry and exit hop.
pub const MAX_TRAVERSALS: u32 = (MAX_ROUTE_HOPS - 2) as u32;

#[derive(Debug, Error)]
pub enum IsolationError {
    #[error("node {0} not found in graph")]
    VictimNotFound(String),
    #[error("tau_min {tau_min} must be below locktime_max {locktime_max}")]
    InvalidTau { tau_min: u32, locktime_max: u32 },
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsolationConfig {
    pub tau_min: u32,
    pub locktime_max: u32,
}

impl Default for IsolationConfig {
    fn default() -> Self {
        Self { tau_min: 432, locktime_max: 2016 }
    }
}

impl IsolationConfig {
    pub fn validate(&self) -> Result<(), IsolationError> {
        if self.tau_min >= self.locktime_max {
            return Err(IsolationError::InvalidTau {
                tau_min: self.tau_min,
                locktime_max: self.locktime_max,
            });
        }
        Ok(())
    }

    fn budget(&self) -> u32 {
        self.locktime_max.saturating_sub(self.tau_min)
    }
}

/// Forwarding delay of `traversals` alternating crossings starting at the victim.
pub fn alternating_timeout(outbound: u32, inbound: u32, traversals: u32) -> u32 {
    let back = traversals / 2;
    let forth = traversals - back;
    forth * outbound + back * inbound
}

/// Most alternating crossings (victim side first) within both the hop limit
/// and the locktime budget. Zero means the channel cannot be held at all.
pub fn max_traversals(outbound: &ChannelPolicy, inbound: &ChannelPolicy, config: &IsolationConfig) -> u32 {
    let budget = config.budget();
    let (o, i) = (outbound.cltv_expiry_delta, inbound.cltv_expiry_delta);
    (0..=MAX_TRAVERSALS)
        .rev()
        .find(|&k| alternating_timeout(o, i, k) <= budget)
        .unwrap_or(0)
}

/// A single withheld payment on one target channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackForthRoute {
    pub target_channel: String,
    /// Node the attacker enters at.
    pub entry: String,
    /// Node the payment leaves from towards the attacker.
    pub exit: String,
    /// Crossings of the target channel, in order.
    pub hops: Vec<RouteHop>,
    pub timeout_sum: u32,
    pub lock_duration: u32,
}

impl BackForthRoute {
    pub fn traversals(&self) -> u32 {
        self.hops.len() as u32
    }

    /// Leaves through the entry channel.
    pub fn is_round_trip(&self) -> bool {
        self.entry == self.exit
    }
}

/// How one victim channel is filled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelIsolation {
    pub channel_id: String,
    pub victim: String,
    pub neighbor: String,
    pub capacity_sat: u64,
    pub slot_limit: u32,
    pub outbound: ChannelPolicy,
    pub inbound: ChannelPolicy,
    /// Usable crossings per round trip (even).
    pub traversals: u32,
    pub full_payments: u32,
    /// Crossings of the shorter closing round trip, 0 if none.
    pub trim_traversals: u32,
    pub pass_throughs: u32,
}

impl ChannelIsolation {
    #[allow(clippy::too_many_arguments)]
    fn new(
        channel_id: String,
        victim: String,
        neighbor: String,
        capacity_sat: u64,
        slot_limit: u32,
        outbound: ChannelPolicy,
        inbound: ChannelPolicy,
        k: u32,
    ) -> Self {
        let traversals = k - k % 2;
        let (full_payments, rest) = match slot_limit.checked_div(traversals) {
            Some(full) => (full, slot_limit % traversals),
            None => (0, slot_limit),
        };
        let trim_traversals = if traversals == 0 { 0 } else { rest - rest % 2 };
        let pass_throughs = if traversals == 0 { slot_limit } else { rest % 2 };
        Self {
            channel_id,
            victim,
            neighbor,
            capacity_sat,
            slot_limit,
            outbound,
            inbound,
            traversals,
            full_payments,
            trim_traversals,
            pass_throughs,
        }
    }

    /// Back-and-forth payments, the trim included.
    pub fn round_trips(&self) -> u32 {
        self.full_payments + u32::from(self.trim_traversals > 0)
    }

    /// Slots taken on the attacker's channel into the victim.
    pub fn entry_slots(&self) -> u32 {
        2 * self.round_trips() + self.pass_throughs
    }

    pub fn locked_slots(&self) -> u32 {
        self.full_payments * self.traversals + self.trim_traversals + self.pass_throughs
    }

    pub fn max_timeout(&self) -> u32 {
        let t = if self.full_payments > 0 {
            self.traversals
        } else if self.trim_traversals > 0 {
            self.trim_traversals
        } else {
            u32::from(self.pass_throughs > 0)
        };
        alternating_timeout(self.outbound.cltv_expiry_delta, self.inbound.cltv_expiry_delta, t)
    }

    fn route(&self, traversals: u32, locktime_max: u32) -> BackForthRoute {
        let hops: Vec<RouteHop> = (0..traversals)
            .map(|i| {
                let (from, to, policy) = if i % 2 == 0 {
                    (&self.victim, &self.neighbor, self.outbound)
                } else {
                    (&self.neighbor, &self.victim, self.inbound)
                };
                RouteHop {
                    channel_id: self.channel_id.clone(),
                    from: from.clone(),
                    to: to.clone(),
                    capacity_sat: self.capacity_sat,
                    policy,
                }
            })
            .collect();
        let timeout_sum = hops.iter().map(|h| h.policy.cltv_expiry_delta).sum::<u32>();
        BackForthRoute {
            target_channel: self.channel_id.clone(),
            entry: self.victim.clone(),
            exit: hops.last().map_or(self.victim.clone(), |h| h.to.clone()),
            hops,
            timeout_sum,
            lock_duration: locktime_max - timeout_sum,
        }
    }

    /// Every payment, full round trips first.
    pub fn payments(&self, locktime_max: u32) -> Vec<BackForthRoute> {
        let mut out = Vec::new();
        for _ in 0..self.full_payments {
            out.push(self.route(self.traversals, locktime_max));
        }
        if self.trim_traversals > 0 {
            out.push(self.route(self.trim_traversals, locktime_max));
        }
        for _ in 0..self.pass_throughs {
            out.push(self.route(1, locktime_max));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationPlan {
    /// One node for a single hub; several for a group.
    pub victims: Vec<String>,
    pub config: IsolationConfig,
    pub per_channel: Vec<ChannelIsolation>,
    /// Victim channels that cannot be crossed even once within the budget.
    pub unparalyzable: Vec<String>,
    /// Slots used on attacker-to-victim channels, per victim.
    pub entry_slots: BTreeMap<String, u32>,
    /// Slot capacity of one attacker-to-victim channel, per victim.
    pub entry_slot_budget: BTreeMap<String, u32>,
    /// Attacker channels into the victims.
    pub attacker_channels_needed: u32,
    /// Attacker channels at neighbors, used only by pass-through payments.
    pub exit_channels_needed: u32,
    pub min_lock_duration: u32,
}

impl IsolationPlan {
    pub fn victim(&self) -> &str {
        &self.victims[0]
    }

    pub fn round_trips(&self) -> u32 {
        self.per_channel.iter().map(|c| c.round_trips()).sum()
    }

    pub fn pass_throughs(&self) -> u32 {
        self.per_channel.iter().map(|c| c.pass_throughs).sum()
    }

    pub fn total_entry_slots(&self) -> u32 {
        self.entry_slots.values().sum()
    }

    pub fn total_channels_needed(&self) -> u32 {
        self.attacker_channels_needed + self.exit_channels_needed
    }
}

/// Per-node row of [`isolate_all`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IsolationSummary {
    pub node_id: String,
    pub degree: usize,
    pub attacker_channels_needed: u32,
    pub exit_channels_needed: u32,
    pub unparalyzable: usize,
}

fn slot_cap(defaults: &DefaultsTable, label: ImplLabel) -> u32 {
    defaults.get(label).max_concurrent_htlcs.clamp(1, MAX_SLOT_LIMIT)
}

/// Isolate one node by filling every channel it has.
pub fn plan_isolation(
    graph: &NetworkGraph,
    labels: &BTreeMap<String, ImplLabel>,
    defaults: &DefaultsTable,
    victim: &str,
    config: &IsolationConfig,
) -> Result<IsolationPlan, IsolationError> {
    plan_group_isolation(graph, labels, defaults, &[victim.to_string()], config)
}

/// Cut a set of nodes off from the rest of the network, leaving channels
/// between members alone.
pub fn plan_group_isolation(
    graph: &NetworkGraph,
    labels: &BTreeMap<String, ImplLabel>,
    defaults: &DefaultsTable,
    members: &[String],
    config: &IsolationConfig,
) -> Result<IsolationPlan, IsolationError> {
    config.validate()?;
    let mut idx = BTreeSet::new();
    for m in members {
        idx.insert(
            graph
                .node_index(m)
                .ok_or_else(|| IsolationError::VictimNotFound(m.clone()))?,
        );
    }
    let limited = apply_slot_limits(graph, labels, defaults)?;

    let mut per_channel = Vec::new();
    let mut unparalyzable = Vec::new();
    for &v in &idx {
        for &ci in limited.incident(v) {
            let ch = limited.channel(ci);
            let n = ch.other_end(v);
            if idx.contains(&n) {
                continue;
            }
            let outbound = *ch.policy_from(v);
            let inbound = *ch.policy_from(n);
            let k = max_traversals(&outbound, &inbound, config);
            if k == 0 {
                unparalyzable.push(ch.channel_id.clone());
                continue;
            }
            per_channel.push(ChannelIsolation::new(
                ch.channel_id.clone(),
                limited.node_id(v).to_string(),
                limited.node_id(n).to_string(),
                ch.capacity_sat,
                ch.slot_limit.expect("slot limits applied"),
                outbound,
                inbound,
                k,
            ));
        }
    }

    let label_of = |id: &str| labels.get(id).copied().unwrap_or_default();
    let mut entry_slots = BTreeMap::new();
    let mut entry_slot_budget = BTreeMap::new();
    for &v in &idx {
        let id = limited.node_id(v).to_string();
        entry_slot_budget.insert(id.clone(), slot_cap(defaults, label_of(&id)));
        entry_slots.insert(id, 0u32);
    }
    let mut exit_slots: BTreeMap<&str, u32> = BTreeMap::new();
    for c in &per_channel {
        *entry_slots.get_mut(&c.victim).expect("victim registered") += c.entry_slots();
        if c.pass_throughs > 0 {
            *exit_slots.entry(c.neighbor.as_str()).or_default() += c.pass_throughs;
        }
    }
    let attacker_channels_needed = entry_slots
        .iter()
        .map(|(v, &s)| s.div_ceil(entry_slot_budget[v]))
        .sum();
    let exit_channels_needed = exit_slots
        .iter()
        .map(|(n, &s)| s.div_ceil(slot_cap(defaults, label_of(n))))
        .sum();
    let min_lock_duration = config.locktime_max
        - per_channel.iter().map(|c| c.max_timeout()).max().unwrap_or(0);

    Ok(IsolationPlan {
        victims: idx.iter().map(|&v| limited.node_id(v).to_string()).collect(),
        config: *config,
        per_channel,
        unparalyzable,
        entry_slots,
        entry_slot_budget,
        attacker_channels_needed,
        exit_channels_needed,
        min_lock_duration,
    })
}

/// Isolation cost of every node, in node order.
pub fn isolate_all(
    graph: &NetworkGraph,
    labels: &BTreeMap<String, ImplLabel>,
    defaults: &DefaultsTable,
    config: &IsolationConfig,
) -> Result<Vec<IsolationSummary>, IsolationError> {
    config.validate()?;
    // fail on missing labels once, before fanning out
    apply_slot_limits(graph, labels, defaults)?;
    graph
        .nodes()
        .par_iter()
        .map(|id| {
            let plan = plan_isolation(graph, labels, defaults, id, config)?;
            Ok(IsolationSummary {
                node_id: id.clone(),
                degree: graph.degree(graph.node_index(id).expect("own node")),
                attacker_channels_needed: plan.attacker_channels_needed,
                exit_channels_needed: plan.exit_channels_needed,
                unparalyzable: plan.unparalyzable.len(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CurveRow {
    pub degree: usize,
    pub attacker_channels_needed: u32,
    pub exit_channels_needed: u32,
}

/// Channels needed to isolate a node of each degree when the node and all of
/// its neighbors run `implementation` with default settings.
pub fn isolation_cost_curve(
    implementation: ImplLabel,
    degrees: impl IntoIterator<Item = usize>,
    defaults: &DefaultsTable,
    config: &IsolationConfig,
) -> Result<Vec<CurveRow>, IsolationError> {
    config.validate()?;
    let d = defaults.get(implementation);
    let policy = d.policy();
    let cap = slot_cap(defaults, implementation);
    let k = max_traversals(&policy, &policy, config);
    let per = ChannelIsolation::new(String::new(), String::new(), String::new(), 0, cap, policy, policy, k);
    Ok(degrees
        .into_iter()
        .map(|degree| {
            let n = degree as u32;
            let (entry, exit) = if k == 0 { (0, 0) } else { (n * per.entry_slots(), per.pass_throughs) };
            CurveRow {
                degree,
                attacker_channels_needed: entry.div_ceil(cap),
                // each neighbor needs its own exit channel
                exit_channels_needed: if exit > 0 { n * exit.div_ceil(cap) } else { 0 },
            }
        })
        .collect())
}

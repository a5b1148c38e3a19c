//! Replay attack plans in the simulator and check that every targeted
//! channel ends up full.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use super::network::{FinalExpiry, HopRef, PaymentRequest, SimChannelSpec, SimConfig, SimNetwork, SimPolicy};
use super::SimError;
use crate::cost::route_floor_msat;
use crate::inference::ImplLabel;
use crate::isolation::IsolationPlan;
use crate::planner::{AttackPlan, RouteHop};
use crate::topology::{apply_slot_limits, DefaultsTable, NetworkGraph, TopologyError, MAX_SLOT_LIMIT};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("plan channel {0} is not in the graph")]
    ChannelMissing(String),
    #[error("could not build the simulated network: {0}")]
    Setup(#[from] SimError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    /// Share of each victim channel's capacity on its first endpoint.
    pub balance_split: f64,
    pub sim: SimConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { balance_split: 0.5, sim: SimConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChannelCheck {
    pub channel_id: String,
    pub pending: u32,
    pub slot_limit: u32,
    /// Error kind a one-hop probe across the channel hit, if it failed.
    pub probe_error: Option<String>,
}

impl ChannelCheck {
    pub fn is_locked(&self) -> bool {
        self.pending == self.slot_limit && self.probe_error.as_deref() == Some("SlotFull")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub payments_sent: usize,
    pub channels: Vec<ChannelCheck>,
    /// Shortest time any targeted HTLC stays in place.
    pub min_lock_duration: Option<u32>,
    /// Isolation only: no victim can be reached over channels with a free slot.
    pub victims_unreachable: Option<bool>,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn all_ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn empty() -> Self {
        Self { payments_sent: 0, channels: Vec::new(), min_lock_duration: None, victims_unreachable: None, failures: Vec::new() }
    }
}

struct Harness<'a> {
    net: SimNetwork,
    defaults: &'a DefaultsTable,
    labels: &'a BTreeMap<String, ImplLabel>,
    attacker: String,
    report: VerifyReport,
}

impl<'a> Harness<'a> {
    fn new(
        graph: &NetworkGraph,
        labels: &'a BTreeMap<String, ImplLabel>,
        defaults: &'a DefaultsTable,
        config: &VerifyConfig,
    ) -> Result<Self, VerifyError> {
        let limited = apply_slot_limits(graph, labels, defaults)?;
        let mut net = SimNetwork::new(config.sim);
        let split = config.balance_split.clamp(0.0, 1.0);
        let dust = |id: &str| defaults.get(labels[id]).dust_limit_satoshis;
        for c in limited.channels() {
            let (a, b) = (limited.node_id(c.node_a), limited.node_id(c.node_b));
            let mut spec = SimChannelSpec::new(c.channel_id.clone(), a, b, c.capacity_sat);
            spec.push_sat = (c.capacity_sat as f64 * (1.0 - split)).round() as u64;
            spec.slot_limit = c.slot_limit.expect("slot limits applied");
            spec.policy_a = SimPolicy::from_channel_policy(&c.policy_a_to_b, dust(a));
            spec.policy_b = SimPolicy::from_channel_policy(&c.policy_b_to_a, dust(b));
            net.open_channel(spec)?;
        }
        let mut attacker = "attacker".to_string();
        while graph.node_index(&attacker).is_some() {
            attacker.push('_');
        }
        Ok(Self { net, defaults, labels, attacker, report: VerifyReport::empty() })
    }

    fn label(&self, node: &str) -> ImplLabel {
        self.labels.get(node).copied().unwrap_or_default()
    }

    fn slot_cap(&self, node: &str) -> u32 {
        self.defaults.get(self.label(node)).max_concurrent_htlcs.clamp(1, MAX_SLOT_LIMIT)
    }

    /// Attacker channel to `node`; `balance_on_node` decides who can send.
    fn open_attacker_channel(&mut self, id: String, node: &str, capacity_sat: u64, push_to_node_sat: u64) -> Result<(), SimError> {
        let mut spec = SimChannelSpec::new(id, self.attacker.clone(), node, capacity_sat);
        spec.push_sat = push_to_node_sat;
        spec.slot_limit = self.slot_cap(node);
        spec.policy_a = SimPolicy { cltv_expiry_delta: 0, htlc_minimum_msat: 1, fee_base_msat: 0, fee_proportional_millionths: 0, dust_limit_sat: 0 };
        spec.policy_b = SimPolicy::from_defaults(self.defaults.get(self.label(node)));
        self.net.open_channel(spec)
    }

    fn exit_min_msat(&self, node: &str) -> u64 {
        self.defaults.get(self.label(node)).htlc_minimum_msat
    }

    /// Try a one-hop payment; a success is rolled back.
    fn probe(&mut self, channel_id: &str, from: &str) -> Option<String> {
        let c = self.net.channel(channel_id)?;
        let side = c.side_of(from)?;
        let amount = c.dust_threshold_msat().max(c.policy(side).htlc_minimum_msat).max(1000);
        let to = c.node(side.other()).to_string();
        let mut req = PaymentRequest::new(vec![HopRef { channel_id: channel_id.into(), from: from.into() }], amount);
        req.hold = true;
        req.final_expiry = FinalExpiry::Blocks(self.defaults.get(self.label(&to)).min_final_cltv_expiry);
        match self.net.send_payment(&req) {
            Ok(id) => {
                let _ = self.net.fail_payment(id);
                None
            }
            Err(e) => Some(e.kind().to_string()),
        }
    }

    fn check_channel(&mut self, channel_id: &str, probe_from: &str) {
        let Some(c) = self.net.channel(channel_id) else { return };
        let (pending, slot_limit) = (c.pending.len() as u32, c.slot_limit);
        let probe_error = self.probe(channel_id, probe_from);
        let check = ChannelCheck { channel_id: channel_id.to_string(), pending, slot_limit, probe_error };
        if !check.is_locked() {
            self.report.failures.push(format!(
                "channel {channel_id}: {pending}/{slot_limit} slots held, probe {}",
                check.probe_error.as_deref().unwrap_or("succeeded")
            ));
        }
        self.report.channels.push(check);
    }

    /// Lock left on the HTLCs of `payment` that sit on victim channels.
    fn note_lock(&mut self, payment: u64, victim_hops: std::ops::Range<usize>) {
        let height = self.net.height();
        if let Some(p) = self.net.payment(payment) {
            if let Some(min) = p.hops[victim_hops].iter().map(|h| h.expiry_height - height).min() {
                let cur = self.report.min_lock_duration.get_or_insert(min);
                *cur = (*cur).min(min);
            }
        }
    }

    fn send_held(&mut self, hops: Vec<HopRef>, amount_msat: u64, what: &str) -> Option<u64> {
        let n = hops.len();
        let mut req = PaymentRequest::new(hops, amount_msat).held();
        req.label = Some(what.to_string());
        match self.net.send_payment(&req) {
            Ok(id) => {
                self.report.payments_sent += 1;
                self.note_lock(id, 1..n - 1);
                Some(id)
            }
            Err(e) => {
                self.report.failures.push(format!("{what} rejected: {e}"));
                None
            }
        }
    }
}

fn hop_refs(hops: &[RouteHop]) -> impl Iterator<Item = HopRef> + '_ {
    hops.iter().map(|h| HopRef { channel_id: h.channel_id.clone(), from: h.from.clone() })
}

fn check_channels_exist<'a>(graph: &NetworkGraph, ids: impl Iterator<Item = &'a str>) -> Result<(), VerifyError> {
    for id in ids {
        if graph.channel_index(id).is_none() {
            return Err(VerifyError::ChannelMissing(id.to_string()));
        }
    }
    Ok(())
}

/// Send every route's payments from a fresh attacker and confirm each
/// targeted channel is full.
pub fn execute_plan(
    plan: &AttackPlan,
    graph: &NetworkGraph,
    labels: &BTreeMap<String, ImplLabel>,
    defaults: &DefaultsTable,
    config: &VerifyConfig,
) -> Result<VerifyReport, VerifyError> {
    if plan.routes.is_empty() {
        return Ok(VerifyReport::empty());
    }
    check_channels_exist(graph, plan.routes.iter().flat_map(|r| r.channel_ids()))?;
    let mut h = Harness::new(graph, labels, defaults, config)?;
    for (i, route) in plan.routes.iter().enumerate() {
        let first = route.hops[0].from.clone();
        let last = route.hops[route.hops.len() - 1].to.clone();
        let amount = route_floor_msat(&route.hops, &plan.node_dust_sat).max(h.exit_min_msat(&last));
        // generous: fees stay far below the floor amount
        let capacity_sat = (route.slot_class as u64 * amount * 2).div_ceil(1000) + 100_000;
        let (entry, exit) = (format!("{}-in-{i}", h.attacker), format!("{}-out-{i}", h.attacker));
        h.open_attacker_channel(entry.clone(), &first, capacity_sat, 0)?;
        h.open_attacker_channel(exit.clone(), &last, capacity_sat, capacity_sat)?;
        let mut hops = vec![HopRef { channel_id: entry, from: h.attacker.clone() }];
        hops.extend(hop_refs(&route.hops));
        hops.push(HopRef { channel_id: exit, from: last });
        for j in 0..route.slot_class {
            if h.send_held(hops.clone(), amount, &format!("route {i} payment {}", j + 1)).is_none() {
                break;
            }
        }
    }
    for route in &plan.routes {
        for hop in &route.hops {
            h.check_channel(&hop.channel_id, &hop.from);
        }
    }
    Ok(h.report)
}

/// Pool of parallel attacker channels used first to last.
struct Pool {
    channels: Vec<String>,
}

impl Pool {
    fn pick(&self, net: &SimNetwork, reserved: &BTreeMap<String, u32>) -> Option<String> {
        self.channels
            .iter()
            .find(|id| {
                net.channel(id)
                    .is_some_and(|c| c.free_slots() > reserved.get(*id).copied().unwrap_or(0))
            })
            .cloned()
    }
}

/// Fill every channel of an isolation plan and confirm the victims can no
/// longer be reached.
pub fn execute_isolation(
    plan: &IsolationPlan,
    graph: &NetworkGraph,
    labels: &BTreeMap<String, ImplLabel>,
    defaults: &DefaultsTable,
    config: &VerifyConfig,
) -> Result<VerifyReport, VerifyError> {
    check_channels_exist(graph, plan.per_channel.iter().map(|c| c.channel_id.as_str()))?;
    let mut h = Harness::new(graph, labels, defaults, config)?;
    let locktime_max = h.net.config.locktime_max;

    let mut dust = BTreeMap::new();
    for c in &plan.per_channel {
        for n in [&c.victim, &c.neighbor] {
            dust.insert(n.clone(), defaults.get(h.label(n)).dust_limit_satoshis);
        }
    }
    let capacity_sat = |slots: u32| (slots as u64 * 4_000_000).div_ceil(1000) + 100_000;

    let mut entry_pools: BTreeMap<String, Pool> = BTreeMap::new();
    for v in &plan.victims {
        let slots = plan.entry_slots.get(v).copied().unwrap_or(0);
        let budget = plan.entry_slot_budget.get(v).copied().unwrap_or(1).max(1);
        let mut pool = Pool { channels: Vec::new() };
        for j in 0..slots.div_ceil(budget) {
            let id = format!("{}-in-{v}-{j}", h.attacker);
            let cap = capacity_sat(budget);
            h.open_attacker_channel(id.clone(), v, cap, cap / 2)?;
            pool.channels.push(id);
        }
        entry_pools.insert(v.clone(), pool);
    }
    let mut exit_slots: BTreeMap<String, u32> = BTreeMap::new();
    for c in &plan.per_channel {
        if c.pass_throughs > 0 {
            *exit_slots.entry(c.neighbor.clone()).or_default() += c.pass_throughs;
        }
    }
    let mut exit_pools: BTreeMap<String, Pool> = BTreeMap::new();
    for (n, slots) in &exit_slots {
        let cap_slots = h.slot_cap(n);
        let mut pool = Pool { channels: Vec::new() };
        for j in 0..slots.div_ceil(cap_slots) {
            let id = format!("{}-out-{n}-{j}", h.attacker);
            let cap = capacity_sat(cap_slots);
            h.open_attacker_channel(id.clone(), n, cap, cap)?;
            pool.channels.push(id);
        }
        exit_pools.insert(n.clone(), pool);
    }

    for c in &plan.per_channel {
        for (j, p) in c.payments(locktime_max).into_iter().enumerate() {
            let what = format!("channel {} payment {}", c.channel_id, j + 1);
            let mut reserved = BTreeMap::new();
            let Some(entry) = entry_pools[&c.victim].pick(&h.net, &reserved) else {
                h.report.failures.push(format!("{what}: no free attacker slot at {}", c.victim));
                break;
            };
            *reserved.entry(entry.clone()).or_default() += 1;
            let exit_pool = if p.is_round_trip() { &entry_pools[&c.victim] } else { &exit_pools[&c.neighbor] };
            let Some(exit) = exit_pool.pick(&h.net, &reserved) else {
                h.report.failures.push(format!("{what}: no free attacker slot at {}", p.exit));
                break;
            };
            let amount = route_floor_msat(&p.hops, &dust).max(h.exit_min_msat(&p.exit));
            let mut hops = vec![HopRef { channel_id: entry, from: h.attacker.clone() }];
            hops.extend(hop_refs(&p.hops));
            hops.push(HopRef { channel_id: exit, from: p.exit.clone() });
            if h.send_held(hops, amount, &what).is_none() {
                break;
            }
        }
    }

    for c in &plan.per_channel {
        h.check_channel(&c.channel_id, &c.neighbor);
    }
    let attacker = h.attacker.clone();
    let members: BTreeSet<&str> = plan.victims.iter().map(String::as_str).collect();
    let mut unreachable = true;
    for v in &plan.victims {
        let reach = h.net.reachable_with_free_slots(v, |c| c.a == attacker || c.b == attacker);
        if let Some(outside) = reach.iter().find(|n| !members.contains(n.as_str())) {
            unreachable = false;
            h.report.failures.push(format!("victim {v} still reaches {outside}"));
        }
    }
    h.report.victims_unreachable = Some(unreachable);
    Ok(h.report)
}

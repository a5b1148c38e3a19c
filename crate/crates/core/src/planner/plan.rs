use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{choose_routes_detailed, AttackRoute, PlanError, PlannerConfig, RouteSelection};
use crate::inference::ImplLabel;
use crate::topology::{apply_slot_limits, DefaultsTable, NetworkGraph};

/// Routes selected for a network-wide attack, heaviest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackPlan {
    pub config: PlannerConfig,
    pub routes: Vec<AttackRoute>,
    /// Capacity of the whole analyzed graph.
    pub total_capacity_sat: u64,
    /// Channels no route can hold for `tau_min` blocks.
    pub unroutable: Vec<String>,
    /// Implementation of every node touched by a route.
    pub node_labels: BTreeMap<String, ImplLabel>,
    /// Dust limit of every node touched by a route.
    pub node_dust_sat: BTreeMap<String, u64>,
}

/// Attack state after the first `routes` routes are locked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub routes: usize,
    pub attacker_channels: usize,
    pub locked_capacity_sat: u64,
    pub capacity_fraction: f64,
}

impl AttackPlan {
    /// Wrap already-selected routes, recording label and dust of every route node.
    pub fn from_routes(
        config: &PlannerConfig,
        routes: Vec<AttackRoute>,
        unroutable: Vec<String>,
        total_capacity_sat: u64,
        labels: &BTreeMap<String, ImplLabel>,
        defaults: &DefaultsTable,
    ) -> Self {
        let mut node_labels = BTreeMap::new();
        let mut node_dust_sat = BTreeMap::new();
        for node in routes.iter().flat_map(|r| r.nodes()) {
            let label = labels.get(node).copied().unwrap_or_default();
            node_labels.insert(node.to_string(), label);
            node_dust_sat.insert(node.to_string(), defaults.get(label).dust_limit_satoshis);
        }
        Self {
            config: *config,
            routes,
            total_capacity_sat,
            unroutable,
            node_labels,
            node_dust_sat,
        }
    }

    pub fn attacker_channels(&self) -> usize {
        2 * self.routes.len()
    }

    pub fn locked_capacity_sat(&self) -> u64 {
        self.routes.iter().map(|r| r.capacity_sat()).sum()
    }

    pub fn capacity_fraction(&self) -> f64 {
        fraction(self.locked_capacity_sat(), self.total_capacity_sat)
    }

    /// One point per route prefix, starting from the empty attack.
    pub fn curve(&self) -> Vec<CurvePoint> {
        let mut out = Vec::with_capacity(self.routes.len() + 1);
        let mut locked = 0u64;
        out.push(CurvePoint {
            routes: 0,
            attacker_channels: 0,
            locked_capacity_sat: 0,
            capacity_fraction: 0.0,
        });
        for (i, r) in self.routes.iter().enumerate() {
            locked += r.capacity_sat();
            out.push(CurvePoint {
                routes: i + 1,
                attacker_channels: 2 * (i + 1),
                locked_capacity_sat: locked,
                capacity_fraction: fraction(locked, self.total_capacity_sat),
            });
        }
        out
    }

    /// Locked fraction reachable with `budget_channels` attacker channels.
    pub fn fraction_at_budget(&self, budget_channels: usize) -> f64 {
        let k = (budget_channels / 2).min(self.routes.len());
        let locked: u64 = self.routes[..k].iter().map(|r| r.capacity_sat()).sum();
        fraction(locked, self.total_capacity_sat)
    }

    pub fn truncate_to_budget(&mut self, budget_channels: usize) {
        self.routes.truncate(budget_channels / 2);
        let keep: BTreeSet<&str> = self.routes.iter().flat_map(|r| r.nodes()).collect();
        self.node_labels.retain(|k, _| keep.contains(k.as_str()));
        self.node_dust_sat.retain(|k, _| keep.contains(k.as_str()));
    }
}

pub(crate) fn fraction(part: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        part as f64 / total as f64
    }
}

/// Plan every slot class of a graph whose slot limits are already set, and
/// merge the routes heaviest first.
pub fn plan_routes(graph: &NetworkGraph, config: &PlannerConfig) -> Result<RouteSelection, PlanError> {
    config.validate()?;
    let mut classes = BTreeSet::new();
    for c in graph.channels() {
        classes.insert(
            c.slot_limit
                .ok_or_else(|| PlanError::SlotLimitUnset(c.channel_id.clone()))?,
        );
    }
    let mut routes = Vec::new();
    let mut unroutable = Vec::new();
    // smaller classes first, so equal weights keep a stable class order
    for class in classes {
        let sub = graph.retain_channels(|c| c.slot_limit == Some(class));
        let sel = choose_routes_detailed(&sub, config)?;
        routes.extend(sel.routes);
        unroutable.extend(sel.unroutable);
    }
    routes.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    unroutable.sort();
    Ok(RouteSelection { routes, unroutable })
}

/// Plan a network-wide attack with at most `budget_channels` attacker
/// channels (all routes when `None`).
pub fn plan_network_attack(
    graph: &NetworkGraph,
    labels: &BTreeMap<String, ImplLabel>,
    defaults: &DefaultsTable,
    config: &PlannerConfig,
    budget_channels: Option<usize>,
) -> Result<AttackPlan, PlanError> {
    if let Some(b) = budget_channels {
        if b < 2 {
            return Err(PlanError::BudgetTooSmall(b));
        }
    }
    let limited = apply_slot_limits(graph, labels, defaults)?;
    let sel = plan_routes(&limited, config)?;
    let mut plan = AttackPlan::from_routes(
        config,
        sel.routes,
        sel.unroutable,
        graph.total_capacity_sat(),
        labels,
        defaults,
    );
    if let Some(b) = budget_channels {
        plan.truncate_to_budget(b);
    }
    Ok(plan)
}

/// Fraction of capacity held by the `per_route * floor(budget / 2)` largest
/// channels, ignoring connectivity and locktime.
pub fn upper_bound_capacity(graph: &NetworkGraph, budget_channels: usize) -> f64 {
    upper_bound_capacity_with(graph, budget_channels, super::MAX_ROUTE_CHANNELS)
}

pub fn upper_bound_capacity_with(graph: &NetworkGraph, budget_channels: usize, per_route: usize) -> f64 {
    let mut caps: Vec<u64> = graph.channels().iter().map(|c| c.capacity_sat).collect();
    caps.sort_unstable_by(|a, b| b.cmp(a));
    let take = per_route.saturating_mul(budget_channels / 2);
    let top: u64 = caps.iter().take(take).sum();
    fraction(top, graph.total_capacity_sat())
}

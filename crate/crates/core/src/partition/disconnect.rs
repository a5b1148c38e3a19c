use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{connected_pairs_fraction, fiedler_cut, kernighan_lin_cut, PartitionError};
use crate::inference::ImplLabel;
use crate::planner::{plan_routes, AttackPlan, AttackRoute, PlannerConfig, WeightMode};
use crate::topology::{apply_slot_limits, DefaultsTable, NetworkGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    GreedyBetweenness,
    Spectral,
    KernighanLin,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::GreedyBetweenness, Method::Spectral, Method::KernighanLin];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::GreedyBetweenness => "betweenness",
            Method::Spectral => "spectral",
            Method::KernighanLin => "kl",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = PartitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "betweenness" | "greedy" => Ok(Method::GreedyBetweenness),
            "spectral" | "fiedler" => Ok(Method::Spectral),
            "kl" | "kernighan-lin" => Ok(Method::KernighanLin),
            _ => Err(PartitionError::UnknownMethod(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConnectivityPoint {
    pub attacker_channels: usize,
    pub connected_pairs_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectivityReport {
    pub method: Method,
    /// Starts at zero attacker channels; one point per locked route.
    pub curve: Vec<ConnectivityPoint>,
}

impl ConnectivityReport {
    pub fn final_fraction(&self) -> f64 {
        self.curve.last().map_or(1.0, |p| p.connected_pairs_fraction)
    }
}

/// Lock routes chosen to split the network, spending at most
/// `budget_channels` attacker channels.
///
/// Cut-based methods bisect the largest remaining component, pack the cut
/// channels into routes per slot class, remove them and repeat.
pub fn plan_disconnection(
    graph: &NetworkGraph,
    labels: &BTreeMap<String, ImplLabel>,
    defaults: &DefaultsTable,
    config: &PlannerConfig,
    method: Method,
    budget_channels: usize,
) -> Result<(ConnectivityReport, AttackPlan), PartitionError> {
    let max_routes = budget_channels / 2;
    let limited = apply_slot_limits(graph, labels, defaults)?;
    let (routes, unroutable) = if max_routes == 0 {
        (Vec::new(), Vec::new())
    } else {
        match method {
            Method::GreedyBetweenness => {
                let c = PlannerConfig { weight_mode: WeightMode::Betweenness, ..*config };
                let mut sel = plan_routes(&limited, &c)?;
                sel.routes.truncate(max_routes);
                (sel.routes, sel.unroutable)
            }
            Method::Spectral | Method::KernighanLin => cut_routes(&limited, config, method, max_routes)?,
        }
    };

    let mut curve = vec![ConnectivityPoint {
        attacker_channels: 0,
        connected_pairs_fraction: connected_pairs_fraction(graph)?,
    }];
    let mut removed: BTreeSet<String> = BTreeSet::new();
    for (i, r) in routes.iter().enumerate() {
        removed.extend(r.channel_ids().map(str::to_string));
        let rest = graph.without_channels(removed.iter().map(String::as_str));
        curve.push(ConnectivityPoint {
            attacker_channels: 2 * (i + 1),
            connected_pairs_fraction: connected_pairs_fraction(&rest)?,
        });
    }
    let plan = AttackPlan::from_routes(
        config,
        routes,
        unroutable,
        graph.total_capacity_sat(),
        labels,
        defaults,
    );
    Ok((ConnectivityReport { method, curve }, plan))
}

fn cut_routes(
    graph: &NetworkGraph,
    config: &PlannerConfig,
    method: Method,
    max_routes: usize,
) -> Result<(Vec<AttackRoute>, Vec<String>), PartitionError> {
    let min_nodes = if method == Method::Spectral { 3 } else { 4 };
    let mut working = graph.clone();
    let mut routes: Vec<AttackRoute> = Vec::new();
    let mut unroutable = BTreeSet::new();
    while routes.len() < max_routes {
        if working.largest_component().len() < min_nodes {
            break;
        }
        let cut = match method {
            Method::Spectral => fiedler_cut(&working)?,
            _ => kernighan_lin_cut(&working)?,
        };
        let cut_set: BTreeSet<&str> = cut.cut_channels.iter().map(String::as_str).collect();
        let cut_graph = working.retain_channels(|c| cut_set.contains(c.channel_id.as_str()));
        let sel = plan_routes(&cut_graph, config)?;
        unroutable.extend(sel.unroutable);
        if sel.routes.is_empty() {
            break;
        }
        let mut locked: Vec<String> = Vec::new();
        for r in sel.routes {
            if routes.len() == max_routes {
                break;
            }
            locked.extend(r.channel_ids().map(str::to_string));
            routes.push(r);
        }
        working = working.without_channels(locked.iter().map(String::as_str));
    }
    Ok((routes, unroutable.into_iter().collect()))
}

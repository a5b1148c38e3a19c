use std::cmp::Ordering;

use super::{
    AttackRoute, BetweennessRecompute, PlanError, PlannerConfig, RouteHop, WeightMode,
};
use crate::partition::edge_betweenness;
use crate::topology::NetworkGraph;

/// Whether a hop charging `candidate_delta` keeps a route whose forwarding
/// deltas already sum to `timeout_sum` locked for at least `tau_min` blocks.
pub fn can_extend_route(candidate_delta: u32, timeout_sum: u32, config: &PlannerConfig) -> bool {
    let budget = config.locktime_max as i64 - config.tau_min as i64 - timeout_sum as i64;
    (candidate_delta as i64) <= budget
}

/// Routes plus the channels that could not start a route at all.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteSelection {
    pub routes: Vec<AttackRoute>,
    /// Channels whose cheaper direction alone exceeds the timeout budget.
    pub unroutable: Vec<String>,
}

/// Split a single-slot-class graph into disjoint attack routes.
///
/// Every channel ends up in exactly one route unless even its cheaper
/// direction breaks the lock budget, in which case it is left out.
pub fn choose_routes(graph: &NetworkGraph, config: &PlannerConfig) -> Result<Vec<AttackRoute>, PlanError> {
    Ok(choose_routes_detailed(graph, config)?.routes)
}

pub fn choose_routes_detailed(
    graph: &NetworkGraph,
    config: &PlannerConfig,
) -> Result<RouteSelection, PlanError> {
    config.validate()?;
    let Some(slot_class) = uniform_slot_class(graph)? else {
        return Ok(RouteSelection { routes: Vec::new(), unroutable: Vec::new() });
    };

    let m = graph.channel_count();
    let mut used = vec![false; m];
    let mut remaining = m;
    let mut weights = initial_weights(graph, config.weight_mode);
    // Static weights: one ordering, consumed front to back.
    let static_order = match (config.weight_mode, config.betweenness_recompute) {
        (WeightMode::Betweenness, BetweennessRecompute::PerRoute) => None,
        _ => {
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| start_cmp(graph, &weights, x, y));
            Some(order)
        }
    };
    let mut cursor = 0usize;

    let mut routes = Vec::new();
    let mut unroutable = Vec::new();
    while remaining > 0 {
        let start = match &static_order {
            Some(order) => {
                while used[order[cursor]] {
                    cursor += 1;
                }
                order[cursor]
            }
            None => {
                refresh_betweenness(graph, &used, &mut weights);
                (0..m)
                    .filter(|&c| !used[c])
                    .min_by(|&x, &y| start_cmp(graph, &weights, x, y))
                    .expect("remaining > 0")
            }
        };

        used[start] = true;
        remaining -= 1;
        let ch = graph.channel(start);
        // Orient so the first forwarder is the one with the smaller delta.
        let (from, to) = if ch.policy_b_to_a.cltv_expiry_delta < ch.policy_a_to_b.cltv_expiry_delta {
            (ch.node_b, ch.node_a)
        } else {
            (ch.node_a, ch.node_b)
        };
        let first_delta = ch.policy_from(from).cltv_expiry_delta;
        if !can_extend_route(first_delta, 0, config) {
            unroutable.push(ch.channel_id.clone());
            continue;
        }

        let mut hops = vec![hop(graph, start, from)];
        let mut timeout_sum = first_delta;
        let mut weight = weights[start];
        let mut head = to;
        while hops.len() < config.max_route_channels {
            let next = graph
                .incident(head)
                .iter()
                .copied()
                .filter(|&c| !used[c])
                .filter(|&c| {
                    can_extend_route(graph.channel(c).policy_from(head).cltv_expiry_delta, timeout_sum, config)
                })
                .min_by(|&x, &y| extend_cmp(graph, &weights, head, x, y));
            let Some(next) = next else { break };
            used[next] = true;
            remaining -= 1;
            timeout_sum += graph.channel(next).policy_from(head).cltv_expiry_delta;
            weight += weights[next];
            hops.push(hop(graph, next, head));
            head = graph.channel(next).other_end(head);
        }

        routes.push(AttackRoute {
            hops,
            timeout_sum,
            lock_duration: config.locktime_max - timeout_sum,
            weight,
            slot_class,
        });
    }
    Ok(RouteSelection { routes, unroutable })
}

fn hop(graph: &NetworkGraph, channel: usize, from: usize) -> RouteHop {
    let ch = graph.channel(channel);
    RouteHop {
        channel_id: ch.channel_id.clone(),
        from: graph.node_id(from).to_string(),
        to: graph.node_id(ch.other_end(from)).to_string(),
        capacity_sat: ch.capacity_sat,
        policy: *ch.policy_from(from),
    }
}

fn uniform_slot_class(graph: &NetworkGraph) -> Result<Option<u32>, PlanError> {
    let mut class = None;
    for c in graph.channels() {
        let limit = c
            .slot_limit
            .ok_or_else(|| PlanError::SlotLimitUnset(c.channel_id.clone()))?;
        match class {
            None => class = Some(limit),
            Some(k) if k != limit => return Err(PlanError::MixedSlotClass(k, limit)),
            _ => {}
        }
    }
    Ok(class)
}

/// Betweenness is rounded to 9 decimals so symmetric channels tie exactly.
fn quantize(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

fn initial_weights(graph: &NetworkGraph, mode: WeightMode) -> Vec<f64> {
    match mode {
        WeightMode::Capacity => graph.channels().iter().map(|c| c.capacity_sat as f64).collect(),
        WeightMode::Betweenness => edge_betweenness(graph).into_iter().map(quantize).collect(),
    }
}

fn refresh_betweenness(graph: &NetworkGraph, used: &[bool], weights: &mut [f64]) {
    // retain_channels keeps channel order, so live index k is the k-th unused channel
    let live = graph.retain_channels(|c| {
        !used[graph.channel_index(&c.channel_id).expect("channel from same graph")]
    });
    let unused = (0..graph.channel_count()).filter(|&c| !used[c]);
    for (b, orig) in edge_betweenness(&live).into_iter().zip(unused) {
        weights[orig] = quantize(b);
    }
}

/// Heavier first, then smaller delta, then channel id (= index order).
fn start_cmp(graph: &NetworkGraph, weights: &[f64], x: usize, y: usize) -> Ordering {
    weights[y]
        .total_cmp(&weights[x])
        .then(graph.channel(x).min_delta().cmp(&graph.channel(y).min_delta()))
        .then(x.cmp(&y))
}

fn extend_cmp(graph: &NetworkGraph, weights: &[f64], head: usize, x: usize, y: usize) -> Ordering {
    let dx = graph.channel(x).policy_from(head).cltv_expiry_delta;
    let dy = graph.channel(y).policy_from(head).cltv_expiry_delta;
    weights[y].total_cmp(&weights[x]).then(dx.cmp(&dy)).then(x.cmp(&y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{graph_from_edges, graph_from_edges_with};
    use crate::topology::ChannelPolicy;
    use std::collections::BTreeSet;

    fn cfg() -> PlannerConfig {
        PlannerConfig::default()
    }

    #[test]
    fn extension_boundary() {
        let c = cfg();
        assert!(can_extend_route(1584, 0, &c));
        assert!(!can_extend_route(1585, 0, &c));
        assert!(!can_extend_route(40, 1560, &c));
        assert!(can_extend_route(24, 1560, &c));
        assert!(can_extend_route(0, 1584, &c));
        assert!(can_extend_route(0, 0, &c));
    }

    #[test]
    fn path_graph_forms_one_route() {
        let g = graph_from_edges(&[(0, 1), (1, 2)], 40).with_uniform_slot_limit(483);
        let routes = choose_routes(&g, &cfg()).unwrap();
        assert_eq!(routes.len(), 1);
        let r = &routes[0];
        assert_eq!(r.len(), 2);
        assert_eq!(r.timeout_sum, 80);
        assert_eq!(r.lock_duration, 1936);
        assert!(r.lock_duration >= 432);
        assert_eq!(r.slot_class, 483);
        // equal capacities: e000 first, oriented n000 -> n001, then extended at n001
        assert_eq!(r.nodes(), vec!["n000", "n001", "n002"]);
    }

    #[test]
    fn star_with_expensive_center() {
        let center = ChannelPolicy::new(144, 1000, 1000, 1);
        let leaf = ChannelPolicy::new(40, 1000, 1000, 1);
        let edges: Vec<(usize, usize)> = (1..=5).map(|l| (0, l)).collect();
        let g = graph_from_edges_with(&edges, |_| (1_000_000, center, leaf)).with_uniform_slot_limit(483);
        let routes = choose_routes(&g, &cfg()).unwrap();
        let mut covered = BTreeSet::new();
        for r in &routes {
            assert!(r.timeout_sum <= 2016 - 432);
            // leaf forwards first (cheaper direction), then the center
            assert_eq!(r.hops[0].policy.cltv_expiry_delta, 40);
            for id in r.channel_ids() {
                assert!(covered.insert(id.to_string()));
            }
        }
        assert_eq!(covered.len(), 5);
        assert_eq!(routes.iter().map(|r| r.len()).collect::<Vec<_>>(), vec![2, 2, 1]);
        assert_eq!(routes[0].timeout_sum, 184);
    }

    #[test]
    fn single_channel() {
        let g = graph_from_edges(&[(0, 1)], 40).with_uniform_slot_limit(30);
        let routes = choose_routes(&g, &cfg()).unwrap();
        assert_eq!(routes.len(), 1);
        assert_eq!(routes[0].channel_ids().collect::<Vec<_>>(), vec!["e000"]);
        assert_eq!(routes[0].slot_class, 30);
    }

    #[test]
    fn mixed_or_missing_slot_class_rejected() {
        let g = graph_from_edges(&[(0, 1), (1, 2)], 40);
        assert!(matches!(choose_routes(&g, &cfg()), Err(PlanError::SlotLimitUnset(_))));
        let mixed = g.with_slot_limits(|c| Some(if c.channel_id == "e000" { 30 } else { 483 }));
        assert!(matches!(choose_routes(&mixed, &cfg()), Err(PlanError::MixedSlotClass(30, 483))));
    }

    #[test]
    fn infeasible_channel_is_left_out() {
        let slow = ChannelPolicy::new(1600, 1000, 1000, 1);
        let g = graph_from_edges_with(&[(0, 1), (1, 2)], |i| {
            (1_000_000, if i == 0 { slow } else { ChannelPolicy::new(40, 1, 1, 1) }, slow)
        })
        .with_uniform_slot_limit(483);
        let sel = choose_routes_detailed(&g, &cfg()).unwrap();
        assert_eq!(sel.unroutable, vec!["e000".to_string()]);
        assert_eq!(sel.routes.len(), 1);
    }

    #[test]
    fn max_route_channels_caps_length() {
        let edges: Vec<(usize, usize)> = (0..30).map(|i| (i, i + 1)).collect();
        let g = graph_from_edges(&edges, 14).with_uniform_slot_limit(483);
        let routes = choose_routes(&g, &cfg()).unwrap();
        assert!(routes.iter().all(|r| r.len() <= 18));
        assert_eq!(routes.iter().map(|r| r.len()).sum::<usize>(), 30);
        let short = PlannerConfig { max_route_channels: 1, ..cfg() };
        assert_eq!(choose_routes(&g, &short).unwrap().len(), 30);
    }

    #[test]
    fn betweenness_mode_starts_at_bridge() {
        let g = graph_from_edges(&[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)], 40)
            .with_uniform_slot_limit(483);
        for recompute in [BetweennessRecompute::PerRoute, BetweennessRecompute::Once] {
            let c = PlannerConfig {
                weight_mode: WeightMode::Betweenness,
                betweenness_recompute: recompute,
                ..cfg()
            };
            let routes = choose_routes(&g, &c).unwrap();
            assert_eq!(routes[0].hops[0].channel_id, "e003");
            let total: usize = routes.iter().map(|r| r.len()).sum();
            assert_eq!(total, 7);
        }
    }
}

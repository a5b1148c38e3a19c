//! Seeded synthetic topologies for tests, examples and benchmarks.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::inference::ImplLabel;
use crate::topology::{
    build_graph, ChannelPolicy, ChannelRecord, ChannelSpec, DefaultsTable, NetworkGraph,
    NodeRecord, Snapshot,
};

/// Graph over nodes `n000, n001, ...` with channels `e000, e001, ...` in edge order.
///
/// Every channel has 1 BTC capacity and LND default policies with the given delta.
pub fn graph_from_edges(edges: &[(usize, usize)], delta: u32) -> NetworkGraph {
    let policy = ChannelPolicy::new(delta, 1000, 1000, 1);
    graph_from_edges_with(edges, |_| (100_000_000, policy, policy))
}

/// Like [`graph_from_edges`], with per-edge `(capacity_sat, policy_a_to_b, policy_b_to_a)`.
pub fn graph_from_edges_with<F>(edges: &[(usize, usize)], mut spec: F) -> NetworkGraph
where
    F: FnMut(usize) -> (u64, ChannelPolicy, ChannelPolicy),
{
    let channels = edges
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let (capacity_sat, policy_a_to_b, policy_b_to_a) = spec(i);
            ChannelSpec {
                channel_id: format!("e{i:03}"),
                endpoint_a: node_name(a),
                endpoint_b: node_name(b),
                capacity_sat,
                policy_a_to_b,
                policy_b_to_a,
            }
        })
        .collect();
    NetworkGraph::from_channels(std::iter::empty(), channels)
}

pub fn node_name(i: usize) -> String {
    format!("n{i:03}")
}

/// How directed policies are drawn.
#[derive(Debug, Clone)]
pub enum DeltaMode {
    /// Every node announces its implementation's default delta.
    ImplementationDefault,
    /// Each direction draws a delta uniformly from the list.
    Choice(Vec<u32>),
}

/// Builder for a random connected channel network.
///
/// A preferential-attachment tree guarantees connectivity and produces hubs;
/// extra channels are added between uniformly random distinct pairs.
#[derive(Debug, Clone)]
pub struct SyntheticNetwork {
    seed: u64,
    nodes: usize,
    extra_channels: usize,
    label_weights: [f64; 3],
    deltas: DeltaMode,
    capacity_range_sat: (u64, u64),
    defaults: DefaultsTable,
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub snapshot: Snapshot,
    /// Implementation each node was generated with.
    pub labels: BTreeMap<String, ImplLabel>,
}

impl SyntheticNetwork {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            nodes: 50,
            extra_channels: 50,
            label_weights: [1.0, 0.0, 0.0],
            deltas: DeltaMode::ImplementationDefault,
            capacity_range_sat: (1_000_000, 16_000_000),
            defaults: DefaultsTable::mainnet(),
        }
    }

    pub fn nodes(mut self, n: usize) -> Self {
        self.nodes = n.max(2);
        self
    }

    pub fn extra_channels(mut self, n: usize) -> Self {
        self.extra_channels = n;
        self
    }

    /// Relative frequency of LND, C-Lightning and Eclair nodes.
    pub fn label_mix(mut self, lnd: f64, clightning: f64, eclair: f64) -> Self {
        self.label_weights = [lnd, clightning, eclair];
        self
    }

    pub fn deltas(mut self, mode: DeltaMode) -> Self {
        self.deltas = mode;
        self
    }

    pub fn capacity_range(mut self, min_sat: u64, max_sat: u64) -> Self {
        self.capacity_range_sat = (min_sat, max_sat.max(min_sat));
        self
    }

    pub fn build(&self) -> Synthetic {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.nodes;

        let mut ids: Vec<String> = Vec::with_capacity(n);
        let mut seen = BTreeSet::new();
        while ids.len() < n {
            let key: [u8; 32] = rng.gen();
            let prefix = if rng.gen_bool(0.5) { "02" } else { "03" };
            let id = format!("{prefix}{}", hex(&key));
            if seen.insert(id.clone()) {
                ids.push(id);
            }
        }

        let total_w: f64 = self.label_weights.iter().sum();
        let labels: Vec<ImplLabel> = (0..n)
            .map(|_| {
                let mut x = rng.gen::<f64>() * total_w;
                for (i, w) in self.label_weights.iter().enumerate() {
                    if x < *w {
                        return ImplLabel::ALL[i];
                    }
                    x -= w;
                }
                ImplLabel::Lnd
            })
            .collect();

        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut pair_set = BTreeSet::new();
        let mut degree = vec![0usize; n];
        for i in 1..n {
            let total: usize = degree[..i].iter().map(|d| d + 1).sum();
            let mut pick = rng.gen_range(0..total);
            let mut j = 0;
            while pick > degree[j] {
                pick -= degree[j] + 1;
                j += 1;
            }
            pairs.push((j, i));
            pair_set.insert((j, i));
            degree[i] += 1;
            degree[j] += 1;
        }
        let max_pairs = n * (n - 1) / 2;
        let mut attempts = 0;
        while pairs.len() < (n - 1 + self.extra_channels).min(max_pairs) && attempts < 100 * max_pairs {
            attempts += 1;
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            let key = (a.min(b), a.max(b));
            if a == b || pair_set.contains(&key) {
                continue;
            }
            pair_set.insert(key);
            pairs.push(if rng.gen_bool(0.5) { (a, b) } else { (b, a) });
        }

        let (lo, hi) = self.capacity_range_sat;
        let channels = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let capacity_sat = if lo == hi {
                    lo
                } else {
                    let (l, h) = ((lo as f64).ln(), (hi as f64).ln());
                    rng.gen_range(l..h).exp().round() as u64
                };
                let policy_a_to_b = self.policy_for(labels[a], &mut rng);
                let policy_b_to_a = self.policy_for(labels[b], &mut rng);
                ChannelRecord {
                    channel_id: format!("{}x{}x0", 600_000 + i, i % 4000),
                    endpoint_a: ids[a].clone(),
                    endpoint_b: ids[b].clone(),
                    capacity_sat,
                    policy_a_to_b: Some(policy_a_to_b),
                    policy_b_to_a: Some(policy_b_to_a),
                }
            })
            .collect();

        let nodes = ids
            .iter()
            .enumerate()
            .map(|(i, id)| NodeRecord {
                node_id: id.clone(),
                alias: format!("synthetic-{i}"),
            })
            .collect();
        let label_map = ids.iter().cloned().zip(labels).collect();
        Synthetic {
            snapshot: Snapshot {
                timestamp: None,
                nodes,
                channels,
            },
            labels: label_map,
        }
    }

    pub fn build_graph(&self) -> NetworkGraph {
        build_graph(&self.build().snapshot)
    }

    fn policy_for(&self, label: ImplLabel, rng: &mut ChaCha8Rng) -> ChannelPolicy {
        let mut policy = self.defaults.get(label).policy();
        if let DeltaMode::Choice(choices) = &self.deltas {
            if let Some(d) = choices.choose(rng) {
                policy.cltv_expiry_delta = *d;
            }
        }
        policy
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_build_is_reproducible_and_connected() {
        let a = SyntheticNetwork::new(3).nodes(40).extra_channels(30).label_mix(0.7, 0.2, 0.1).build();
        let b = SyntheticNetwork::new(3).nodes(40).extra_channels(30).label_mix(0.7, 0.2, 0.1).build();
        assert_eq!(a.snapshot, b.snapshot);
        assert_eq!(a.snapshot.channels.len(), 69);
        let g = build_graph(&a.snapshot);
        assert_eq!(g.components().len(), 1);
        assert_eq!(g.node_count(), 40);
    }

    #[test]
    fn delta_choice_is_respected() {
        let s = SyntheticNetwork::new(1).deltas(DeltaMode::Choice(vec![14, 144])).build();
        for c in &s.snapshot.channels {
            for p in [c.policy_a_to_b.unwrap(), c.policy_b_to_a.unwrap()] {
                assert!(p.cltv_expiry_delta == 14 || p.cltv_expiry_delta == 144);
            }
        }
    }
}

use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use super::{ChannelPolicy, DefaultsTable, Snapshot, TopologyError};
use crate::inference::ImplLabel;

/// Largest slot limit a channel may carry.
pub const MAX_SLOT_LIMIT: u32 = 483;

/// A usable channel: both directions disclosed and enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphChannel {
    pub channel_id: String,
    pub node_a: usize,
    pub node_b: usize,
    pub capacity_sat: u64,
    pub policy_a_to_b: ChannelPolicy,
    pub policy_b_to_a: ChannelPolicy,
    pub slot_limit: Option<u32>,
}

impl GraphChannel {
    pub fn other_end(&self, node: usize) -> usize {
        if node == self.node_a {
            self.node_b
        } else {
            self.node_a
        }
    }

    /// Policy applied when forwarding out of `from` over this channel.
    pub fn policy_from(&self, from: usize) -> &ChannelPolicy {
        if from == self.node_a {
            &self.policy_a_to_b
        } else {
            &self.policy_b_to_a
        }
    }

    pub fn min_delta(&self) -> u32 {
        self.policy_a_to_b
            .cltv_expiry_delta
            .min(self.policy_b_to_a.cltv_expiry_delta)
    }
}

/// Immutable, analyzable channel graph.
///
/// Nodes are ordered by id and channels by channel id, so every index-based
/// traversal is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    channels: Vec<GraphChannel>,
    adjacency: Vec<Vec<usize>>,
}

/// Channels dropped by [`build_graph_counted`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FilterCounts {
    pub disabled: usize,
    pub undisclosed: usize,
}

/// A channel to feed into [`NetworkGraph::from_channels`].
#[derive(Debug, Clone)]
pub struct ChannelSpec {
    pub channel_id: String,
    pub endpoint_a: String,
    pub endpoint_b: String,
    pub capacity_sat: u64,
    pub policy_a_to_b: ChannelPolicy,
    pub policy_b_to_a: ChannelPolicy,
}

impl NetworkGraph {
    /// Build a graph over the given node set (extended by every channel endpoint).
    pub fn from_channels<I>(extra_nodes: I, channels: Vec<ChannelSpec>) -> Self
    where
        I: IntoIterator<Item = String>,
    {
        let mut node_set: BTreeSet<String> = extra_nodes.into_iter().collect();
        for c in &channels {
            node_set.insert(c.endpoint_a.clone());
            node_set.insert(c.endpoint_b.clone());
        }
        let nodes: Vec<String> = node_set.into_iter().collect();
        let index: HashMap<String, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut channels: Vec<GraphChannel> = channels
            .into_iter()
            .map(|c| GraphChannel {
                node_a: index[&c.endpoint_a],
                node_b: index[&c.endpoint_b],
                channel_id: c.channel_id,
                capacity_sat: c.capacity_sat,
                policy_a_to_b: c.policy_a_to_b,
                policy_b_to_a: c.policy_b_to_a,
                slot_limit: None,
            })
            .collect();
        channels.sort_by(|x, y| x.channel_id.cmp(&y.channel_id));
        Self::assemble(nodes, index, channels)
    }

    fn assemble(
        nodes: Vec<String>,
        index: HashMap<String, usize>,
        channels: Vec<GraphChannel>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (ci, c) in channels.iter().enumerate() {
            adjacency[c.node_a].push(ci);
            adjacency[c.node_b].push(ci);
        }
        Self {
            nodes,
            index,
            channels,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_id(&self, idx: usize) -> &str {
        &self.nodes[idx]
    }

    pub fn node_index(&self, node_id: &str) -> Option<usize> {
        self.index.get(node_id).copied()
    }

    pub fn channels(&self) -> &[GraphChannel] {
        &self.channels
    }

    pub fn channel(&self, idx: usize) -> &GraphChannel {
        &self.channels[idx]
    }

    pub fn channel_index(&self, channel_id: &str) -> Option<usize> {
        self.channels
            .binary_search_by(|c| c.channel_id.as_str().cmp(channel_id))
            .ok()
    }

    /// Channel indices incident to `node`, ascending.
    pub fn incident(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn total_capacity_sat(&self) -> u64 {
        self.channels.iter().map(|c| c.capacity_sat).sum()
    }

    /// Same node set, keeping only channels for which `keep` holds.
    pub fn retain_channels<F>(&self, mut keep: F) -> Self
    where
        F: FnMut(&GraphChannel) -> bool,
    {
        let channels = self.channels.iter().filter(|c| keep(c)).cloned().collect();
        Self::assemble(self.nodes.clone(), self.index.clone(), channels)
    }

    /// Same node set without the named channels.
    pub fn without_channels<'a, I>(&self, removed: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let removed: BTreeSet<&str> = removed.into_iter().collect();
        self.retain_channels(|c| !removed.contains(c.channel_id.as_str()))
    }

    /// Subgraph induced on a node subset (given as node indices of `self`).
    pub fn induced(&self, members: &[usize]) -> Self {
        let keep: BTreeSet<usize> = members.iter().copied().collect();
        let nodes: Vec<String> = keep.iter().map(|&i| self.nodes[i].clone()).collect();
        let index: HashMap<String, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let channels = self
            .channels
            .iter()
            .filter(|c| keep.contains(&c.node_a) && keep.contains(&c.node_b))
            .map(|c| GraphChannel {
                node_a: index[&self.nodes[c.node_a]],
                node_b: index[&self.nodes[c.node_b]],
                ..c.clone()
            })
            .collect();
        Self::assemble(nodes, index, channels)
    }

    pub fn with_uniform_slot_limit(&self, slot_limit: u32) -> Self {
        let mut g = self.clone();
        for c in &mut g.channels {
            c.slot_limit = Some(slot_limit);
        }
        g
    }

    /// Per-channel slot limits chosen by `limit`.
    pub fn with_slot_limits<F>(&self, mut limit: F) -> Self
    where
        F: FnMut(&GraphChannel) -> Option<u32>,
    {
        let mut g = self.clone();
        for c in &mut g.channels {
            c.slot_limit = limit(c);
        }
        g
    }

    /// Connected components as sorted node-index lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.nodes.len());
        for c in &self.channels {
            uf.union(c.node_a, c.node_b);
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for n in 0..self.nodes.len() {
            groups.entry(uf.find(n)).or_default().push(n);
        }
        let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
        comps.sort_by_key(|c| c[0]);
        comps
    }

    /// Largest component; ties go to the one holding the smallest node index.
    pub fn largest_component(&self) -> Vec<usize> {
        self.components()
            .into_iter()
            .fold(Vec::new(), |best, c| if c.len() > best.len() { c } else { best })
    }
}

/// Build the analyzable graph, dropping disabled and undisclosed channels.
pub fn build_graph(snapshot: &Snapshot) -> NetworkGraph {
    build_graph_counted(snapshot).0
}

pub fn build_graph_counted(snapshot: &Snapshot) -> (NetworkGraph, FilterCounts) {
    let mut counts = FilterCounts::default();
    let mut specs = Vec::new();
    for c in &snapshot.channels {
        let (Some(ab), Some(ba)) = (c.policy_a_to_b, c.policy_b_to_a) else {
            counts.undisclosed += 1;
            continue;
        };
        if ab.disabled || ba.disabled {
            counts.disabled += 1;
            continue;
        }
        specs.push(ChannelSpec {
            channel_id: c.channel_id.clone(),
            endpoint_a: c.endpoint_a.clone(),
            endpoint_b: c.endpoint_b.clone(),
            capacity_sat: c.capacity_sat,
            policy_a_to_b: ab,
            policy_b_to_a: ba,
        });
    }
    (NetworkGraph::from_channels(std::iter::empty(), specs), counts)
}

/// Set every channel's slot limit to the smaller `max_concurrent_htlcs`
/// default of its two endpoints' implementations.
pub fn apply_slot_limits(
    graph: &NetworkGraph,
    labels: &BTreeMap<String, ImplLabel>,
    defaults: &DefaultsTable,
) -> Result<NetworkGraph, TopologyError> {
    let mut limits = Vec::with_capacity(graph.node_count());
    for node in graph.nodes() {
        let label = labels
            .get(node)
            .ok_or_else(|| TopologyError::UnlabeledNode(node.clone()))?;
        limits.push(
            defaults
                .get(*label)
                .max_concurrent_htlcs
                .clamp(1, MAX_SLOT_LIMIT),
        );
    }
    let mut out = graph.clone();
    for c in &mut out.channels {
        c.slot_limit = Some(limits[c.node_a].min(limits[c.node_b]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{ChannelRecord, NodeRecord};
    use proptest::prelude::*;

    fn record(id: &str, a: &str, b: &str, pa: Option<ChannelPolicy>, pb: Option<ChannelPolicy>) -> ChannelRecord {
        ChannelRecord {
            channel_id: id.into(),
            endpoint_a: a.into(),
            endpoint_b: b.into(),
            capacity_sat: 1_000_000,
            policy_a_to_b: pa,
            policy_b_to_a: pb,
        }
    }

    fn snapshot(nodes: &[&str], channels: Vec<ChannelRecord>) -> Snapshot {
        Snapshot {
            timestamp: None,
            nodes: nodes
                .iter()
                .map(|n| NodeRecord { node_id: n.to_string(), alias: String::new() })
                .collect(),
            channels,
        }
    }

    fn lnd() -> Option<ChannelPolicy> {
        Some(ChannelPolicy::new(40, 1000, 1000, 1))
    }

    #[test]
    fn disabled_channel_dropped() {
        let mut off = lnd().unwrap();
        off.disabled = true;
        let snap = snapshot(
            &["a", "b", "c"],
            vec![
                record("1", "a", "b", lnd(), lnd()),
                record("2", "b", "c", lnd(), Some(off)),
                record("3", "a", "c", lnd(), lnd()),
            ],
        );
        let (g, counts) = build_graph_counted(&snap);
        assert_eq!(g.channel_count(), 2);
        assert_eq!(counts, FilterCounts { disabled: 1, undisclosed: 0 });
    }

    #[test]
    fn missing_policy_dropped() {
        let snap = snapshot(
            &["a", "b", "c"],
            vec![record("1", "a", "b", lnd(), None), record("2", "b", "c", lnd(), lnd())],
        );
        let (g, counts) = build_graph_counted(&snap);
        assert_eq!(g.channel_count(), 1);
        assert_eq!(g.channels()[0].channel_id, "2");
        assert_eq!(counts.undisclosed, 1);
        // "a" has no usable channel left
        assert_eq!(g.node_index("a"), None);
    }

    #[test]
    fn handshake_lemma_on_ten_channels() {
        let names = ["a", "b", "c", "d", "e", "f"];
        let pairs = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 2), (1, 3), (0, 3), (0, 1)];
        let channels = pairs
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| record(&format!("c{i}"), names[x], names[y], lnd(), lnd()))
            .collect();
        let g = build_graph(&snapshot(&names, channels));
        assert_eq!(g.channel_count(), 10);
        let degree_sum: usize = (0..g.node_count()).map(|n| g.degree(n)).sum();
        assert_eq!(degree_sum, 2 * g.channel_count());
    }

    fn labelled_pair(la: ImplLabel, lb: ImplLabel) -> u32 {
        let snap = snapshot(&["a", "b"], vec![record("1", "a", "b", lnd(), lnd())]);
        let g = build_graph(&snap);
        let labels = BTreeMap::from([("a".to_string(), la), ("b".to_string(), lb)]);
        let g = apply_slot_limits(&g, &labels, &DefaultsTable::mainnet()).unwrap();
        g.channels()[0].slot_limit.unwrap()
    }

    #[test]
    fn slot_limits_follow_weaker_endpoint() {
        use ImplLabel::*;
        assert_eq!(labelled_pair(Lnd, Lnd), 483);
        assert_eq!(labelled_pair(Lnd, Eclair), 30);
        assert_eq!(labelled_pair(Eclair, CLightning), 30);
    }

    #[test]
    fn unlabeled_node_named_in_error() {
        let snap = snapshot(&["a", "b"], vec![record("1", "a", "b", lnd(), lnd())]);
        let g = build_graph(&snap);
        let labels = BTreeMap::from([("a".to_string(), ImplLabel::Lnd)]);
        match apply_slot_limits(&g, &labels, &DefaultsTable::mainnet()) {
            Err(TopologyError::UnlabeledNode(n)) => assert_eq!(n, "b"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn components_and_induced() {
        let snap = snapshot(
            &["a", "b", "c", "d"],
            vec![
                record("1", "a", "b", lnd(), lnd()),
                record("2", "b", "c", lnd(), lnd()),
                record("3", "d", "c", lnd(), lnd()),
            ],
        );
        let g = build_graph(&snap).without_channels(["2"]);
        assert_eq!(g.components(), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(g.largest_component(), vec![0, 1]);
        let sub = g.induced(&[2, 3]);
        assert_eq!(sub.nodes(), &["c".to_string(), "d".to_string()]);
        assert_eq!(sub.channel_count(), 1);
        assert_eq!(sub.channel(0).channel_id, "3");
        assert_eq!(sub.channel_index("3"), Some(0));
    }

    proptest! {
        #[test]
        fn slot_limit_symmetric_in_endpoint_order(la in 0usize..3, lb in 0usize..3) {
            let (la, lb) = (ImplLabel::ALL[la], ImplLabel::ALL[lb]);
            prop_assert_eq!(labelled_pair(la, lb), labelled_pair(lb, la));
        }

        #[test]
        fn built_graph_has_only_usable_channels(flags in proptest::collection::vec((any::<bool>(), any::<bool>(), any::<bool>()), 1..20)) {
            let channels = flags
                .iter()
                .enumerate()
                .map(|(i, &(has_a, has_b, dis))| {
                    let mut p = lnd().unwrap();
                    p.disabled = dis;
                    record(&format!("c{i}"), "a", "b", has_a.then_some(p), has_b.then_some(lnd().unwrap()))
                })
                .collect();
            let g = build_graph(&snapshot(&["a", "b"], channels));
            let expected = flags.iter().filter(|(a, b, d)| *a && *b && !*d).count();
            prop_assert_eq!(g.channel_count(), expected);
            for c in g.channels() {
                prop_assert!(!c.policy_a_to_b.disabled && !c.policy_b_to_a.disabled);
            }
        }
    }
}

//! Implementation inference from announced channel policies.
//!
//! Each node's policies are compared against the per-implementation defaults;
//! matching parameters contribute their weight, and the node takes the label
//! with the highest average score.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{
    usable_policies, ChannelPolicy, DefaultsTable, GraphChannel, NetworkGraph, Snapshot,
};

#[derive(Debug, Error, PartialEq)]
pub enum InferenceError {
    #[error("cannot score a node with no policies")]
    NoPolicies,
    #[error("inference weights must sum to 1, got {0}")]
    BadWeights(f64),
    #[error("unknown implementation: {0}")]
    UnknownImplementation(String),
}

/// Node implementation. Declaration order is the tie-break order.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum ImplLabel {
    #[default]
    Lnd,
    CLightning,
    Eclair,
}

impl ImplLabel {
    pub const ALL: [ImplLabel; 3] = [ImplLabel::Lnd, ImplLabel::CLightning, ImplLabel::Eclair];

    pub fn as_str(&self) -> &'static str {
        match self {
            ImplLabel::Lnd => "lnd",
            ImplLabel::CLightning => "clightning",
            ImplLabel::Eclair => "eclair",
        }
    }

    fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for ImplLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ImplLabel {
    type Err = InferenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lnd" => Ok(ImplLabel::Lnd),
            "clightning" | "c-lightning" | "cln" => Ok(ImplLabel::CLightning),
            "eclair" => Ok(ImplLabel::Eclair),
            _ => Err(InferenceError::UnknownImplementation(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceWeights {
    pub cltv_delta: f64,
    pub htlc_min: f64,
    pub fee_proportional: f64,
}

impl Default for InferenceWeights {
    fn default() -> Self {
        Self {
            cltv_delta: 0.75,
            htlc_min: 0.2,
            fee_proportional: 0.05,
        }
    }
}

impl InferenceWeights {
    pub fn validate(&self) -> Result<(), InferenceError> {
        let sum = self.cltv_delta + self.htlc_min + self.fee_proportional;
        let non_negative = self.cltv_delta >= 0.0 && self.htlc_min >= 0.0 && self.fee_proportional >= 0.0;
        if (sum - 1.0).abs() > 1e-9 || !non_negative {
            return Err(InferenceError::BadWeights(sum));
        }
        Ok(())
    }
}

/// Per-implementation scores, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ImplScores([f64; 3]);

impl ImplScores {
    pub fn get(&self, label: ImplLabel) -> f64 {
        self.0[label.index()]
    }

    /// Highest-scoring label; ties resolve in [`ImplLabel::ALL`] order.
    pub fn best(&self) -> ImplLabel {
        let mut best = ImplLabel::Lnd;
        for label in ImplLabel::ALL {
            if self.get(label) > self.get(best) {
                best = label;
            }
        }
        best
    }
}

pub fn score_node(
    policies: &[ChannelPolicy],
    defaults: &DefaultsTable,
    weights: &InferenceWeights,
) -> Result<ImplScores, InferenceError> {
    if policies.is_empty() {
        return Err(InferenceError::NoPolicies);
    }
    let n = policies.len() as f64;
    let mut scores = [0.0; 3];
    for (label, d) in defaults.iter() {
        let cltv = policies.iter().filter(|p| p.cltv_expiry_delta == d.cltv_expiry_delta).count();
        let htlc = policies.iter().filter(|p| p.htlc_minimum_msat == d.htlc_minimum_msat).count();
        let fee = policies
            .iter()
            .filter(|p| p.fee_proportional_millionths == d.fee_proportional_millionths)
            .count();
        // Summing per-parameter match rates keeps an all-match node at exactly 1.0.
        scores[label.index()] = weights.cltv_delta * (cltv as f64 / n)
            + weights.htlc_min * (htlc as f64 / n)
            + weights.fee_proportional * (fee as f64 / n);
    }
    Ok(ImplScores(scores))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeTag {
    pub node_id: String,
    pub label: ImplLabel,
    /// `None` for nodes that announced no usable policy.
    pub scores: Option<ImplScores>,
}

fn announced_policies(snapshot: &Snapshot) -> BTreeMap<&str, Vec<ChannelPolicy>> {
    let mut by_node: BTreeMap<&str, Vec<ChannelPolicy>> = BTreeMap::new();
    for c in &snapshot.channels {
        for (node, policy) in [(&c.endpoint_a, &c.policy_a_to_b), (&c.endpoint_b, &c.policy_b_to_a)] {
            if let Some(p) = policy {
                if !p.disabled {
                    by_node.entry(node.as_str()).or_default().push(*p);
                }
            }
        }
    }
    by_node
}

/// Label every snapshot node, keeping the scores (ordered by node id).
pub fn tag_nodes_detailed(
    snapshot: &Snapshot,
    defaults: &DefaultsTable,
    weights: &InferenceWeights,
) -> Vec<NodeTag> {
    let policies = announced_policies(snapshot);
    let ids: BTreeSet<&str> = snapshot.node_ids().collect();
    ids.into_iter()
        .map(|id| {
            let scores = policies
                .get(id)
                .and_then(|p| score_node(p, defaults, weights).ok());
            NodeTag {
                node_id: id.to_string(),
                label: scores.map_or(ImplLabel::Lnd, |s| s.best()),
                scores,
            }
        })
        .collect()
}

pub fn tag_nodes(
    snapshot: &Snapshot,
    defaults: &DefaultsTable,
    weights: &InferenceWeights,
) -> BTreeMap<String, ImplLabel> {
    tag_nodes_detailed(snapshot, defaults, weights)
        .into_iter()
        .map(|t| (t.node_id, t.label))
        .collect()
}

fn label_of(labels: &BTreeMap<String, ImplLabel>, node: &str) -> ImplLabel {
    labels.get(node).copied().unwrap_or(ImplLabel::Lnd)
}

/// Split into (LND-only channels, channels touching any other implementation).
///
/// Unlabeled nodes count as LND. Both outputs keep the full node set.
pub fn split_by_slot_class(
    graph: &NetworkGraph,
    labels: &BTreeMap<String, ImplLabel>,
) -> (NetworkGraph, NetworkGraph) {
    let is_lnd_only = |c: &GraphChannel| {
        label_of(labels, graph.node_id(c.node_a)) == ImplLabel::Lnd
            && label_of(labels, graph.node_id(c.node_b)) == ImplLabel::Lnd
    };
    (
        graph.retain_channels(is_lnd_only),
        graph.retain_channels(|c| !is_lnd_only(c)),
    )
}

/// How often announced parameters sit exactly on some implementation's defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefaultUsage {
    /// Nodes all of whose policies are at defaults.
    pub nodes_all_default: f64,
    /// Channels with at least one direction at defaults.
    pub channels_with_default_peer: f64,
    /// Directed policies at defaults.
    pub policies_default: f64,
}

fn at_defaults(p: &ChannelPolicy, defaults: &DefaultsTable) -> bool {
    defaults.iter().any(|(_, d)| {
        p.cltv_expiry_delta == d.cltv_expiry_delta
            && p.htlc_minimum_msat == d.htlc_minimum_msat
            && p.fee_base_msat == d.fee_base_msat
            && p.fee_proportional_millionths == d.fee_proportional_millionths
    })
}

/// Default-usage rates, reported per node, per channel and per direction.
pub fn default_usage(snapshot: &Snapshot, defaults: &DefaultsTable) -> DefaultUsage {
    let policies = announced_policies(snapshot);
    let nodes_total = policies.len().max(1);
    let nodes_default = policies
        .values()
        .filter(|ps| ps.iter().all(|p| at_defaults(p, defaults)))
        .count();

    let mut channels_total = 0usize;
    let mut channels_default = 0usize;
    for c in &snapshot.channels {
        let dirs: Vec<&ChannelPolicy> = [&c.policy_a_to_b, &c.policy_b_to_a]
            .into_iter()
            .flatten()
            .filter(|p| !p.disabled)
            .collect();
        if dirs.is_empty() {
            continue;
        }
        channels_total += 1;
        if dirs.iter().any(|p| at_defaults(p, defaults)) {
            channels_default += 1;
        }
    }

    let (mut dir_total, mut dir_default) = (0usize, 0usize);
    for p in usable_policies(snapshot) {
        dir_total += 1;
        if at_defaults(p, defaults) {
            dir_default += 1;
        }
    }

    DefaultUsage {
        nodes_all_default: nodes_default as f64 / nodes_total as f64,
        channels_with_default_peer: channels_default as f64 / channels_total.max(1) as f64,
        policies_default: dir_default as f64 / dir_total.max(1) as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_graph, ChannelRecord, NodeRecord};
    use proptest::prelude::*;

    fn table() -> DefaultsTable {
        DefaultsTable::mainnet()
    }

    #[test]
    fn lnd_default_node() {
        let p = vec![ChannelPolicy::new(40, 1000, 1000, 1); 3];
        let s = score_node(&p, &table(), &InferenceWeights::default()).unwrap();
        assert_eq!(s.get(ImplLabel::Lnd), 1.0);
        assert!(s.get(ImplLabel::Lnd) > s.get(ImplLabel::CLightning));
        assert!(s.get(ImplLabel::Lnd) > s.get(ImplLabel::Eclair));
        assert_eq!(s.best(), ImplLabel::Lnd);
    }

    #[test]
    fn weighted_partial_match() {
        let p = [ChannelPolicy::new(40, 1000, 1000, 100)];
        let s = score_node(&p, &table(), &InferenceWeights::default()).unwrap();
        assert!((s.get(ImplLabel::Lnd) - 0.95).abs() < 1e-12);
        assert!((s.get(ImplLabel::CLightning) - 0.2).abs() < 1e-12);
        assert!((s.get(ImplLabel::Eclair) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn no_match_scores_zero() {
        let p = [ChannelPolicy::new(77, 5, 0, 3)];
        let s = score_node(&p, &table(), &InferenceWeights::default()).unwrap();
        for l in ImplLabel::ALL {
            assert_eq!(s.get(l), 0.0);
        }
        assert_eq!(s.best(), ImplLabel::Lnd);
    }

    #[test]
    fn empty_policies_rejected() {
        assert_eq!(
            score_node(&[], &table(), &InferenceWeights::default()),
            Err(InferenceError::NoPolicies)
        );
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(InferenceWeights::default().validate().is_ok());
        let w = InferenceWeights { cltv_delta: 0.5, ..Default::default() };
        assert!(w.validate().is_err());
    }

    #[test]
    fn tie_break_prefers_lnd_then_clightning() {
        // htlc_min 1000 matches LND and C-Lightning only
        let s = score_node(&[ChannelPolicy::new(7, 1000, 0, 7)], &table(), &InferenceWeights::default()).unwrap();
        assert_eq!(s.get(ImplLabel::Lnd), s.get(ImplLabel::CLightning));
        assert_eq!(s.best(), ImplLabel::Lnd);
        let scores = ImplScores([0.1, 0.5, 0.5]);
        assert_eq!(scores.best(), ImplLabel::CLightning);
    }

    fn triangle_snapshot() -> Snapshot {
        let lnd = ChannelPolicy::new(40, 1000, 1000, 1);
        let ecl = ChannelPolicy::new(144, 1, 1000, 100);
        let chan = |id: &str, a: &str, b: &str, pa, pb| ChannelRecord {
            channel_id: id.into(),
            endpoint_a: a.into(),
            endpoint_b: b.into(),
            capacity_sat: 10,
            policy_a_to_b: Some(pa),
            policy_b_to_a: Some(pb),
        };
        Snapshot {
            timestamp: None,
            nodes: ["a", "b", "e", "lonely"]
                .iter()
                .map(|n| NodeRecord { node_id: n.to_string(), alias: String::new() })
                .collect(),
            channels: vec![
                chan("ab", "a", "b", lnd, lnd),
                chan("be", "b", "e", lnd, ecl),
                chan("ea", "e", "a", ecl, lnd),
            ],
        }
    }

    #[test]
    fn tagging_and_split() {
        let snap = triangle_snapshot();
        let labels = tag_nodes(&snap, &table(), &InferenceWeights::default());
        assert_eq!(labels["a"], ImplLabel::Lnd);
        assert_eq!(labels["b"], ImplLabel::Lnd);
        assert_eq!(labels["e"], ImplLabel::Eclair);
        assert_eq!(labels["lonely"], ImplLabel::Lnd);

        let graph = build_graph(&snap);
        let (lnd, mixed) = split_by_slot_class(&graph, &labels);
        assert_eq!(lnd.channel_count(), 1);
        assert_eq!(mixed.channel_count(), 2);
        let mut ids: Vec<&str> = lnd
            .channels()
            .iter()
            .chain(mixed.channels())
            .map(|c| c.channel_id.as_str())
            .collect();
        ids.sort();
        assert_eq!(ids, ["ab", "be", "ea"]);
    }

    #[test]
    fn all_lnd_split_is_identity() {
        let snap = triangle_snapshot();
        let graph = build_graph(&snap);
        let labels: BTreeMap<String, ImplLabel> =
            graph.nodes().iter().map(|n| (n.clone(), ImplLabel::Lnd)).collect();
        let (lnd, mixed) = split_by_slot_class(&graph, &labels);
        assert_eq!(lnd, graph);
        assert_eq!(mixed.channel_count(), 0);
    }

    #[test]
    fn default_usage_rates() {
        let u = default_usage(&triangle_snapshot(), &table());
        assert_eq!(u.nodes_all_default, 1.0);
        assert_eq!(u.channels_with_default_peer, 1.0);
        assert_eq!(u.policies_default, 1.0);
    }

    fn arb_policy() -> impl Strategy<Value = ChannelPolicy> {
        (
            prop_oneof![Just(14u32), Just(40), Just(144), 0u32..200],
            prop_oneof![Just(1u64), Just(1000), 0u64..5000],
            prop_oneof![Just(1u64), Just(10), Just(100), 0u64..500],
        )
            .prop_map(|(d, m, r)| ChannelPolicy::new(d, m, 1000, r))
    }

    proptest! {
        #[test]
        fn order_invariant(mut policies in proptest::collection::vec(arb_policy(), 1..12), seed in any::<u64>()) {
            let w = InferenceWeights::default();
            let before = score_node(&policies, &table(), &w).unwrap();
            let k = seed as usize % policies.len();
            policies.rotate_left(k);
            policies.reverse();
            let after = score_node(&policies, &table(), &w).unwrap();
            for l in ImplLabel::ALL {
                prop_assert!((before.get(l) - after.get(l)).abs() < 1e-12);
            }
        }

        #[test]
        fn scores_in_unit_interval(policies in proptest::collection::vec(arb_policy(), 1..12)) {
            let s = score_node(&policies, &table(), &InferenceWeights::default()).unwrap();
            for l in ImplLabel::ALL {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&s.get(l)));
            }
        }

        #[test]
        fn perturbing_one_parameter_moves_score_by_its_weight(which in 0usize..3, impl_idx in 0usize..3) {
            let label = ImplLabel::ALL[impl_idx];
            let d = *table().get(label);
            let base = ChannelPolicy::new(d.cltv_expiry_delta, d.htlc_minimum_msat, d.fee_base_msat, d.fee_proportional_millionths);
            let mut bent = base;
            // values chosen to match no implementation default
            let w = InferenceWeights::default();
            let weight = match which {
                0 => { bent.cltv_expiry_delta = 999; w.cltv_delta }
                1 => { bent.htlc_minimum_msat = 777; w.htlc_min }
                _ => { bent.fee_proportional_millionths = 555; w.fee_proportional }
            };
            let s0 = score_node(&[base], &table(), &w).unwrap().get(label);
            let s1 = score_node(&[bent], &table(), &w).unwrap().get(label);
            prop_assert!((s0 - s1 - weight).abs() < 1e-12);
        }
    }
}

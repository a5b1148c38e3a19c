//! Snapshot records and the describegraph-style JSON reader/writer.

use std::collections::HashSet;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::TopologyError;

/// BOLT upper bound on `cltv_expiry_delta`.
pub const MAX_CLTV_EXPIRY_DELTA: u32 = 500_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub node_id: String,
    pub alias: String,
}

/// One direction of a channel, as announced by the forwarding node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelPolicy {
    pub cltv_expiry_delta: u32,
    pub htlc_minimum_msat: u64,
    pub fee_base_msat: u64,
    pub fee_proportional_millionths: u64,
    pub disabled: bool,
}

impl ChannelPolicy {
    pub fn new(
        cltv_expiry_delta: u32,
        htlc_minimum_msat: u64,
        fee_base_msat: u64,
        fee_proportional_millionths: u64,
    ) -> Self {
        Self {
            cltv_expiry_delta,
            htlc_minimum_msat,
            fee_base_msat,
            fee_proportional_millionths,
            disabled: false,
        }
    }

    /// Forwarding fee for an outgoing amount, rounded up to the next msat.
    pub fn fee_msat(&self, amount_msat: u64) -> u64 {
        let proportional =
            (amount_msat as u128 * self.fee_proportional_millionths as u128).div_ceil(1_000_000);
        self.fee_base_msat + proportional as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub channel_id: String,
    pub endpoint_a: String,
    pub endpoint_b: String,
    pub capacity_sat: u64,
    /// Policy for the `endpoint_a -> endpoint_b` direction.
    pub policy_a_to_b: Option<ChannelPolicy>,
    pub policy_b_to_a: Option<ChannelPolicy>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub timestamp: Option<NaiveDate>,
    pub nodes: Vec<NodeRecord>,
    pub channels: Vec<ChannelRecord>,
}

/// Counts of records dropped while parsing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SkipCounts {
    pub malformed_nodes: usize,
    pub duplicate_nodes: usize,
    pub malformed_channels: usize,
    pub duplicate_channels: usize,
    pub dangling_channels: usize,
}

impl SkipCounts {
    pub fn total(&self) -> usize {
        self.malformed_nodes
            + self.duplicate_nodes
            + self.malformed_channels
            + self.duplicate_channels
            + self.dangling_channels
    }
}

#[derive(Debug, Clone)]
pub struct ParsedSnapshot {
    pub snapshot: Snapshot,
    pub skipped: SkipCounts,
}

impl Snapshot {
    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.node_id.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.channels.is_empty()
    }

    /// Policies announced by `node_id`, i.e. the directions in which it forwards.
    pub fn policies_of<'a>(&'a self, node_id: &'a str) -> impl Iterator<Item = &'a ChannelPolicy> {
        self.channels.iter().filter_map(move |c| {
            if c.endpoint_a == node_id {
                c.policy_a_to_b.as_ref()
            } else if c.endpoint_b == node_id {
                c.policy_b_to_a.as_ref()
            } else {
                None
            }
        })
    }

    /// Serialize back into the describegraph JSON layout.
    pub fn to_json_value(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .map(|n| json!({ "pub_key": n.node_id, "alias": n.alias }))
            .collect();
        let edges: Vec<Value> = self
            .channels
            .iter()
            .map(|c| {
                json!({
                    "channel_id": c.channel_id,
                    "node1_pub": c.endpoint_a,
                    "node2_pub": c.endpoint_b,
                    "capacity": c.capacity_sat.to_string(),
                    "node1_policy": c.policy_a_to_b.as_ref().map(policy_to_json),
                    "node2_policy": c.policy_b_to_a.as_ref().map(policy_to_json),
                })
            })
            .collect();
        let mut top = Map::new();
        if let Some(ts) = self.timestamp {
            top.insert("timestamp".into(), Value::String(ts.to_string()));
        }
        top.insert("nodes".into(), Value::Array(nodes));
        top.insert("edges".into(), Value::Array(edges));
        Value::Object(top)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), TopologyError> {
        serde_json::to_writer_pretty(writer, &self.to_json_value())
            .map_err(|e| TopologyError::Io(e.to_string()))
    }
}

fn policy_to_json(p: &ChannelPolicy) -> Value {
    json!({
        "time_lock_delta": p.cltv_expiry_delta,
        "min_htlc": p.htlc_minimum_msat.to_string(),
        "fee_base_msat": p.fee_base_msat.to_string(),
        "fee_rate_milli_msat": p.fee_proportional_millionths.to_string(),
        "disabled": p.disabled,
    })
}

/// Parse a describegraph-style JSON document.
///
/// Records with malformed required fields are skipped and counted; only an
/// unreadable stream or a top-level schema violation is an error.
pub fn parse_snapshot<R: Read>(reader: R) -> Result<ParsedSnapshot, TopologyError> {
    let value: Value = serde_json::from_reader(reader).map_err(|e| TopologyError::Parse {
        line: e.line(),
        column: e.column(),
        context: "document".into(),
        message: e.to_string(),
    })?;
    parse_snapshot_value(&value)
}

pub fn parse_snapshot_str(raw: &str) -> Result<ParsedSnapshot, TopologyError> {
    parse_snapshot(raw.as_bytes())
}

fn schema_error(context: &str, message: impl Into<String>) -> TopologyError {
    TopologyError::Parse {
        line: 0,
        column: 0,
        context: context.to_string(),
        message: message.into(),
    }
}

pub fn parse_snapshot_value(value: &Value) -> Result<ParsedSnapshot, TopologyError> {
    let top = value
        .as_object()
        .ok_or_else(|| schema_error("document", "top level is not an object"))?;
    let raw_nodes = top
        .get("nodes")
        .and_then(Value::as_array)
        .ok_or_else(|| schema_error("nodes", "missing or not an array"))?;
    let raw_edges = top
        .get("edges")
        .and_then(Value::as_array)
        .ok_or_else(|| schema_error("edges", "missing or not an array"))?;
    let timestamp = match top.get("timestamp") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map_err(|e| schema_error("timestamp", e.to_string()))?,
        ),
        Some(_) => return Err(schema_error("timestamp", "expected YYYY-MM-DD string")),
    };

    let mut skipped = SkipCounts::default();
    let mut seen_nodes = HashSet::new();
    let mut nodes = Vec::with_capacity(raw_nodes.len());
    for (idx, raw) in raw_nodes.iter().enumerate() {
        match parse_node(raw) {
            Some(node) => {
                if seen_nodes.insert(node.node_id.clone()) {
                    nodes.push(node);
                } else {
                    log::debug!("nodes[{idx}]: duplicate node id {}", node.node_id);
                    skipped.duplicate_nodes += 1;
                }
            }
            None => {
                log::debug!("nodes[{idx}]: malformed record skipped");
                skipped.malformed_nodes += 1;
            }
        }
    }

    let mut seen_channels = HashSet::new();
    let mut channels = Vec::with_capacity(raw_edges.len());
    for (idx, raw) in raw_edges.iter().enumerate() {
        let Some(channel) = parse_edge(raw) else {
            log::debug!("edges[{idx}]: malformed record skipped");
            skipped.malformed_channels += 1;
            continue;
        };
        if !seen_nodes.contains(&channel.endpoint_a) || !seen_nodes.contains(&channel.endpoint_b) {
            skipped.dangling_channels += 1;
            continue;
        }
        if !seen_channels.insert(channel.channel_id.clone()) {
            skipped.duplicate_channels += 1;
            continue;
        }
        channels.push(channel);
    }

    Ok(ParsedSnapshot {
        snapshot: Snapshot {
            timestamp,
            nodes,
            channels,
        },
        skipped,
    })
}

fn parse_node(raw: &Value) -> Option<NodeRecord> {
    let obj = raw.as_object()?;
    let node_id = obj.get("pub_key")?.as_str()?.to_string();
    if node_id.is_empty() {
        return None;
    }
    let alias = match obj.get("alias") {
        None | Some(Value::Null) => String::new(),
        Some(v) => v.as_str()?.to_string(),
    };
    Some(NodeRecord { node_id, alias })
}

/// Accepts both string-encoded and plain JSON integers.
fn uint_field(obj: &Map<String, Value>, key: &str) -> Option<u64> {
    match obj.get(key)? {
        Value::String(s) => s.trim().parse().ok(),
        Value::Number(n) => n.as_u64(),
        _ => None,
    }
}

fn parse_policy(raw: &Value) -> Option<Option<ChannelPolicy>> {
    if raw.is_null() {
        return Some(None);
    }
    let obj = raw.as_object()?;
    let delta = uint_field(obj, "time_lock_delta")?;
    if delta >= MAX_CLTV_EXPIRY_DELTA as u64 {
        return None;
    }
    let disabled = match obj.get("disabled") {
        None | Some(Value::Null) => false,
        Some(v) => v.as_bool()?,
    };
    Some(Some(ChannelPolicy {
        cltv_expiry_delta: delta as u32,
        htlc_minimum_msat: uint_field(obj, "min_htlc")?,
        fee_base_msat: uint_field(obj, "fee_base_msat")?,
        fee_proportional_millionths: uint_field(obj, "fee_rate_milli_msat")?,
        disabled,
    }))
}

fn parse_edge(raw: &Value) -> Option<ChannelRecord> {
    let obj = raw.as_object()?;
    let channel_id = match obj.get("channel_id")? {
        Value::String(s) if !s.is_empty() => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return None,
    };
    let endpoint_a = obj.get("node1_pub")?.as_str()?.to_string();
    let endpoint_b = obj.get("node2_pub")?.as_str()?.to_string();
    if endpoint_a == endpoint_b {
        return None;
    }
    let capacity_sat = uint_field(obj, "capacity")?;
    if capacity_sat == 0 {
        return None;
    }
    let policy_a_to_b = parse_policy(obj.get("node1_policy").unwrap_or(&Value::Null))?;
    let policy_b_to_a = parse_policy(obj.get("node2_policy").unwrap_or(&Value::Null))?;
    Some(ChannelRecord {
        channel_id,
        endpoint_a,
        endpoint_b,
        capacity_sat,
        policy_a_to_b,
        policy_b_to_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWO_NODE: &str = r##"{
      "nodes": [
        {"pub_key": "02aa", "alias": "alice", "color": "#ffffff"},
        {"pub_key": "03bb", "alias": "bob"}
      ],
      "edges": [
        {
          "channel_id": "700000x1x0",
          "chan_point": "ignored:0",
          "node1_pub": "02aa",
          "node2_pub": "03bb",
          "capacity": "5000000",
          "node1_policy": {"time_lock_delta": 40, "min_htlc": "1000", "fee_base_msat": "1000",
                           "fee_rate_milli_msat": "1", "disabled": false},
          "node2_policy": {"time_lock_delta": 144, "min_htlc": "1", "fee_base_msat": "1000",
                           "fee_rate_milli_msat": "100", "disabled": true}
        }
      ]
    }"##;

    #[test]
    fn empty_document() {
        let parsed = parse_snapshot_str(r#"{"nodes": [], "edges": []}"#).unwrap();
        assert!(parsed.snapshot.nodes.is_empty());
        assert!(parsed.snapshot.channels.is_empty());
        assert_eq!(parsed.skipped.total(), 0);
    }

    #[test]
    fn two_nodes_one_channel_field_by_field() {
        let snap = parse_snapshot_str(TWO_NODE).unwrap().snapshot;
        assert_eq!(
            snap.nodes,
            vec![
                NodeRecord { node_id: "02aa".into(), alias: "alice".into() },
                NodeRecord { node_id: "03bb".into(), alias: "bob".into() },
            ]
        );
        assert_eq!(snap.channels.len(), 1);
        let c = &snap.channels[0];
        assert_eq!(c.channel_id, "700000x1x0");
        assert_eq!(c.endpoint_a, "02aa");
        assert_eq!(c.endpoint_b, "03bb");
        assert_eq!(c.capacity_sat, 5_000_000);
        assert_eq!(
            c.policy_a_to_b,
            Some(ChannelPolicy {
                cltv_expiry_delta: 40,
                htlc_minimum_msat: 1000,
                fee_base_msat: 1000,
                fee_proportional_millionths: 1,
                disabled: false
            })
        );
        assert_eq!(
            c.policy_b_to_a,
            Some(ChannelPolicy {
                cltv_expiry_delta: 144,
                htlc_minimum_msat: 1,
                fee_base_msat: 1000,
                fee_proportional_millionths: 100,
                disabled: true
            })
        );
    }

    #[test]
    fn null_policy_is_absent() {
        let raw = TWO_NODE.replace(
            r#""node1_policy": {"time_lock_delta": 40, "min_htlc": "1000", "fee_base_msat": "1000",
                           "fee_rate_milli_msat": "1", "disabled": false}"#,
            r#""node1_policy": null"#,
        );
        let snap = parse_snapshot_str(&raw).unwrap().snapshot;
        assert_eq!(snap.channels[0].policy_a_to_b, None);
        assert!(snap.channels[0].policy_b_to_a.is_some());
    }

    #[test]
    fn malformed_records_are_counted() {
        let raw = r#"{
          "nodes": [{"pub_key": "a"}, {"pub_key": "b"}, {"alias": "no key"}, {"pub_key": "a"}],
          "edges": [
            {"channel_id": "1", "node1_pub": "a", "node2_pub": "b", "capacity": "0"},
            {"channel_id": "2", "node1_pub": "a", "node2_pub": "a", "capacity": "10"},
            {"channel_id": "3", "node1_pub": "a", "node2_pub": "zz", "capacity": "10"},
            {"channel_id": "4", "node1_pub": "a", "node2_pub": "b", "capacity": "ten"},
            {"channel_id": "5", "node1_pub": "a", "node2_pub": "b", "capacity": "10"},
            {"channel_id": "5", "node1_pub": "a", "node2_pub": "b", "capacity": "10"},
            {"channel_id": "6", "node1_pub": "a", "node2_pub": "b", "capacity": "10",
             "node1_policy": {"time_lock_delta": 500000000, "min_htlc": "1",
                              "fee_base_msat": "1", "fee_rate_milli_msat": "1"}}
          ]
        }"#;
        let parsed = parse_snapshot_str(raw).unwrap();
        assert_eq!(parsed.snapshot.nodes.len(), 2);
        assert_eq!(parsed.snapshot.channels.len(), 1);
        assert_eq!(
            parsed.skipped,
            SkipCounts {
                malformed_nodes: 1,
                duplicate_nodes: 1,
                malformed_channels: 4,
                duplicate_channels: 1,
                dangling_channels: 1,
            }
        );
    }

    #[test]
    fn schema_violations_are_errors() {
        assert!(matches!(
            parse_snapshot_str("[1, 2]"),
            Err(TopologyError::Parse { .. })
        ));
        assert!(parse_snapshot_str(r#"{"nodes": []}"#).is_err());
        match parse_snapshot_str("{\n\"nodes\": [,\n}") {
            Err(TopologyError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fee_rounds_up() {
        let p = ChannelPolicy::new(40, 1000, 1000, 1);
        assert_eq!(p.fee_msat(573_000), 1001);
        assert_eq!(p.fee_msat(0), 1000);
        assert_eq!(ChannelPolicy::new(0, 0, 0, 0).fee_msat(10), 0);
    }

    fn arb_policy() -> impl Strategy<Value = Option<ChannelPolicy>> {
        proptest::option::of(
            (0u32..5000, 0u64..10_000, 0u64..10_000, 0u64..5000, any::<bool>()).prop_map(
                |(d, m, b, r, dis)| ChannelPolicy {
                    cltv_expiry_delta: d,
                    htlc_minimum_msat: m,
                    fee_base_msat: b,
                    fee_proportional_millionths: r,
                    disabled: dis,
                },
            ),
        )
    }

    fn arb_snapshot() -> impl Strategy<Value = Snapshot> {
        (2usize..8)
            .prop_flat_map(|n| {
                let chans = proptest::collection::vec(
                    (0..n, 0..n, 1u64..10_000_000, arb_policy(), arb_policy()),
                    0..12,
                );
                (Just(n), chans, proptest::option::of(0i64..20_000))
            })
            .prop_map(|(n, chans, day)| Snapshot {
                timestamp: day.map(|d| {
                    NaiveDate::from_ymd_opt(2019, 1, 1).unwrap() + chrono::Days::new(d as u64)
                }),
                nodes: (0..n)
                    .map(|i| NodeRecord { node_id: format!("n{i:02}"), alias: format!("alias {i}") })
                    .collect(),
                channels: chans
                    .into_iter()
                    .enumerate()
                    .filter(|(_, (a, b, ..))| a != b)
                    .map(|(i, (a, b, cap, pa, pb))| ChannelRecord {
                        channel_id: format!("c{i}"),
                        endpoint_a: format!("n{a:02}"),
                        endpoint_b: format!("n{b:02}"),
                        capacity_sat: cap,
                        policy_a_to_b: pa,
                        policy_b_to_a: pb,
                    })
                    .collect(),
            })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(snap in arb_snapshot()) {
            let mut buf = Vec::new();
            snap.write_json(&mut buf).unwrap();
            let parsed = parse_snapshot(buf.as_slice()).unwrap();
            prop_assert_eq!(parsed.skipped.total(), 0);
            prop_assert_eq!(parsed.snapshot, snap);
        }
    }
}

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{ChannelPolicy, Snapshot, TopologyError};

/// Values under this share are folded into the "other" bucket.
pub const OTHER_THRESHOLD: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PolicyParameter {
    HtlcMinimumMsat,
    FeeBaseMsat,
    FeeProportionalMillionths,
    CltvExpiryDelta,
}

impl PolicyParameter {
    pub fn read(&self, policy: &ChannelPolicy) -> u64 {
        match self {
            Self::HtlcMinimumMsat => policy.htlc_minimum_msat,
            Self::FeeBaseMsat => policy.fee_base_msat,
            Self::FeeProportionalMillionths => policy.fee_proportional_millionths,
            Self::CltvExpiryDelta => policy.cltv_expiry_delta as u64,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::HtlcMinimumMsat => "htlc_minimum_msat",
            Self::FeeBaseMsat => "fee_base_msat",
            Self::FeeProportionalMillionths => "fee_proportional_millionths",
            Self::CltvExpiryDelta => "cltv_expiry_delta",
        }
    }
}

impl fmt::Display for PolicyParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyParameter {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "htlc_minimum_msat" | "min_htlc" | "htlc_min" => Ok(Self::HtlcMinimumMsat),
            "fee_base_msat" | "fee_base" => Ok(Self::FeeBaseMsat),
            "fee_proportional_millionths" | "fee_rate" | "fee_rate_milli_msat" => {
                Ok(Self::FeeProportionalMillionths)
            }
            "cltv_expiry_delta" | "cltv_delta" | "time_lock_delta" => Ok(Self::CltvExpiryDelta),
            other => Err(TopologyError::UnknownParameter(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bucket {
    Value(u64),
    Other,
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bucket::Value(v) => write!(f, "{v}"),
            Bucket::Other => f.write_str("other"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramEntry {
    pub bucket: Bucket,
    pub count: usize,
    pub share: f64,
}

/// Exact-value distribution of one policy parameter over directed policies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub parameter: PolicyParameter,
    pub total_policies: usize,
    pub entries: Vec<HistogramEntry>,
}

impl Histogram {
    /// Combined share of the listed values (values missing from the table count as zero).
    pub fn share_of(&self, values: &[u64]) -> f64 {
        self.entries
            .iter()
            .filter(|e| matches!(e.bucket, Bucket::Value(v) if values.contains(&v)))
            .map(|e| e.share)
            .sum()
    }
}

/// Directed policies of channels that survive `build_graph`'s filter.
pub(crate) fn usable_policies(snapshot: &Snapshot) -> impl Iterator<Item = &ChannelPolicy> {
    snapshot.channels.iter().flat_map(|c| match (&c.policy_a_to_b, &c.policy_b_to_a) {
        (Some(a), Some(b)) if !a.disabled && !b.disabled => vec![a, b],
        _ => Vec::new(),
    })
}

pub fn parameter_histogram(
    snapshot: &Snapshot,
    parameter: PolicyParameter,
) -> Result<Histogram, TopologyError> {
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    let mut total = 0usize;
    for p in usable_policies(snapshot) {
        *counts.entry(parameter.read(p)).or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return Err(TopologyError::EmptySnapshot);
    }

    let mut listed: Vec<(u64, usize)> = Vec::new();
    let mut other = 0usize;
    for (value, count) in counts {
        if count as f64 / total as f64 >= OTHER_THRESHOLD {
            listed.push((value, count));
        } else {
            other += count;
        }
    }
    listed.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut entries: Vec<HistogramEntry> = listed
        .into_iter()
        .map(|(value, count)| HistogramEntry {
            bucket: Bucket::Value(value),
            count,
            share: count as f64 / total as f64,
        })
        .collect();
    if other > 0 {
        entries.push(HistogramEntry {
            bucket: Bucket::Other,
            count: other,
            share: other as f64 / total as f64,
        });
    }
    Ok(Histogram {
        parameter,
        total_policies: total,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{ChannelRecord, NodeRecord};
    use proptest::prelude::*;

    fn snapshot_with_deltas(deltas: &[u32]) -> Snapshot {
        // one channel per pair of deltas so each delta is one directed policy
        assert!(deltas.len().is_multiple_of(2));
        let channels = deltas
            .chunks(2)
            .enumerate()
            .map(|(i, d)| ChannelRecord {
                channel_id: format!("c{i}"),
                endpoint_a: "a".into(),
                endpoint_b: "b".into(),
                capacity_sat: 100,
                policy_a_to_b: Some(ChannelPolicy::new(d[0], 1000, 1000, 1)),
                policy_b_to_a: Some(ChannelPolicy::new(d[1], 1000, 1000, 1)),
            })
            .collect();
        Snapshot {
            timestamp: None,
            nodes: vec![
                NodeRecord { node_id: "a".into(), alias: String::new() },
                NodeRecord { node_id: "b".into(), alias: String::new() },
            ],
            channels,
        }
    }

    #[test]
    fn single_value() {
        let h = parameter_histogram(&snapshot_with_deltas(&[40, 40, 40, 40]), PolicyParameter::CltvExpiryDelta)
            .unwrap();
        assert_eq!(h.entries, vec![HistogramEntry { bucket: Bucket::Value(40), count: 4, share: 1.0 }]);
    }

    #[test]
    fn hand_counted_fixture() {
        let mut deltas = vec![40u32; 50];
        deltas.extend(std::iter::repeat_n(144, 45));
        deltas.extend([1, 2, 3, 4, 5]);
        let h = parameter_histogram(&snapshot_with_deltas(&deltas), PolicyParameter::CltvExpiryDelta).unwrap();
        let got: Vec<(Bucket, f64)> = h.entries.iter().map(|e| (e.bucket, e.share)).collect();
        assert_eq!(
            got,
            vec![(Bucket::Value(40), 0.50), (Bucket::Value(144), 0.45), (Bucket::Other, 0.05)]
        );
        assert!((h.share_of(&[40, 144, 14]) - 0.95).abs() < 1e-12);
    }

    #[test]
    fn empty_is_error() {
        let snap = Snapshot::default();
        assert!(matches!(
            parameter_histogram(&snap, PolicyParameter::FeeBaseMsat),
            Err(TopologyError::EmptySnapshot)
        ));
    }

    #[test]
    fn parameter_names() {
        assert_eq!("cltv_delta".parse::<PolicyParameter>().unwrap(), PolicyParameter::CltvExpiryDelta);
        assert_eq!("min_htlc".parse::<PolicyParameter>().unwrap(), PolicyParameter::HtlcMinimumMsat);
        assert!("bogus".parse::<PolicyParameter>().is_err());
    }

    proptest! {
        #[test]
        fn shares_sum_to_one(deltas in proptest::collection::vec(prop_oneof![Just(14u32), Just(40), Just(144), 0u32..3000], 1..100)) {
            let mut deltas = deltas;
            if deltas.len() % 2 == 1 {
                deltas.push(40);
            }
            let h = parameter_histogram(&snapshot_with_deltas(&deltas), PolicyParameter::CltvExpiryDelta).unwrap();
            let sum: f64 = h.entries.iter().map(|e| e.share).sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            for e in &h.entries {
                prop_assert!(e.share > 0.0 && e.share <= 1.0);
                if let Bucket::Value(_) = e.bucket {
                    prop_assert!(e.share >= OTHER_THRESHOLD);
                }
            }
        }
    }
}

use std::collections::BTreeMap;

use serde::Serialize;

use super::{plan_network_attack, CurvePoint, PlanError, PlannerConfig, BLOCKS_PER_DAY, MAX_ROUTE_HOPS};
use crate::inference::ImplLabel;
use crate::topology::{DefaultsTable, NetworkGraph};

/// Attack curve for one value of the swept parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    /// Lock days or hop limit, as given.
    pub parameter: f64,
    pub tau_min: u32,
    pub max_route_channels: usize,
    pub points: Vec<CurvePoint>,
}

/// Flat CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub attacker_channels: usize,
    pub capacity_fraction: f64,
}

impl SweepCurve {
    pub fn rows(&self) -> impl Iterator<Item = SweepRow> + '_ {
        self.points.iter().map(|p| SweepRow {
            parameter: self.parameter,
            attacker_channels: p.attacker_channels,
            capacity_fraction: p.capacity_fraction,
        })
    }

    /// Locked fraction with `budget_channels` attacker channels.
    pub fn fraction_at_budget(&self, budget_channels: usize) -> f64 {
        let k = (budget_channels / 2).min(self.points.len() - 1);
        self.points[k].capacity_fraction
    }
}

/// One full plan per minimum lock period, in days.
pub fn lock_period_sweep(
    graph: &NetworkGraph,
    labels: &BTreeMap<String, ImplLabel>,
    defaults: &DefaultsTable,
    config: &PlannerConfig,
    days: &[f64],
) -> Result<Vec<SweepCurve>, PlanError> {
    let max_days = config.locktime_max as f64 / BLOCKS_PER_DAY as f64;
    days.iter()
        .map(|&d| {
            if !(d > 0.0 && d < max_days) {
                return Err(PlanError::InvalidSweep(format!(
                    "lock period of {d} days outside (0, {max_days})"
                )));
            }
            let tau_min = (BLOCKS_PER_DAY as f64 * d).ceil() as u32;
            let c = PlannerConfig { tau_min, ..*config };
            let plan = plan_network_attack(graph, labels, defaults, &c, None)?;
            Ok(SweepCurve {
                parameter: d,
                tau_min,
                max_route_channels: c.max_route_channels,
                points: plan.curve(),
            })
        })
        .collect()
}

/// One full plan per maximum route length in hops (attacker hops included).
pub fn route_length_sweep(
    graph: &NetworkGraph,
    labels: &BTreeMap<String, ImplLabel>,
    defaults: &DefaultsTable,
    config: &PlannerConfig,
    max_hops: &[usize],
) -> Result<Vec<SweepCurve>, PlanError> {
    max_hops
        .iter()
        .map(|&limit| {
            if !(3..=MAX_ROUTE_HOPS).contains(&limit) {
                return Err(PlanError::InvalidSweep(format!(
                    "hop limit {limit} outside 3..={MAX_ROUTE_HOPS}"
                )));
            }
            let c = PlannerConfig { max_route_channels: limit - 2, ..*config };
            let plan = plan_network_attack(graph, labels, defaults, &c, None)?;
            Ok(SweepCurve {
                parameter: limit as f64,
                tau_min: c.tau_min,
                max_route_channels: c.max_route_channels,
                points: plan.curve(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{DeltaMode, SyntheticNetwork};
    use crate::topology::build_graph;

    fn fixture() -> (NetworkGraph, BTreeMap<String, ImplLabel>) {
        let s = SyntheticNetwork::new(9)
            .nodes(50)
            .extra_channels(60)
            .deltas(DeltaMode::Choice(vec![40]))
            .build();
        (build_graph(&s.snapshot), s.labels)
    }

    #[test]
    fn short_lock_periods_agree_when_deltas_are_small() {
        let (g, l) = fixture();
        let curves =
            lock_period_sweep(&g, &l, &DefaultsTable::mainnet(), &PlannerConfig::default(), &[1.0, 6.0])
                .unwrap();
        assert_eq!(curves[0].tau_min, 144);
        assert_eq!(curves[1].tau_min, 864);
        // 18 hops of 40 = 720 <= 2016 - 864, so the partitions coincide
        assert_eq!(curves[0].points, curves[1].points);
    }

    #[test]
    fn near_maximal_lock_period_leaves_nothing() {
        let (g, l) = fixture();
        let curves =
            lock_period_sweep(&g, &l, &DefaultsTable::mainnet(), &PlannerConfig::default(), &[13.9]).unwrap();
        assert_eq!(curves[0].tau_min, 2002);
        assert_eq!(curves[0].points.len(), 1);
        for bad in [14.0, 0.0, -1.0, 20.0] {
            assert!(lock_period_sweep(&g, &l, &DefaultsTable::mainnet(), &PlannerConfig::default(), &[bad])
                .is_err());
        }
    }

    #[test]
    fn three_hop_limit_forces_single_channel_routes() {
        let (g, l) = fixture();
        let curves =
            route_length_sweep(&g, &l, &DefaultsTable::mainnet(), &PlannerConfig::default(), &[3, 20])
                .unwrap();
        let last = curves[0].points.last().unwrap();
        assert_eq!(last.attacker_channels, 2 * g.channel_count());
        let default =
            plan_network_attack(&g, &l, &DefaultsTable::mainnet(), &PlannerConfig::default(), None).unwrap();
        assert_eq!(curves[1].points, default.curve());
        assert!(route_length_sweep(&g, &l, &DefaultsTable::mainnet(), &PlannerConfig::default(), &[2]).is_err());
        assert!(route_length_sweep(&g, &l, &DefaultsTable::mainnet(), &PlannerConfig::default(), &[21]).is_err());
    }
}

//! Attack pricing: on-chain channel opens versus refundable locked liquidity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::planner::{AttackPlan, AttackRoute, RouteHop};

/// USD per BTC used to express locked liquidity in dollars (late 2020 level).
pub const DEFAULT_BTC_USD: f64 = 10_500.0;
pub const DEFAULT_USD_PER_OPEN: f64 = 2.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    pub usd_per_open: f64,
    pub btc_usd: f64,
    /// Fraction of opening fees saved by batching opens into one transaction.
    pub batching_discount: Option<f64>,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self { usd_per_open: DEFAULT_USD_PER_OPEN, btc_usd: DEFAULT_BTC_USD, batching_discount: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteCost {
    pub route_index: usize,
    pub slot_class: u32,
    pub payment_amount_msat: u64,
    pub liquidity_msat: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub attacker_channels: usize,
    /// Spent for good.
    pub onchain_fees_usd: f64,
    /// Returned to the attacker once the payments fail.
    pub locked_liquidity_msat: u64,
    pub locked_liquidity_sat: u64,
    pub locked_liquidity_usd: f64,
    pub per_route: Vec<RouteCost>,
    pub assumptions: CostConfig,
}

fn dust_msat(dust_sat: &BTreeMap<String, u64>, node: &str) -> u64 {
    dust_sat.get(node).copied().unwrap_or(0) * 1000
}

/// Smallest amount that clears every route node's dust limit and every
/// hop's minimum.
pub fn route_floor_msat(hops: &[RouteHop], dust_sat: &BTreeMap<String, u64>) -> u64 {
    hops.iter()
        .flat_map(|h| {
            [
                dust_msat(dust_sat, &h.from),
                dust_msat(dust_sat, &h.to),
                h.policy.htlc_minimum_msat,
            ]
        })
        .max()
        .unwrap_or(0)
}

/// HTLC amount each hop of the route carries, first hop first.
///
/// The floor amount is delivered back to the attacker, and each forwarder's
/// fee is added walking back from the destination.
pub fn hop_amounts(hops: &[RouteHop], dust_sat: &BTreeMap<String, u64>) -> Vec<u64> {
    let mut amounts = vec![0; hops.len()];
    let mut carried = route_floor_msat(hops, dust_sat);
    for (i, h) in hops.iter().enumerate().rev() {
        carried += h.policy.fee_msat(carried);
        amounts[i] = carried;
    }
    amounts
}

/// Amount the attacker sends into the route for one payment.
pub fn payment_amount_for_route(route: &AttackRoute, dust_sat: &BTreeMap<String, u64>) -> u64 {
    hop_amounts(&route.hops, dust_sat).first().copied().unwrap_or(0)
}

/// Balance the attacker's outgoing channel needs to fill every slot of the route.
pub fn required_channel_balance(route: &AttackRoute, dust_sat: &BTreeMap<String, u64>) -> u64 {
    route.slot_class as u64 * payment_amount_for_route(route, dust_sat)
}

pub fn estimate_costs(plan: &AttackPlan, config: &CostConfig) -> CostReport {
    let per_route: Vec<RouteCost> = plan
        .routes
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let amount = payment_amount_for_route(r, &plan.node_dust_sat);
            RouteCost {
                route_index: i,
                slot_class: r.slot_class,
                payment_amount_msat: amount,
                liquidity_msat: r.slot_class as u64 * amount,
            }
        })
        .collect();
    let attacker_channels = plan.attacker_channels();
    let discount = 1.0 - config.batching_discount.unwrap_or(0.0).clamp(0.0, 1.0);
    let locked_liquidity_msat: u64 = per_route.iter().map(|r| r.liquidity_msat).sum();
    CostReport {
        attacker_channels,
        onchain_fees_usd: config.usd_per_open * attacker_channels as f64 * discount,
        locked_liquidity_msat,
        locked_liquidity_sat: locked_liquidity_msat.div_ceil(1000),
        locked_liquidity_usd: locked_liquidity_msat as f64 / 1e11 * config.btc_usd,
        per_route,
        assumptions: *config,
    }
}

//! Channel-opening fees and locked liquidity of a network attack.

use jamkit::cost::{estimate_costs, CostConfig};
use jamkit::planner::{plan_network_attack, PlannerConfig};
use jamkit::synth::SyntheticNetwork;
use jamkit::topology::DefaultsTable;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = SyntheticNetwork::new(4).nodes(250).extra_channels(400).label_mix(0.9, 0.05, 0.05).build();
    let graph = jamkit::build_graph(&s.snapshot);
    let plan = plan_network_attack(&graph, &s.labels, &DefaultsTable::mainnet(), &PlannerConfig::default(), Some(68))?;
    for config in [CostConfig::default(), CostConfig { batching_discount: Some(0.5), ..CostConfig::default() }] {
        let r = estimate_costs(&plan, &config);
        println!(
            "{} channels: {:.2} USD on chain, {} sat ({:.2} USD) locked",
            r.attacker_channels, r.onchain_fees_usd, r.locked_liquidity_sat, r.locked_liquidity_usd
        );
    }
    Ok(())
}

//! Greedy route selection over a whole network, with the locked-capacity
//! curve next to its upper bound.

use jamkit::planner::{plan_network_attack, upper_bound_capacity, PlannerConfig, WeightMode};
use jamkit::synth::SyntheticNetwork;
use jamkit::topology::DefaultsTable;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = SyntheticNetwork::new(42).nodes(400).extra_channels(800).label_mix(0.9, 0.06, 0.04).build();
    let graph = jamkit::build_graph(&s.snapshot);
    let defaults = DefaultsTable::mainnet();

    for mode in [WeightMode::Capacity, WeightMode::Betweenness] {
        let config = PlannerConfig { weight_mode: mode, ..PlannerConfig::default() };
        let plan = plan_network_attack(&graph, &s.labels, &defaults, &config, None)?;
        println!("{mode:?}: {} routes cover {} channels", plan.routes.len(), graph.channel_count() - plan.unroutable.len());
        for budget in [10, 40, 100, 400] {
            println!(
                "  {budget:>4} attacker channels: {:.3} of capacity (bound {:.3})",
                plan.fraction_at_budget(budget),
                upper_bound_capacity(&graph, budget)
            );
        }
    }
    Ok(())
}

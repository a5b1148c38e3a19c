//! How shorter lock periods and shorter maximum routes change the attack.

use jamkit::planner::{lock_period_sweep, route_length_sweep, PlannerConfig};
use jamkit::synth::SyntheticNetwork;
use jamkit::topology::DefaultsTable;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = SyntheticNetwork::new(7).nodes(300).extra_channels(600).build();
    let graph = jamkit::build_graph(&s.snapshot);
    let d = DefaultsTable::mainnet();
    let c = PlannerConfig::default();
    let budget = 60;

    for curve in lock_period_sweep(&graph, &s.labels, &d, &c, &[1.0, 3.0, 6.0, 9.0])? {
        println!("lock {:>4} days (tau_min {:>4}): {:.3}", curve.parameter, curve.tau_min, curve.fraction_at_budget(budget));
    }
    for curve in route_length_sweep(&graph, &s.labels, &d, &c, &[3, 6, 10, 20])? {
        println!("max {:>2} hops: {:.3}", curve.parameter, curve.fraction_at_budget(budget));
    }
    Ok(())
}

//! Split a network with each partitioning method and follow the share of
//! node pairs that can still reach each other.

use jamkit::partition::{connected_pairs_fraction, fiedler_cut, kernighan_lin_cut, plan_disconnection, Method};
use jamkit::planner::PlannerConfig;
use jamkit::synth::SyntheticNetwork;
use jamkit::topology::DefaultsTable;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = SyntheticNetwork::new(5).nodes(150).extra_channels(120).build();
    let graph = jamkit::build_graph(&s.snapshot);
    let d = DefaultsTable::mainnet();
    println!("connected pairs before: {:.3}", connected_pairs_fraction(&graph)?);
    println!("fiedler cut: {} channels", fiedler_cut(&graph)?.cut_size());
    println!("kernighan-lin cut: {} channels", kernighan_lin_cut(&graph)?.cut_size());

    for method in Method::ALL {
        let (report, plan) = plan_disconnection(&graph, &s.labels, &d, &PlannerConfig::default(), method, 80)?;
        println!(
            "{:<12} {} routes, connected pairs {:.3}",
            method.as_str(),
            plan.routes.len(),
            report.final_fraction()
        );
    }
    Ok(())
}

//! Plan attacks, then replay them in the HTLC simulator to confirm every
//! targeted channel fills up.

use jamkit::isolation::{plan_isolation, IsolationConfig};
use jamkit::planner::{plan_network_attack, PlannerConfig};
use jamkit::sim::{execute_isolation, execute_plan, VerifyConfig};
use jamkit::synth::SyntheticNetwork;
use jamkit::topology::DefaultsTable;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = SyntheticNetwork::new(12).nodes(60).extra_channels(60).label_mix(0.8, 0.1, 0.1).build();
    let graph = jamkit::build_graph(&s.snapshot);
    let d = DefaultsTable::mainnet();
    let v = VerifyConfig::default();

    let plan = plan_network_attack(&graph, &s.labels, &d, &PlannerConfig::default(), Some(20))?;
    let r = execute_plan(&plan, &graph, &s.labels, &d, &v)?;
    let full = r.channels.iter().filter(|c| c.is_locked()).count();
    println!("network plan: {} payments, {full}/{} channels full", r.payments_sent, r.channels.len());

    let victim = graph.node_id(0).to_string();
    let iso = plan_isolation(&graph, &s.labels, &d, &victim, &IsolationConfig::default())?;
    let r = execute_isolation(&iso, &graph, &s.labels, &d, &v)?;
    println!(
        "isolation: {} payments, victim unreachable: {}, failures: {:?}",
        r.payments_sent,
        r.victims_unreachable.unwrap_or(false),
        r.failures
    );
    Ok(())
}

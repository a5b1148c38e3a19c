//! Cut one node off by running payments back and forth over each of its
//! channels, and tabulate the cost for all-default victims.

use jamkit::isolation::{isolation_cost_curve, plan_isolation, IsolationConfig};
use jamkit::synth::SyntheticNetwork;
use jamkit::topology::DefaultsTable;
use jamkit::ImplLabel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = SyntheticNetwork::new(9).nodes(200).extra_channels(300).build();
    let graph = jamkit::build_graph(&s.snapshot);
    let d = DefaultsTable::mainnet();
    let c = IsolationConfig::default();

    let hub = (0..graph.node_count()).max_by_key(|&i| (graph.degree(i), std::cmp::Reverse(i))).unwrap();
    let victim = graph.node_id(hub);
    let plan = plan_isolation(&graph, &s.labels, &d, victim, &c)?;
    println!("victim with {} channels", plan.per_channel.len());
    println!("  round trips {}, pass-throughs {}", plan.round_trips(), plan.pass_throughs());
    println!("  attacker channels at the victim {}, exit channels {}", plan.attacker_channels_needed, plan.exit_channels_needed);
    println!("  channels stay blocked for {} blocks", plan.min_lock_duration);

    for label in [ImplLabel::Lnd, ImplLabel::CLightning, ImplLabel::Eclair] {
        let rows = isolation_cost_curve(label, [1, 10, 50, 100], &d, &c)?;
        let cells: Vec<String> = rows.iter().map(|r| format!("{}→{}", r.degree, r.attacker_channels_needed)).collect();
        println!("{:<10} {}", label.as_str(), cells.join("  "));
    }
    Ok(())
}

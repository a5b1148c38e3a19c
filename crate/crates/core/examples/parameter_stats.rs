//! Parse a snapshot and tabulate how often each cltv_expiry_delta is announced.

use jamkit::topology::{build_graph_counted, parameter_histogram, parse_snapshot_str, PolicyParameter};
use jamkit::synth::SyntheticNetwork;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = SyntheticNetwork::new(3).nodes(300).extra_channels(500).label_mix(0.85, 0.1, 0.05).build();
    let mut raw = Vec::new();
    s.snapshot.write_json(&mut raw)?;

    let parsed = parse_snapshot_str(std::str::from_utf8(&raw)?)?;
    let (graph, filtered) = build_graph_counted(&parsed.snapshot);
    println!(
        "{} nodes, {} channels ({} skipped records, {} disabled, {} undisclosed)",
        graph.node_count(),
        graph.channel_count(),
        parsed.skipped.total(),
        filtered.disabled,
        filtered.undisclosed
    );

    for param in [PolicyParameter::CltvExpiryDelta, PolicyParameter::HtlcMinimumMsat] {
        let h = parameter_histogram(&parsed.snapshot, param)?;
        println!("{param} over {} policies", h.total_policies);
        for e in &h.entries {
            println!("  {:>8}  {:>5}  {:.3}", e.bucket.to_string(), e.count, e.share);
        }
    }
    Ok(())
}

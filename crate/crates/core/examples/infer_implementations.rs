//! Guess each node's implementation from its announced policies and compare
//! with the generator's ground truth.

use jamkit::inference::{tag_nodes_detailed, InferenceWeights};
use jamkit::synth::SyntheticNetwork;
use jamkit::topology::DefaultsTable;

fn main() {
    let s = SyntheticNetwork::new(8).nodes(120).extra_channels(150).label_mix(0.6, 0.25, 0.15).build();
    let tags = tag_nodes_detailed(&s.snapshot, &DefaultsTable::mainnet(), &InferenceWeights::default());
    let correct = tags.iter().filter(|t| s.labels[&t.node_id] == t.label).count();
    println!("{correct}/{} nodes tagged with their true implementation", tags.len());
    for t in tags.iter().take(5) {
        let score = t.scores.map(|s| s.get(t.label)).unwrap_or(0.0);
        println!("{}…  {:<10} score {score:.2}", &t.node_id[..12], t.label.as_str());
    }
}

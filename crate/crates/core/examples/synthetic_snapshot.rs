//! Write a random describegraph-style snapshot, e.g. to feed the CLI.
//!
//! cargo run --example synthetic_snapshot -- out.json [nodes] [seed]

use std::fs::File;

use jamkit::synth::SyntheticNetwork;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "synthetic.json".into());
    let nodes: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let s = SyntheticNetwork::new(seed)
        .nodes(nodes)
        .extra_channels(nodes * 2)
        .label_mix(0.9, 0.06, 0.04)
        .build();
    s.snapshot.write_json(File::create(&path)?)?;
    println!("wrote {} nodes and {} channels to {path}", s.snapshot.nodes.len(), s.snapshot.channels.len());
    Ok(())
}

use super::PartitionError;
use crate::topology::NetworkGraph;

/// Share of ordered node pairs joined by some path.
pub fn connected_pairs_fraction(graph: &NetworkGraph) -> Result<f64, PartitionError> {
    let n = graph.node_count();
    if n < 2 {
        return Err(PartitionError::TooFewNodes { needed: 2, found: n });
    }
    let connected: u128 = graph
        .components()
        .iter()
        .map(|c| {
            let s = c.len() as u128;
            s * (s - 1)
        })
        .sum();
    Ok(connected as f64 / (n as u128 * (n as u128 - 1)) as f64)
}

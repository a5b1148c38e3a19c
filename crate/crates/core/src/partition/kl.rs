//! Simplified Kernighan-Lin: greedy single-node moves from a fixed seed.
//!
//! The seed side holds the `ceil(n/4)` smallest node ids. A node moves to
//! the other side while that strictly shrinks the cut and both sides keep at
//! least `ceil(n/4)` nodes.

use super::{largest_component_graph, Bipartition, PartitionError};
use crate::topology::NetworkGraph;

pub fn kernighan_lin_cut(graph: &NetworkGraph) -> Result<Bipartition, PartitionError> {
    let comp = largest_component_graph(graph);
    let n = comp.node_count();
    if n < 4 {
        return Err(PartitionError::TooFewNodes { needed: 4, found: n });
    }
    let min_side = n.div_ceil(4);
    // node ids are sorted, so the seed is a prefix
    let mut in_a: Vec<bool> = (0..n).map(|i| i < min_side).collect();
    let mut size_a = min_side;
    // gain[v] = channels to the other side minus channels to v's own side
    let mut gain = vec![0i64; n];
    for c in comp.channels() {
        let w = if in_a[c.node_a] != in_a[c.node_b] { 1 } else { -1 };
        gain[c.node_a] += w;
        gain[c.node_b] += w;
    }
    loop {
        let mut best: Option<usize> = None;
        for v in 0..n {
            if gain[v] <= 0 {
                continue;
            }
            let from_size = if in_a[v] { size_a } else { n - size_a };
            if from_size <= min_side {
                continue;
            }
            if best.is_none_or(|b| gain[v] > gain[b]) {
                best = Some(v);
            }
        }
        let Some(v) = best else { break };
        in_a[v] = !in_a[v];
        if in_a[v] {
            size_a += 1;
        } else {
            size_a -= 1;
        }
        gain[v] = -gain[v];
        for &ci in comp.incident(v) {
            let u = comp.channel(ci).other_end(v);
            if u == v {
                continue;
            }
            // the channel flipped between crossing and internal
            gain[u] += if in_a[u] == in_a[v] { -2 } else { 2 };
        }
    }
    Ok(Bipartition::from_sides(&comp, &in_a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::graph_from_edges;
    use proptest::prelude::*;

    fn clique(offset: usize, k: usize) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                e.push((offset + i, offset + j));
            }
        }
        e
    }

    fn seed_cut(g: &NetworkGraph) -> usize {
        let comp = largest_component_graph(g);
        let k = comp.node_count().div_ceil(4);
        comp.channels().iter().filter(|c| (c.node_a < k) != (c.node_b < k)).count()
    }

    #[test]
    fn two_k5_converge_to_double_bridge() {
        let mut edges = clique(0, 5);
        edges.extend(clique(5, 5));
        edges.push((3, 5));
        edges.push((4, 6));
        let g = graph_from_edges(&edges, 40);
        let cut = kernighan_lin_cut(&g).unwrap();
        assert_eq!(cut.cut_size(), 2);
        assert_eq!(cut.side_a, (0..5).map(crate::synth::node_name).collect::<Vec<_>>());
    }

    #[test]
    fn minimal_seed_is_kept() {
        // 0,1 form the seed (n=8) and hang off the rest by one channel
        let mut edges = vec![(0, 1), (1, 2)];
        edges.extend(clique(2, 6));
        let g = graph_from_edges(&edges, 40);
        let cut = kernighan_lin_cut(&g).unwrap();
        assert_eq!(cut.side_a, vec!["n000".to_string(), "n001".to_string()]);
        assert_eq!(cut.cut_channels, vec!["e001".to_string()]);
    }

    proptest! {
        #[test]
        fn never_worse_than_seed(edges in prop::collection::vec((0usize..14, 0usize..14), 4..40)) {
            let edges: Vec<_> = edges.into_iter().filter(|(a, b)| a != b).collect();
            prop_assume!(!edges.is_empty());
            let g = graph_from_edges(&edges, 40);
            prop_assume!(g.largest_component().len() >= 4);
            let cut = kernighan_lin_cut(&g).unwrap();
            prop_assert!(cut.cut_size() <= seed_cut(&g));
            let n = cut.side_a.len() + cut.side_b.len();
            prop_assert!(cut.side_a.len() >= n.div_ceil(4));
            prop_assert!(cut.side_b.len() >= n.div_ceil(4));
        }
    }
}

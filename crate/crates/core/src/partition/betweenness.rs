//! Unweighted edge betweenness (Brandes) over the undirected channel graph.
//!
//! Each unordered node pair contributes the fraction of its shortest paths
//! crossing a channel. Parallel channels are distinct edges, so they split
//! the paths between them.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;

use crate::topology::NetworkGraph;

const SOURCES_PER_CHUNK: usize = 64;

/// Scores indexed by channel index of `graph`.
pub fn edge_betweenness(graph: &NetworkGraph) -> Vec<f64> {
    let n = graph.node_count();
    let m = graph.channel_count();
    if m == 0 {
        return Vec::new();
    }
    let sources: Vec<usize> = (0..n).collect();
    // Chunk boundaries are fixed and partial sums are folded in chunk order,
    // so the floating-point result does not depend on thread scheduling.
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCES_PER_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; m];
            let mut scratch = Scratch::new(n);
            for &s in chunk {
                accumulate_source(graph, s, &mut scratch, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; m];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    // every unordered pair was counted from both ends
    for t in &mut total {
        *t /= 2.0;
    }
    total
}

/// Scores keyed by channel id.
pub fn edge_betweenness_by_id(graph: &NetworkGraph) -> BTreeMap<String, f64> {
    edge_betweenness(graph)
        .into_iter()
        .enumerate()
        .map(|(i, b)| (graph.channel(i).channel_id.clone(), b))
        .collect()
}

struct Scratch {
    dist: Vec<i64>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    preds: Vec<Vec<(usize, usize)>>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            dist: vec![-1; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
            queue: VecDeque::new(),
        }
    }
}

fn accumulate_source(graph: &NetworkGraph, s: usize, sc: &mut Scratch, acc: &mut [f64]) {
    for &v in &sc.order {
        sc.dist[v] = -1;
        sc.sigma[v] = 0.0;
        sc.delta[v] = 0.0;
        sc.preds[v].clear();
    }
    sc.order.clear();

    sc.dist[s] = 0;
    sc.sigma[s] = 1.0;
    sc.queue.push_back(s);
    while let Some(v) = sc.queue.pop_front() {
        sc.order.push(v);
        for &ci in graph.incident(v) {
            let w = graph.channel(ci).other_end(v);
            if sc.dist[w] < 0 {
                sc.dist[w] = sc.dist[v] + 1;
                sc.queue.push_back(w);
            }
            if sc.dist[w] == sc.dist[v] + 1 {
                sc.sigma[w] += sc.sigma[v];
                sc.preds[w].push((v, ci));
            }
        }
    }

    for &w in sc.order.iter().rev() {
        for &(v, ci) in &sc.preds[w] {
            let c = sc.sigma[v] / sc.sigma[w] * (1.0 + sc.delta[w]);
            acc[ci] += c;
            sc.delta[v] += c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::graph_from_edges;

    #[test]
    fn bridge_between_triangles_is_maximal() {
        let g = graph_from_edges(&[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)], 40);
        let bc = edge_betweenness(&g);
        let bridge = g.channel_index("e003").unwrap();
        // 3 x 3 cross pairs all use the bridge
        assert!((bc[bridge] - 9.0).abs() < 1e-12);
        for (i, b) in bc.iter().enumerate() {
            if i != bridge {
                assert!(*b < bc[bridge]);
            }
        }
    }

    #[test]
    fn four_cycle_is_uniform() {
        let g = graph_from_edges(&[(0, 1), (1, 2), (2, 3), (3, 0)], 40);
        let bc = edge_betweenness(&g);
        // adjacent pair: 1; opposite pairs split over two paths: 2 x 0.5
        for b in &bc {
            assert!((b - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_channels_share_paths() {
        let g = graph_from_edges(&[(0, 1), (0, 1), (1, 2)], 40);
        let bc = edge_betweenness(&g);
        assert!((bc[0] - 1.0).abs() < 1e-12);
        assert!((bc[1] - 1.0).abs() < 1e-12);
        assert!((bc[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_across_runs() {
        let g = crate::synth::SyntheticNetwork::new(7).nodes(300).extra_channels(500).build_graph();
        let a = edge_betweenness(&g);
        let b = edge_betweenness(&g);
        assert_eq!(a, b);
    }
}

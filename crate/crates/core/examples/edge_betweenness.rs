//! Edge betweenness of a small graph: the bridge carries every cross path.

use jamkit::partition::edge_betweenness_by_id;
use jamkit::synth::graph_from_edges;

fn main() {
    // two triangles joined by e003
    let g = graph_from_edges(&[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)], 40);
    for (id, b) in edge_betweenness_by_id(&g) {
        println!("{id}  {b:>5.1}");
    }
}

//! Fiedler vector by shifted power iteration.
//!
//! With `c` at least the largest Laplacian eigenvalue, `cI - L` has the same
//! eigenvectors with order reversed. Projecting out the constant vector at
//! every step leaves the Fiedler direction dominant.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{largest_component_graph, Bipartition, PartitionError};
use crate::topology::NetworkGraph;

pub const FIEDLER_TOLERANCE: f64 = 1e-8;
pub const FIEDLER_MAX_ITERATIONS: usize = 100_000;
const ZERO_COORDINATE: f64 = 1e-10;
const START_SEED: u64 = 0x5eed;
const CHECK_EVERY: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct FiedlerVector {
    /// Graph the vector is indexed by (the largest component).
    pub component: NetworkGraph,
    pub values: Vec<f64>,
    /// Algebraic connectivity.
    pub eigenvalue: f64,
    pub iterations: usize,
    pub residual: f64,
}

fn laplacian_mul(graph: &NetworkGraph, x: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = graph.degree(i) as f64 * x[i];
    }
    for c in graph.channels() {
        out[c.node_a] -= x[c.node_b];
        out[c.node_b] -= x[c.node_a];
    }
}

fn center_and_normalize(x: &mut [f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for v in x.iter_mut() {
        *v -= mean;
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
    norm
}

/// Fiedler vector of the largest component, sign-normalized so the first
/// non-zero coordinate is positive.
pub fn fiedler_vector(graph: &NetworkGraph) -> Result<FiedlerVector, PartitionError> {
    let comp = largest_component_graph(graph);
    let n = comp.node_count();
    if n < 3 {
        return Err(PartitionError::TooFewNodes { needed: 3, found: n });
    }
    let max_degree = (0..n).map(|i| comp.degree(i)).max().unwrap_or(0) as f64;
    let shift = 2.0 * max_degree;

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    center_and_normalize(&mut x);
    let mut lx = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut lambda = 0.0;
    let mut iterations = 0;
    while iterations < FIEDLER_MAX_ITERATIONS {
        laplacian_mul(&comp, &x, &mut lx);
        if iterations % CHECK_EVERY == 0 {
            lambda = x.iter().zip(&lx).map(|(a, b)| a * b).sum();
            residual = x
                .iter()
                .zip(&lx)
                .map(|(a, b)| (b - lambda * a).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual < FIEDLER_TOLERANCE {
                break;
            }
        }
        for (xi, li) in x.iter_mut().zip(&lx) {
            *xi = shift * *xi - li;
        }
        center_and_normalize(&mut x);
        iterations += 1;
    }
    if residual >= FIEDLER_TOLERANCE {
        return Err(PartitionError::NoConvergence { iterations, residual });
    }
    if let Some(first) = x.iter().find(|v| v.abs() >= ZERO_COORDINATE) {
        if *first < 0.0 {
            for v in &mut x {
                *v = -*v;
            }
        }
    }
    Ok(FiedlerVector { component: comp, values: x, eigenvalue: lambda, iterations, residual })
}

/// Split the largest component by the sign of its Fiedler vector.
pub fn fiedler_cut(graph: &NetworkGraph) -> Result<Bipartition, PartitionError> {
    let f = fiedler_vector(graph)?;
    let positive: Vec<bool> = f.values.iter().map(|&v| v > -ZERO_COORDINATE).collect();
    Ok(Bipartition::from_sides(&f.component, &positive))
}

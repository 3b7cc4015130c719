//! Seeded fixtures shared by the integration suites.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sr_sampler::dpp::{KdppModel, KernelMatrix};
use sr_sampler::spanning_tree::WeightedGraph;

/// Random PSD kernel G G^T with G n x n, entries uniform in [-1, 1].
pub fn seeded_kernel(n: usize, seed: u64) -> KernelMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = 0.0;
            for c in 0..n {
                acc += g[i * n + c] * g[j * n + c];
            }
            entries[i * n + j] = acc;
            entries[j * n + i] = acc;
        }
    }
    KernelMatrix::from_flat(n, entries).expect("Gram matrices are symmetric PSD")
}

pub fn seeded_dpp(n: usize, k: usize, seed: u64) -> KdppModel<f64> {
    KdppModel::new(seeded_kernel(n, seed), k).expect("random Gram kernels have full rank")
}

/// Complete graph on v vertices, unit weights.
pub fn complete_graph(v: usize) -> WeightedGraph<f64> {
    let mut edges = Vec::new();
    for a in 0..v {
        for b in a + 1..v {
            edges.push((a, b, 1.0));
        }
    }
    WeightedGraph::new(v, edges).expect("complete graphs are connected")
}

/// Connected seeded graph: a path through all vertices plus `extra` random
/// edges, parallel edges included. Weights are uniform in [0.5, 2].
pub fn seeded_graph(v: usize, extra: usize, seed: u64) -> WeightedGraph<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..v - 1 {
        edges.push((a, a + 1, rng.random_range(0.5..2.0)));
    }
    for _ in 0..extra {
        let a = rng.random_range(0..v);
        let mut b = rng.random_range(0..v - 1);
        if b >= a {
            b += 1;
        }
        edges.push((a.min(b), a.max(b), rng.random_range(0.5..2.0)));
    }
    WeightedGraph::new(v, edges).expect("the path keeps the graph connected")
}

/// The ten-model suite behind the isotropy and overestimate criteria: six
/// kernel models straddling the estimator's all-ones base case (n <= 4k)
/// and four graphs, one of them a dense multigraph.
pub fn suite_dpps() -> Vec<KdppModel<f64>> {
    vec![
        seeded_dpp(8, 2, 101),
        seeded_dpp(9, 2, 102),
        seeded_dpp(10, 2, 103),
        seeded_dpp(12, 2, 104),
        seeded_dpp(13, 3, 105),
        seeded_dpp(14, 3, 106),
    ]
}

pub fn suite_graphs() -> Vec<WeightedGraph<f64>> {
    vec![
        complete_graph(4),
        seeded_graph(5, 3, 107),
        seeded_graph(4, 11, 108),
        seeded_graph(6, 2, 109),
    ]
}

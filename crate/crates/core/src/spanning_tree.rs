//! Weighted random spanning trees: mu(T) proportional to the product of the
//! tree's edge weights.
//!
//! The ground set is the edge list (parallel edges are distinct elements),
//! cardinality is vertices - 1. The baseline sampler is Wilson's algorithm:
//! loop-erased random walks rooted at vertex 0, stepping across incident
//! edges with probability proportional to weight. Counts come from the
//! matrix-tree theorem on the reduced weighted Laplacian, in log domain.

use crate::error::{Error, Result};
use crate::isotropy::CopyMap;
use crate::model::{pick_weighted, Model, SubsetSample};
use crate::scalar::{from_usize, Real};
use rand::RngCore;

/// An undirected connected multigraph with positive edge weights.
/// Connectivity is checked at construction, so every instance supports at
/// least one spanning tree.
#[derive(Debug, Clone)]
pub struct WeightedGraph<R: Real> {
    vertices: usize,
    edges: Vec<(usize, usize, R)>,
    /// adjacency[v] = (edge id, other endpoint, weight)
    adjacency: Vec<Vec<(usize, usize, R)>>,
}

impl<R: Real> WeightedGraph<R> {
    /// # Errors
    /// `InvalidInput` for self-loops, out-of-range endpoints, or
    /// nonpositive/non-finite weights; `Disconnected` when the graph does
    /// not span its vertex set.
    pub fn new(vertices: usize, edges: Vec<(usize, usize, R)>) -> Result<Self> {
        if vertices == 0 {
            return Err(Error::InvalidInput("graph needs at least one vertex".into()));
        }
        for (id, &(u, v, w)) in edges.iter().enumerate() {
            if u == v {
                return Err(Error::InvalidInput(format!("edge {id} is a self-loop")));
            }
            if u >= vertices || v >= vertices {
                return Err(Error::InvalidInput(format!(
                    "edge {id} touches a vertex outside 0..{vertices}"
                )));
            }
            if !(w > R::zero()) || !w.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "edge {id} needs a positive finite weight"
                )));
            }
        }
        if !spans(vertices, edges.iter().map(|&(u, v, _)| (u, v))) {
            return Err(Error::Disconnected);
        }
        let mut adjacency = vec![Vec::new(); vertices];
        for (id, &(u, v, w)) in edges.iter().enumerate() {
            adjacency[u].push((id, v, w));
            adjacency[v].push((id, u, w));
        }
        Ok(WeightedGraph {
            vertices,
            edges,
            adjacency,
        })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize, R)] {
        &self.edges
    }
}

/// Union-find check that the edge set connects all vertices.
fn spans(vertices: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    let mut parent: Vec<usize> = (0..vertices).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = vertices;
    for (u, v) in edges {
        let (ru, rv) = (root(&mut parent, u), root(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
            components -= 1;
        }
    }
    components == 1
}

/// Wilson's algorithm over the given adjacency; edge ids in the adjacency
/// are returned as-is, so callers can feed global ids through a restricted
/// view. Every vertex must have at least one incident edge and the graph
/// must be connected.
fn wilson<R: Real>(
    vertices: usize,
    adjacency: &[Vec<(usize, usize, R)>],
    rng: &mut dyn RngCore,
) -> Vec<usize> {
    let mut in_tree = vec![false; vertices];
    in_tree[0] = true;
    let mut via_edge = vec![usize::MAX; vertices];
    let mut via_vertex = vec![usize::MAX; vertices];
    let mut out = Vec::with_capacity(vertices.saturating_sub(1));
    let mut weights: Vec<R> = Vec::new();
    for start in 1..vertices {
        if in_tree[start] {
            continue;
        }
        // Random walk until the tree is hit; revisiting a vertex overwrites
        // its outgoing step, which is exactly loop erasure.
        let mut u = start;
        while !in_tree[u] {
            let incident = &adjacency[u];
            weights.clear();
            weights.extend(incident.iter().map(|&(_, _, w)| w));
            let (edge, to, _) = incident[pick_weighted(&weights, rng)];
            via_edge[u] = edge;
            via_vertex[u] = to;
            u = to;
        }
        // Commit the erased path.
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            out.push(via_edge[u]);
            u = via_vertex[u];
        }
    }
    out
}

/// One exact draw from the weighted spanning-tree distribution, as the set
/// of chosen edge ids.
pub fn sample_tree<R: Real>(graph: &WeightedGraph<R>, rng: &mut dyn RngCore) -> SubsetSample {
    let ids = wilson(graph.vertices, &graph.adjacency, rng);
    SubsetSample::from_unsorted(ids, graph.edges.len()).expect("wilson yields a valid edge set")
}

/// One exact draw conditioned on the tree using only edges in `domain`
/// (sorted global edge ids).
///
/// # Errors
/// `Disconnected` when the restricted edge set does not span.
pub fn sample_tree_restricted<R: Real>(
    graph: &WeightedGraph<R>,
    domain: &[usize],
    rng: &mut dyn RngCore,
) -> Result<SubsetSample> {
    if domain.len() == graph.edges.len() {
        return Ok(sample_tree(graph, rng));
    }
    if !spans(
        graph.vertices,
        domain.iter().map(|&e| (graph.edges[e].0, graph.edges[e].1)),
    ) {
        return Err(Error::Disconnected);
    }
    let mut adjacency = vec![Vec::new(); graph.vertices];
    for &e in domain {
        let (u, v, w) = graph.edges[e];
        adjacency[u].push((e, v, w));
        adjacency[v].push((e, u, w));
    }
    let ids = wilson(graph.vertices, &adjacency, rng);
    Ok(SubsetSample::from_unsorted(ids, graph.edges.len()).expect("wilson yields a valid edge set"))
}

/// Natural log of the weighted spanning-tree count, by the matrix-tree
/// theorem: log det of the reduced weighted Laplacian (vertex 0 deleted),
/// computed with a Cholesky factorization.
pub fn weighted_tree_count<R: Real>(graph: &WeightedGraph<R>) -> R {
    let m = graph.vertices - 1;
    if m == 0 {
        return R::zero();
    }
    let mut lap = vec![R::zero(); m * m];
    for &(u, v, w) in &graph.edges {
        if u > 0 {
            lap[(u - 1) * m + (u - 1)] += w;
        }
        if v > 0 {
            lap[(v - 1) * m + (v - 1)] += w;
        }
        if u > 0 && v > 0 {
            lap[(u - 1) * m + (v - 1)] -= w;
            lap[(v - 1) * m + (u - 1)] -= w;
        }
    }
    // The reduced Laplacian of a connected graph is positive definite.
    let mut log_det = R::zero();
    for c in 0..m {
        let mut d = lap[c * m + c];
        for r in 0..c {
            d -= lap[c * m + r] * lap[c * m + r];
        }
        assert!(d > R::zero(), "reduced Laplacian must be positive definite");
        let l = d.sqrt();
        log_det += l.ln() + l.ln();
        for row in c + 1..m {
            let mut v = lap[row * m + c];
            for r in 0..c {
                v -= lap[row * m + r] * lap[c * m + r];
            }
            lap[row * m + c] = v / l;
        }
        lap[c * m + c] = l;
    }
    log_det
}

/// Sum of log-weights if the edge set is a spanning tree, `-inf` otherwise
/// (wrong cardinality, cycle, or missed vertex).
pub fn log_weight_tree<R: Real>(graph: &WeightedGraph<R>, edges: &[usize]) -> R {
    if edges.len() + 1 != graph.vertices {
        return R::neg_infinity();
    }
    if !spans(
        graph.vertices,
        edges.iter().map(|&e| (graph.edges[e].0, graph.edges[e].1)),
    ) {
        return R::neg_infinity();
    }
    // V - 1 edges that span are exactly a tree.
    edges
        .iter()
        .fold(R::zero(), |acc, &e| acc + graph.edges[e].2.ln())
}

impl<R: Real> Model<R> for WeightedGraph<R> {
    fn ground_size(&self) -> usize {
        self.edges.len()
    }

    fn cardinality(&self) -> usize {
        self.vertices - 1
    }

    fn log_weight(&self, indices: &[usize]) -> R {
        log_weight_tree(self, indices)
    }

    fn sample_restricted(&self, domain: &[usize], rng: &mut dyn RngCore) -> Result<SubsetSample> {
        sample_tree_restricted(self, domain, rng)
    }

    fn restrict(&self, domain: &[usize]) -> Result<Self> {
        WeightedGraph::new(
            self.vertices,
            domain.iter().map(|&e| self.edges[e]).collect(),
        )
    }

    fn subdivide(&self, map: &CopyMap) -> Self {
        let mut edges = Vec::with_capacity(map.u_size());
        for (i, &t) in map.copies().iter().enumerate() {
            let (u, v, w) = self.edges[i];
            let split = w / from_usize::<R>(t);
            for _ in 0..t {
                edges.push((u, v, split));
            }
        }
        WeightedGraph::new(self.vertices, edges).expect("subdividing keeps the graph connected")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        enumerate_distribution, exact_marginals, k_subsets, tv_distance, ExactTable,
        DEFAULT_ENUMERATION_CAP,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn triangle(weights: [f64; 3]) -> WeightedGraph<f64> {
        WeightedGraph::new(
            3,
            vec![(0, 1, weights[0]), (1, 2, weights[1]), (0, 2, weights[2])],
        )
        .unwrap()
    }

    fn complete(vertices: usize) -> WeightedGraph<f64> {
        let mut edges = Vec::new();
        for u in 0..vertices {
            for v in u + 1..vertices {
                edges.push((u, v, 1.0));
            }
        }
        WeightedGraph::new(vertices, edges).unwrap()
    }

    #[test]
    fn construction_rejects_bad_graphs() {
        assert!(matches!(
            WeightedGraph::new(2, vec![(0, 0, 1.0)]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            WeightedGraph::new(2, vec![(0, 2, 1.0)]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            WeightedGraph::new(2, vec![(0, 1, 0.0)]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            WeightedGraph::new(2, vec![(0, 1, -1.0)]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            WeightedGraph::new(3, vec![(0, 1, 1.0)]),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn uniform_triangle() {
        let g = triangle([1.0, 1.0, 1.0]);
        let oracle = enumerate_distribution(&g, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(oracle.support_size(), 3);
        for s in k_subsets(3, 2) {
            assert!((oracle.prob(&s) - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((weighted_tree_count(&g) - 3.0f64.ln()).abs() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let samples: Vec<SubsetSample> = (0..60_000).map(|_| sample_tree(&g, &mut rng)).collect();
        let empirical = ExactTable::from_samples(samples, 3).unwrap();
        assert!(tv_distance(&empirical, &oracle).unwrap() <= 0.02);
    }

    #[test]
    fn weighted_triangle() {
        // Trees are edge pairs; weights 1*2, 1*3, 2*3 over a total of 11.
        let g = triangle([1.0, 2.0, 3.0]);
        let oracle = enumerate_distribution(&g, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!((oracle.prob(&[0, 1]) - 2.0 / 11.0).abs() < 1e-12);
        assert!((oracle.prob(&[0, 2]) - 3.0 / 11.0).abs() < 1e-12);
        assert!((oracle.prob(&[1, 2]) - 6.0 / 11.0).abs() < 1e-12);
        assert!((weighted_tree_count(&g) - 11.0f64.ln()).abs() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let samples: Vec<SubsetSample> = (0..60_000).map(|_| sample_tree(&g, &mut rng)).collect();
        let empirical = ExactTable::from_samples(samples, 3).unwrap();
        assert!(tv_distance(&empirical, &oracle).unwrap() <= 0.02);
    }

    #[test]
    fn complete_four_vertices() {
        let g = complete(4);
        let oracle = enumerate_distribution(&g, DEFAULT_ENUMERATION_CAP).unwrap();
        // Cayley: 4^2 = 16 trees, uniform at unit weights.
        assert_eq!(oracle.support_size(), 16);
        for (_, p) in oracle.entries() {
            assert!((p - 1.0 / 16.0).abs() < 1e-12);
        }
        assert!((weighted_tree_count(&g) - 16.0f64.ln()).abs() < 1e-9);
        // Every edge sits in half the trees.
        for m in exact_marginals(&oracle) {
            assert!((m - 0.5).abs() < 1e-9);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let draws = 60_000;
        let mut counts = vec![0usize; 6];
        for _ in 0..draws {
            for &e in sample_tree(&g, &mut rng).indices() {
                counts[e] += 1;
            }
        }
        let se = (0.25f64 / draws as f64).sqrt();
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.5).abs() <= 4.0 * se);
        }
    }

    #[test]
    fn parallel_edges_are_distinct_elements() {
        let g: WeightedGraph<f64> = WeightedGraph::new(2, vec![(0, 1, 1.0), (0, 1, 3.0)]).unwrap();
        let oracle = enumerate_distribution(&g, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!((oracle.prob(&[0]) - 0.25).abs() < 1e-12);
        assert!((oracle.prob(&[1]) - 0.75).abs() < 1e-12);
        assert!((weighted_tree_count(&g) - 4.0f64.ln()).abs() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let draws = 40_000;
        let heavy = (0..draws)
            .filter(|_| sample_tree(&g, &mut rng).indices() == [1])
            .count();
        let se = (0.25f64 * 0.75 / draws as f64).sqrt();
        assert!((heavy as f64 / draws as f64 - 0.75).abs() <= 4.0 * se);
    }

    #[test]
    fn log_weights_classify_edge_sets() {
        let g = complete(4);
        // Edges 0=(0,1) 1=(0,2) 2=(0,3): a star, weight 1 -> log 0.
        assert_eq!(log_weight_tree(&g, &[0, 1, 2]), 0.0);
        // A triangle misses vertex 3 and has a cycle.
        assert_eq!(log_weight_tree(&g, &[0, 1, 3]), f64::NEG_INFINITY);
        // Wrong cardinality.
        assert_eq!(log_weight_tree(&g, &[0, 1]), f64::NEG_INFINITY);

        let g = triangle([1.0, 2.0, 3.0]);
        assert!((log_weight_tree(&g, &[1, 2]) - 6.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn count_matches_enumeration_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        for seed in 0..4u64 {
            let _ = seed;
            // Random connected graph: a random spanning path plus extras.
            let v = 5;
            let mut edges: Vec<(usize, usize, f64)> = (1..v)
                .map(|i| (i - 1, i, 1.0 + 3.0 * f64::unit_uniform(&mut rng)))
                .collect();
            for u in 0..v {
                for w in u + 2..v {
                    if f64::unit_uniform(&mut rng) < 0.4 {
                        edges.push((u, w, 0.5 + 2.0 * f64::unit_uniform(&mut rng)));
                    }
                }
            }
            let g = WeightedGraph::new(v, edges).unwrap();
            // Log-sum-exp over all spanning edge sets.
            let logs: Vec<f64> = k_subsets(g.ground_size(), v - 1)
                .map(|s| log_weight_tree(&g, &s))
                .filter(|l| l.is_finite())
                .collect();
            let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let total = max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
            assert!((weighted_tree_count(&g) - total).abs() < 1e-9);

            let oracle = enumerate_distribution(&g, DEFAULT_ENUMERATION_CAP).unwrap();
            let samples: Vec<SubsetSample> =
                (0..150_000).map(|_| sample_tree(&g, &mut rng)).collect();
            let empirical = ExactTable::from_samples(samples, g.ground_size()).unwrap();
            let tv = tv_distance(&empirical, &oracle).unwrap();
            assert!(tv <= 0.03, "tv = {tv}");
        }
    }

    #[test]
    fn restricted_sampling() {
        let g = complete(4);
        let mut rng = ChaCha8Rng::seed_from_u64(127);

        // domain = one tree's edges: that tree comes back surely.
        for _ in 0..10 {
            let s = sample_tree_restricted(&g, &[0, 1, 2], &mut rng).unwrap();
            assert_eq!(s.indices(), &[0, 1, 2]);
        }

        // Triangle on {0,1,2} plus the edge (2,3): the tree must take (2,3)
        // and two of the three triangle edges, uniformly.
        // Edge ids in complete(4): 0=(0,1) 1=(0,2) 2=(0,3) 3=(1,2) 4=(1,3) 5=(2,3).
        let domain = [0usize, 1, 3, 5];
        let draws = 30_000;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..draws {
            let s = sample_tree_restricted(&g, &domain, &mut rng).unwrap();
            assert!(s.contains(5));
            *counts.entry(s.indices().to_vec()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 3);
        for (_, c) in counts {
            let freq = c as f64 / draws as f64;
            let se = ((1.0 / 3.0) * (2.0 / 3.0) / draws as f64).sqrt();
            assert!((freq - 1.0 / 3.0).abs() <= 4.0 * se);
        }

        // Restrictions that do not span fail loudly.
        assert!(matches!(
            sample_tree_restricted(&g, &[0, 1, 3], &mut rng),
            Err(Error::Disconnected)
        ));
        assert!(matches!(g.restrict(&[0, 1, 3]), Err(Error::Disconnected)));

        // A valid restriction is a standalone model over renumbered edges.
        let r = g.restrict(&domain).unwrap();
        assert_eq!(r.ground_size(), 4);
        assert_eq!(r.cardinality(), 3);
        let oracle = enumerate_distribution(&r, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(oracle.support_size(), 3);
    }

    #[test]
    fn subdivision_splits_weight_across_copies() {
        let g = triangle([1.0, 2.0, 3.0]);
        let q = crate::isotropy::MarginalOverestimates::new(vec![1.0, 0.5, 0.5]).unwrap();
        let map = crate::isotropy::build_copy_map(&q).unwrap();
        let sub = g.subdivide(&map);
        assert_eq!(sub.ground_size(), map.u_size());
        assert_eq!(sub.cardinality(), 2);

        // Pushforward under collapse equals the original law.
        let original = enumerate_distribution(&g, DEFAULT_ENUMERATION_CAP).unwrap();
        let lifted = enumerate_distribution(&sub, DEFAULT_ENUMERATION_CAP).unwrap();
        let mut collapsed = std::collections::BTreeMap::new();
        for (s, p) in lifted.entries() {
            let back = crate::isotropy::collapse_sample(s, &map).unwrap();
            *collapsed.entry(back.indices().to_vec()).or_insert(0.0) += p;
        }
        for (s, p) in original.entries() {
            let got = collapsed.get(s.indices()).copied().unwrap_or(0.0);
            assert!((got - p).abs() < 1e-12, "{s:?}: {got} vs {p}");
        }

        // Two copies of one edge form a cycle, so such sets carry no mass.
        let e0_copies = map.copy_range(0);
        if e0_copies.len() >= 2 {
            let pair = vec![e0_copies.start, e0_copies.start + 1];
            assert_eq!(sub.log_weight(&pair), f64::NEG_INFINITY);
        }
    }

    #[test]
    fn single_vertex_and_path_graphs() {
        let lone = WeightedGraph::<f64>::new(1, vec![]).unwrap();
        assert_eq!(lone.cardinality(), 0);
        assert_eq!(weighted_tree_count(&lone), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(131);
        assert_eq!(sample_tree(&lone, &mut rng).k(), 0);

        // A path has exactly one spanning tree: itself.
        let path = WeightedGraph::new(4, vec![(0, 1, 2.0), (1, 2, 0.5), (2, 3, 4.0)]).unwrap();
        for _ in 0..10 {
            assert_eq!(sample_tree(&path, &mut rng).indices(), &[0, 1, 2]);
        }
        assert!((weighted_tree_count(&path) - 4.0f64.ln()).abs() < 1e-9);
    }
}

use hbmbfs_core::{Graph, VertexId};
use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Draws up to `count` distinct roots with nonzero out-degree. Deterministic
/// in `seed`; returns every such vertex when there are fewer than `count`.
pub fn select_roots(g: &Graph, count: usize, seed: u64) -> Vec<VertexId> {
    let candidates: Vec<VertexId> = (0..g.num_vertices() as VertexId).filter(|&v| g.out_degree(v) > 0).collect();
    if candidates.len() <= count {
        return candidates;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    index::sample(&mut rng, candidates.len(), count).into_iter().map(|i| candidates[i]).collect()
}

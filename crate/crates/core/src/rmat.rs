//! Graph500-style Kronecker (RMAT) edge generation.
//!
//! Every edge draws one uniform number per recursion level from a ChaCha8
//! stream. Edge `i` owns the stream words `[i * 2 * scale, (i + 1) * 2 * scale)`,
//! so any edge can be regenerated alone by seeking, independent of the order
//! in which edges are produced.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::EdgeList;
use crate::VertexId;

/// Salt separating the label-permutation stream from the edge stream.
const PERMUTATION_STREAM: u64 = 0x5eed_1abe1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RmatError {
    #[error("scale must be in 1..=31, got {0}")]
    Scale(u32),
    #[error("average degree must be at least 1")]
    Degree,
    #[error("quadrant probabilities must be non-negative and sum to at most 1 (a={a}, b={b}, c={c})")]
    Probabilities { a: f64, b: f64, c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmatConfig {
    pub scale: u32,
    pub avg_degree: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub seed: u64,
    /// Scramble vertex labels with a seeded permutation after generation.
    /// Without it the low id bits are strongly skewed, which defeats
    /// `VID % Q` load balancing.
    pub permute_labels: bool,
}

impl RmatConfig {
    /// A=0.57, B=0.19, C=0.19, labels permuted.
    pub fn graph500(scale: u32, avg_degree: u32, seed: u64) -> Self {
        Self {
            scale,
            avg_degree,
            a: 0.57,
            b: 0.19,
            c: 0.19,
            seed,
            permute_labels: true,
        }
    }

    pub fn num_vertices(&self) -> u64 {
        1u64 << self.scale
    }

    pub fn num_edges(&self) -> u64 {
        self.num_vertices() * u64::from(self.avg_degree)
    }

    pub fn validate(&self) -> Result<(), RmatError> {
        if !(1..=31).contains(&self.scale) {
            return Err(RmatError::Scale(self.scale));
        }
        if self.avg_degree == 0 {
            return Err(RmatError::Degree);
        }
        let (a, b, c) = (self.a, self.b, self.c);
        let ok = [a, b, c].iter().all(|p| p.is_finite() && *p >= 0.0) && a + b + c <= 1.0 + 1e-12;
        if !ok {
            return Err(RmatError::Probabilities { a, b, c });
        }
        Ok(())
    }

    fn words_per_edge(&self) -> u128 {
        2 * u128::from(self.scale)
    }

    fn edge_from(&self, rng: &mut ChaCha8Rng) -> (VertexId, VertexId) {
        let (ab, abc) = (self.a + self.b, self.a + self.b + self.c);
        let (mut src, mut dst) = (0u32, 0u32);
        for _ in 0..self.scale {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            let (sb, db) = if u < self.a {
                (0, 0)
            } else if u < ab {
                (0, 1)
            } else if u < abc {
                (1, 0)
            } else {
                (1, 1)
            };
            src = (src << 1) | sb;
            dst = (dst << 1) | db;
        }
        (src, dst)
    }

    fn permutation(&self) -> Option<Vec<VertexId>> {
        self.permute_labels.then(|| {
            let mut labels: Vec<VertexId> = (0..self.num_vertices() as u32).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ PERMUTATION_STREAM);
            labels.shuffle(&mut rng);
            labels
        })
    }

    /// Edge `index` regenerated on its own (labels not permuted).
    pub fn raw_edge_at(&self, index: u64) -> (VertexId, VertexId) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(u128::from(index) * self.words_per_edge());
        self.edge_from(&mut rng)
    }

    /// Generates `2^scale * avg_degree` undirected edges. Duplicates and self
    /// loops are kept.
    pub fn generate(&self) -> Result<EdgeList, RmatError> {
        self.validate()?;
        let m = self.num_edges() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            edges.push(self.edge_from(&mut rng));
        }
        if let Some(perm) = self.permutation() {
            for (u, v) in &mut edges {
                *u = perm[*u as usize];
                *v = perm[*v as usize];
            }
        }
        Ok(EdgeList {
            num_vertices: self.num_vertices(),
            edges,
            directed: false,
        })
    }
}

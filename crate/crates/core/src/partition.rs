//! `VID % Q` vertex ownership and horizontal partitioning.
//!
//! PE `i` owns every vertex `v` with `v % Q == i` and holds the complete
//! outgoing and incoming neighbor lists of those vertices, so no list is ever
//! split. Inside a subgraph the owned vertex `v` is stored at local index
//! `v / Q`; list entries stay global ids because the dispatcher routes on them.
//! PEs are grouped contiguously onto pseudo channels: PEs
//! `[j * pes_per_pg, (j + 1) * pes_per_pg)` live on PC `j`.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::Graph;
use crate::VertexId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("PE count must be at least 1")]
    NoPes,
    #[error("PC count must be at least 1")]
    NoPcs,
    #[error("{q} PEs cannot be spread evenly over {n_pc} PCs")]
    Uneven { q: usize, n_pc: usize },
}

#[inline]
pub fn owner_pe(vid: VertexId, q: usize) -> usize {
    vid as usize % q
}

/// One compressed adjacency block (offsets + entries) for the owned vertices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LocalAdjacency {
    pub offsets: Vec<u64>,
    pub edges: Vec<VertexId>,
}

impl LocalAdjacency {
    pub fn list(&self, local: usize) -> &[VertexId] {
        &self.edges[self.offsets[local] as usize..self.offsets[local + 1] as usize]
    }

    pub fn range(&self, local: usize) -> (u64, u64) {
        (self.offsets[local], self.offsets[local + 1])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    pub pe_id: usize,
    pub owned_count: usize,
    pub local_csr: LocalAdjacency,
    pub local_csc: LocalAdjacency,
}

impl Subgraph {
    /// Global id of local vertex `local`.
    pub fn global(&self, local: usize, q: usize) -> VertexId {
        (local * q + self.pe_id) as VertexId
    }

    /// Footprint in bytes: two offset arrays of u64 and two entry arrays of
    /// `sv_bits`-wide vertices.
    pub fn bytes(&self, sv_bits: u32) -> u64 {
        let offsets = (self.local_csr.offsets.len() + self.local_csc.offsets.len()) as u64 * 8;
        let entries = (self.local_csr.edges.len() + self.local_csc.edges.len()) as u64;
        offsets + entries * u64::from(sv_bits) / 8
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    pub num_pes: usize,
    pub num_pcs: usize,
    pub pes_per_pg: usize,
    pub subgraphs: Vec<Subgraph>,
    pub pe_to_pc: Vec<usize>,
}

fn local_block(n: usize, q: usize, pe: usize, offsets: &[u64], entries: &[VertexId]) -> LocalAdjacency {
    let owned: Vec<usize> = (pe..n).step_by(q).collect();
    let mut local_offsets = Vec::with_capacity(owned.len() + 1);
    local_offsets.push(0);
    let total: u64 = owned.iter().map(|&v| offsets[v + 1] - offsets[v]).sum();
    let mut edges = Vec::with_capacity(total as usize);
    for &v in &owned {
        edges.extend_from_slice(&entries[offsets[v] as usize..offsets[v + 1] as usize]);
        local_offsets.push(edges.len() as u64);
    }
    LocalAdjacency {
        offsets: local_offsets,
        edges,
    }
}

impl PartitionPlan {
    pub fn new(g: &Graph, q: usize, n_pc: usize) -> Result<Self, PartitionError> {
        if q == 0 {
            return Err(PartitionError::NoPes);
        }
        if n_pc == 0 {
            return Err(PartitionError::NoPcs);
        }
        if !q.is_multiple_of(n_pc) {
            return Err(PartitionError::Uneven { q, n_pc });
        }
        let n = g.num_vertices();
        let pes_per_pg = q / n_pc;
        let subgraphs = (0..q)
            .map(|pe| {
                let local_csr = local_block(n, q, pe, g.csr_offsets(), g.csr_edges());
                let local_csc = local_block(n, q, pe, g.csc_offsets(), g.csc_edges());
                Subgraph {
                    pe_id: pe,
                    owned_count: local_csr.offsets.len() - 1,
                    local_csr,
                    local_csc,
                }
            })
            .collect();
        Ok(Self {
            num_pes: q,
            num_pcs: n_pc,
            pes_per_pg,
            subgraphs,
            pe_to_pc: (0..q).map(|pe| pe / pes_per_pg).collect(),
        })
    }

    /// PEs hosted on pseudo channel `pc`.
    pub fn pes_on(&self, pc: usize) -> core::ops::Range<usize> {
        pc * self.pes_per_pg..(pc + 1) * self.pes_per_pg
    }

    /// Bytes of offset + edge data placed on each PC.
    pub fn placement_bytes(&self, sv_bits: u32) -> Vec<u64> {
        let mut out = vec![0u64; self.num_pcs];
        for sg in &self.subgraphs {
            out[self.pe_to_pc[sg.pe_id]] += sg.bytes(sv_bits);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeList;
    use proptest::prelude::*;

    fn graph(n: u64, edges: &[(u32, u32)]) -> Graph {
        Graph::build(&EdgeList::new(n, edges.to_vec(), true).unwrap()).unwrap()
    }

    #[test]
    fn owner_examples() {
        assert_eq!(owner_pe(5, 2), 1);
        assert_eq!(owner_pe(0, 7), 0);
        assert_eq!(owner_pe(17, 4), 1);
    }

    #[test]
    fn six_vertices_two_pes() {
        let g = graph(6, &[(0, 1), (0, 3), (1, 2), (2, 5), (3, 4), (4, 0), (5, 1), (5, 4)]);
        let plan = PartitionPlan::new(&g, 2, 1).unwrap();
        let owned: Vec<Vec<u32>> = plan
            .subgraphs
            .iter()
            .map(|sg| (0..sg.owned_count).map(|l| sg.global(l, 2)).collect())
            .collect();
        assert_eq!(owned, [vec![0, 2, 4], vec![1, 3, 5]]);
        for sg in &plan.subgraphs {
            for l in 0..sg.owned_count {
                let v = sg.global(l, 2);
                assert_eq!(sg.local_csr.list(l), g.out_neighbors(v));
                assert_eq!(sg.local_csc.list(l), g.in_neighbors(v));
            }
        }
    }

    #[test]
    fn single_pe_is_identity() {
        let g = graph(4, &[(0, 1), (1, 2), (3, 3)]);
        let plan = PartitionPlan::new(&g, 1, 1).unwrap();
        let sg = &plan.subgraphs[0];
        assert_eq!(sg.local_csr.offsets, g.csr_offsets());
        assert_eq!(sg.local_csr.edges, g.csr_edges());
        assert_eq!(sg.local_csc.offsets, g.csc_offsets());
        assert_eq!(sg.local_csc.edges, g.csc_edges());
        let full = (g.num_vertices() as u64 + 1) * 8 * 2 + g.num_edges() as u64 * 4 * 2;
        assert_eq!(plan.placement_bytes(32), [full]);
    }

    #[test]
    fn config_errors_and_degenerate_q() {
        let g = graph(3, &[(0, 1)]);
        assert_eq!(PartitionPlan::new(&g, 6, 4), Err(PartitionError::Uneven { q: 6, n_pc: 4 }));
        assert_eq!(PartitionPlan::new(&g, 0, 1), Err(PartitionError::NoPes));
        let plan = PartitionPlan::new(&g, 8, 4).unwrap();
        assert_eq!(plan.subgraphs.iter().filter(|s| s.owned_count == 0).count(), 5);
        assert_eq!(plan.pe_to_pc, [0, 0, 1, 1, 2, 2, 3, 3]);
        assert_eq!(plan.pes_on(2), 4..6);
    }

    #[test]
    fn empty_graph_places_nothing_but_offsets() {
        let g = graph(0, &[]);
        let plan = PartitionPlan::new(&g, 4, 2).unwrap();
        // Each subgraph still carries the leading zero of its two offset arrays.
        assert_eq!(plan.placement_bytes(32), [32, 32]);
        assert!(plan.subgraphs.iter().all(|s| s.owned_count == 0));
    }

    proptest! {
        // Reassemble the graph from all subgraphs and compare against the
        // original, list by list.
        #[test]
        fn reassembly_reproduces_graph(
            n in 1u64..=64,
            raw in prop::collection::vec((0u32..64, 0u32..64), 0..256),
            qi in 0usize..3,
        ) {
            let q = [2usize, 4, 8][qi];
            let edges: Vec<_> = raw.into_iter().map(|(u, v)| (u % n as u32, v % n as u32)).collect();
            let g = graph(n, &edges);
            let plan = PartitionPlan::new(&g, q, 1).unwrap();
            let mut seen = vec![0usize; n as usize];
            let (mut out_total, mut in_total) = (0, 0);
            for sg in &plan.subgraphs {
                for l in 0..sg.owned_count {
                    let v = sg.global(l, q);
                    prop_assert_eq!(owner_pe(v, q), sg.pe_id);
                    seen[v as usize] += 1;
                    prop_assert_eq!(sg.local_csr.list(l), g.out_neighbors(v));
                    prop_assert_eq!(sg.local_csc.list(l), g.in_neighbors(v));
                }
                out_total += sg.local_csr.edges.len();
                in_total += sg.local_csc.edges.len();
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            prop_assert_eq!(out_total, g.num_edges());
            prop_assert_eq!(in_total, g.num_edges());
        }
    }
}

//! Edge lists and the immutable CSR + CSC graph.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::VertexId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for {num_vertices} vertices")]
    VertexOutOfRange { vertex: u64, num_vertices: u64 },
    #[error("vertex count {0} does not fit 32-bit vertex ids")]
    TooManyVertices(u64),
    #[error("{which} offsets: {reason}")]
    BadOffsets { which: &'static str, reason: &'static str },
    #[error("{which} neighbor list of vertex {vertex} is not sorted")]
    UnsortedList { which: &'static str, vertex: u32 },
    #[error("CSC is not the transpose of CSR")]
    NotTranspose,
    #[error("operation requires a directed edge list")]
    NotDirected,
    #[error("operation requires an undirected edge list")]
    AlreadyDirected,
}

/// Raw edge list as read or generated, before CSR/CSC construction.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdgeList {
    pub num_vertices: u64,
    pub edges: Vec<(VertexId, VertexId)>,
    pub directed: bool,
}

impl EdgeList {
    pub fn new(num_vertices: u64, edges: Vec<(VertexId, VertexId)>, directed: bool) -> Result<Self, GraphError> {
        let list = Self {
            num_vertices,
            edges,
            directed,
        };
        list.validate()?;
        Ok(list)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.num_vertices > u64::from(u32::MAX) {
            return Err(GraphError::TooManyVertices(self.num_vertices));
        }
        for &(u, v) in &self.edges {
            let worst = u.max(v);
            if u64::from(worst) >= self.num_vertices {
                return Err(GraphError::VertexOutOfRange {
                    vertex: worst.into(),
                    num_vertices: self.num_vertices,
                });
            }
        }
        Ok(())
    }

    /// Turns each undirected edge into two opposite directed edges. Self
    /// loops stay a single edge.
    pub fn to_directed(&self) -> Result<EdgeList, GraphError> {
        if self.directed {
            return Err(GraphError::AlreadyDirected);
        }
        let loops = self.edges.iter().filter(|(u, v)| u == v).count();
        let mut edges = Vec::with_capacity(2 * self.edges.len() - loops);
        for &(u, v) in &self.edges {
            edges.push((u, v));
            if u != v {
                edges.push((v, u));
            }
        }
        Ok(EdgeList {
            num_vertices: self.num_vertices,
            edges,
            directed: true,
        })
    }

    /// Removes duplicate (u, v) pairs. Edge order becomes sorted.
    pub fn dedup(&mut self) {
        self.edges.sort_unstable();
        self.edges.dedup();
    }
}

/// Immutable directed graph holding both outgoing (CSR) and incoming (CSC)
/// neighbor lists. Every neighbor list is sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    csr_offsets: Vec<u64>,
    csr_edges: Vec<VertexId>,
    csc_offsets: Vec<u64>,
    csc_edges: Vec<VertexId>,
}

fn compress(n: usize, edges: &[(VertexId, VertexId)], key: impl Fn(&(VertexId, VertexId)) -> (VertexId, VertexId)) -> (Vec<u64>, Vec<VertexId>) {
    let mut offsets = vec![0u64; n + 1];
    for e in edges {
        offsets[key(e).0 as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor: Vec<u64> = offsets[..n].to_vec();
    let mut targets = vec![0; edges.len()];
    for e in edges {
        let (row, col) = key(e);
        let slot = &mut cursor[row as usize];
        targets[*slot as usize] = col;
        *slot += 1;
    }
    for v in 0..n {
        targets[offsets[v] as usize..offsets[v + 1] as usize].sort_unstable();
    }
    (offsets, targets)
}

impl Graph {
    /// Builds CSR and CSC from a directed edge list. Duplicates and self loops
    /// are kept.
    pub fn build(list: &EdgeList) -> Result<Graph, GraphError> {
        if !list.directed {
            return Err(GraphError::NotDirected);
        }
        list.validate()?;
        let n = list.num_vertices as usize;
        let (csr_offsets, csr_edges) = compress(n, &list.edges, |&(u, v)| (u, v));
        let (csc_offsets, csc_edges) = compress(n, &list.edges, |&(u, v)| (v, u));
        Ok(Graph {
            csr_offsets,
            csr_edges,
            csc_offsets,
            csc_edges,
        })
    }

    /// Reassembles a graph from its four arrays, checking every invariant:
    /// offset shape, id range, sorted lists and CSC being the exact transpose
    /// of CSR.
    pub fn from_parts(
        csr_offsets: Vec<u64>,
        csr_edges: Vec<VertexId>,
        csc_offsets: Vec<u64>,
        csc_edges: Vec<VertexId>,
    ) -> Result<Graph, GraphError> {
        let n = csr_offsets.len().checked_sub(1).ok_or(GraphError::BadOffsets {
            which: "csr",
            reason: "empty offset array",
        })?;
        if n as u64 > u64::from(u32::MAX) {
            return Err(GraphError::TooManyVertices(n as u64));
        }
        check_offsets("csr", &csr_offsets, csr_edges.len())?;
        check_offsets("csc", &csc_offsets, csc_edges.len())?;
        if csc_offsets.len() != n + 1 {
            return Err(GraphError::BadOffsets {
                which: "csc",
                reason: "length differs from csr",
            });
        }
        let g = Graph {
            csr_offsets,
            csr_edges,
            csc_offsets,
            csc_edges,
        };
        for (which, lists) in [("csr", false), ("csc", true)] {
            for v in 0..n as u32 {
                let list = if lists { g.in_neighbors(v) } else { g.out_neighbors(v) };
                if let Some(&bad) = list.iter().find(|&&x| x as usize >= n) {
                    return Err(GraphError::VertexOutOfRange {
                        vertex: bad.into(),
                        num_vertices: n as u64,
                    });
                }
                if list.windows(2).any(|w| w[0] > w[1]) {
                    return Err(GraphError::UnsortedList { which, vertex: v });
                }
            }
        }
        // CSR lists are sorted by source then target; rebuilding the transpose
        // from them yields sorted CSC lists, so equality is a direct check.
        let pairs: Vec<(VertexId, VertexId)> = g.edges().collect();
        let (off, edges) = compress(n, &pairs, |&(u, v)| (v, u));
        if off != g.csc_offsets || edges != g.csc_edges {
            return Err(GraphError::NotTranspose);
        }
        Ok(g)
    }

    pub fn num_vertices(&self) -> usize {
        self.csr_offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.csr_edges.len()
    }

    pub fn csr_offsets(&self) -> &[u64] {
        &self.csr_offsets
    }

    pub fn csr_edges(&self) -> &[VertexId] {
        &self.csr_edges
    }

    pub fn csc_offsets(&self) -> &[u64] {
        &self.csc_offsets
    }

    pub fn csc_edges(&self) -> &[VertexId] {
        &self.csc_edges
    }

    #[inline]
    pub fn out_neighbors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.csr_edges[self.csr_offsets[v] as usize..self.csr_offsets[v + 1] as usize]
    }

    #[inline]
    pub fn in_neighbors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.csc_edges[self.csc_offsets[v] as usize..self.csc_offsets[v + 1] as usize]
    }

    #[inline]
    pub fn out_degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        (self.csr_offsets[v + 1] - self.csr_offsets[v]) as usize
    }

    #[inline]
    pub fn in_degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        (self.csc_offsets[v + 1] - self.csc_offsets[v]) as usize
    }

    /// All directed edges in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        (0..self.num_vertices() as u32).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }
}

fn check_offsets(which: &'static str, offsets: &[u64], m: usize) -> Result<(), GraphError> {
    if offsets.first() != Some(&0) {
        return Err(GraphError::BadOffsets {
            which,
            reason: "first offset is not zero",
        });
    }
    if offsets.last() != Some(&(m as u64)) {
        return Err(GraphError::BadOffsets {
            which,
            reason: "last offset differs from edge count",
        });
    }
    if offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(GraphError::BadOffsets {
            which,
            reason: "offsets decrease",
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn directed(n: u64, edges: &[(u32, u32)]) -> EdgeList {
        EdgeList::new(n, edges.to_vec(), true).unwrap()
    }

    #[test]
    fn small_example_layout() {
        let g = Graph::build(&directed(3, &[(0, 1), (0, 2), (1, 2)])).unwrap();
        assert_eq!(g.csr_offsets(), [0, 2, 3, 3]);
        assert_eq!(g.csr_edges(), [1, 2, 2]);
        assert_eq!(g.csc_offsets(), [0, 0, 1, 3]);
        assert_eq!(g.csc_edges(), [0, 0, 1]);
    }

    #[test]
    fn single_vertex_no_edges() {
        let g = Graph::build(&directed(1, &[])).unwrap();
        assert_eq!(g.csr_offsets(), [0, 0]);
        assert_eq!(g.csc_offsets(), [0, 0]);
        assert_eq!(g.num_edges(), 0);
    }

    #[test]
    fn to_directed_rules() {
        let u = EdgeList::new(3, vec![(0, 1)], false).unwrap();
        assert_eq!(u.to_directed().unwrap().edges, [(0, 1), (1, 0)]);
        let l = EdgeList::new(3, vec![(2, 2)], false).unwrap();
        assert_eq!(l.to_directed().unwrap().edges, [(2, 2)]);
        let e = EdgeList::new(0, vec![], false).unwrap();
        let d = e.to_directed().unwrap();
        assert!(d.edges.is_empty() && d.directed);
        assert_eq!(d.to_directed(), Err(GraphError::AlreadyDirected));
    }

    #[test]
    fn build_rejects_undirected_and_out_of_range() {
        let u = EdgeList {
            num_vertices: 2,
            edges: vec![(0, 1)],
            directed: false,
        };
        assert_eq!(Graph::build(&u), Err(GraphError::NotDirected));
        assert!(matches!(
            EdgeList::new(2, vec![(0, 2)], true),
            Err(GraphError::VertexOutOfRange { vertex: 2, .. })
        ));
    }

    #[test]
    fn from_parts_rejects_broken_transpose() {
        let g = Graph::build(&directed(3, &[(0, 1), (0, 2), (1, 2)])).unwrap();
        let mut csc = g.csc_edges().to_vec();
        csc[0] = 1;
        let r = Graph::from_parts(g.csr_offsets().to_vec(), g.csr_edges().to_vec(), g.csc_offsets().to_vec(), csc);
        assert_eq!(r, Err(GraphError::NotTranspose));
        let r = Graph::from_parts(vec![1, 1], vec![0], vec![0, 1], vec![0]);
        assert!(matches!(r, Err(GraphError::BadOffsets { .. })));
    }

    #[test]
    fn dedup_keeps_loops() {
        let mut e = directed(3, &[(1, 2), (0, 1), (1, 2), (2, 2), (2, 2)]);
        e.dedup();
        assert_eq!(e.edges, [(0, 1), (1, 2), (2, 2)]);
    }

    fn arb_edges() -> impl Strategy<Value = (u64, Vec<(u32, u32)>)> {
        (1u64..=32).prop_flat_map(|n| {
            let v = 0..n as u32;
            (Just(n), prop::collection::vec((v.clone(), v), 0..=128))
        })
    }

    proptest! {
        // CSC against a brute-force transpose: count multiplicities cell by cell.
        #[test]
        fn csc_is_brute_force_transpose((n, edges) in arb_edges()) {
            let g = Graph::build(&directed(n, &edges)).unwrap();
            let n = n as usize;
            let mut adj = vec![vec![0usize; n]; n];
            for &(u, v) in &edges {
                adj[u as usize][v as usize] += 1;
            }
            for v in 0..n {
                let mut expected = Vec::new();
                for u in 0..n {
                    expected.extend(core::iter::repeat_n(u as u32, adj[u][v]));
                }
                prop_assert_eq!(g.in_neighbors(v as u32), &expected[..]);
                let mut out = Vec::new();
                for w in 0..n {
                    out.extend(core::iter::repeat_n(w as u32, adj[v][w]));
                }
                prop_assert_eq!(g.out_neighbors(v as u32), &out[..]);
                prop_assert_eq!(g.out_degree(v as u32), out.len());
            }
            let rebuilt = Graph::from_parts(
                g.csr_offsets().to_vec(),
                g.csr_edges().to_vec(),
                g.csc_offsets().to_vec(),
                g.csc_edges().to_vec(),
            );
            prop_assert_eq!(rebuilt.as_ref(), Ok(&g));
        }
    }
}

//! Byte addresses of offset and neighbor-list data across pseudo channels.
//!
//! Addresses are flat: PC `j` covers `[j * cap, (j + 1) * cap)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::bfs::Mode;
use crate::graph::Graph;
use crate::partition::{LocalAdjacency, PartitionPlan};
use crate::sim::{Placement, SimConfig, SimError};

const OFFSET_BYTES: u64 = 8;

/// Bases of one adjacency block: offsets then entries.
#[derive(Debug, Clone, Copy, Default)]
struct Block {
    offsets: u64,
    entries: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    placement: Placement,
    cap: u64,
    dw: u64,
    sv: u64,
    max_burst: u64,
    /// Per PE, `[csr, csc]` (partitioned only).
    pe_blocks: Vec<[Block; 2]>,
    /// `[csr, csc]` for the global arrays (baseline only).
    global: [Block; 2],
    placed: Vec<u64>,
}

/// One edge-list read command: list positions `[lo, hi)` at a PC-local
/// address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Chunk {
    pub pc: usize,
    pub addr: u64,
    pub len: u64,
    pub lo: u32,
    pub hi: u32,
}

fn dir(mode: Mode) -> usize {
    match mode {
        Mode::Push => 0,
        Mode::Pull => 1,
    }
}

impl Layout {
    pub fn new(cfg: &SimConfig, g: &Graph, plan: &PartitionPlan) -> Result<Self, SimError> {
        let cap = cfg.pc_capacity_bytes;
        let sv = cfg.sv_bytes();
        let mut placed = vec![0u64; cfg.n_pc];
        let mut pe_blocks = vec![[Block::default(); 2]; plan.num_pes];
        let mut global = [Block::default(); 2];
        match cfg.placement {
            Placement::Partitioned => {
                for (pc, used) in placed.iter_mut().enumerate() {
                    for pe in plan.pes_on(pc) {
                        let sg = &plan.subgraphs[pe];
                        for (d, adj) in [&sg.local_csr, &sg.local_csc].into_iter().enumerate() {
                            let offsets = pc as u64 * cap + *used;
                            *used += adj.offsets.len() as u64 * OFFSET_BYTES;
                            let entries = pc as u64 * cap + *used;
                            *used += adj.edges.len() as u64 * sv;
                            pe_blocks[pe][d] = Block { offsets, entries };
                        }
                    }
                    if *used > cap {
                        return Err(SimError::Capacity {
                            pc,
                            bytes: *used,
                            capacity: cap,
                        });
                    }
                }
            }
            Placement::Baseline => {
                let n = g.num_vertices() as u64;
                let m = g.num_edges() as u64;
                let mut at = 0;
                for block in &mut global {
                    block.offsets = at;
                    at += (n + 1) * OFFSET_BYTES;
                    block.entries = at;
                    at += m * sv;
                }
                if at > cap * cfg.n_pc as u64 {
                    return Err(SimError::Capacity {
                        pc: cfg.n_pc - 1,
                        bytes: at,
                        capacity: cap * cfg.n_pc as u64,
                    });
                }
                for (pc, used) in placed.iter_mut().enumerate() {
                    *used = at.saturating_sub(pc as u64 * cap).min(cap);
                }
            }
        }
        Ok(Self {
            placement: cfg.placement,
            cap,
            dw: cfg.dw_bytes(),
            sv,
            max_burst: u64::from(cfg.max_burst_beats),
            pe_blocks,
            global,
            placed,
        })
    }

    pub fn placed_bytes(&self) -> &[u64] {
        &self.placed
    }

    fn split(&self, flat: u64) -> (usize, u64) {
        ((flat / self.cap) as usize, flat % self.cap)
    }

    /// Flat address of the first list entry and of the offset word.
    fn bases(&self, g: &Graph, adj: &LocalAdjacency, pe: usize, mode: Mode, local: usize, v: usize) -> (u64, u64) {
        let d = dir(mode);
        match self.placement {
            Placement::Partitioned => {
                let b = self.pe_blocks[pe][d];
                (b.offsets + local as u64 * OFFSET_BYTES, b.entries + adj.offsets[local] * self.sv)
            }
            Placement::Baseline => {
                let b = self.global[d];
                let offsets = if d == 0 { g.csr_offsets() } else { g.csc_offsets() };
                (b.offsets + v as u64 * OFFSET_BYTES, b.entries + offsets[v] * self.sv)
            }
        }
    }

    /// PC and PC-local address of the offset word for `v`.
    pub fn offset_addr(&self, g: &Graph, adj: &LocalAdjacency, pe: usize, mode: Mode, local: usize, v: usize) -> (usize, u64) {
        self.split(self.bases(g, adj, pe, mode, local, v).0)
    }

    /// Next read command for list positions starting at `pos`: at most
    /// `max_burst_beats` DW-aligned beats, never crossing a PC boundary.
    #[allow(clippy::too_many_arguments)]
    pub fn chunk(&self, g: &Graph, adj: &LocalAdjacency, pe: usize, mode: Mode, local: usize, v: usize, pos: u32, deg: u32) -> Chunk {
        let start = self.bases(g, adj, pe, mode, local, v).1;
        let from = start + u64::from(pos) * self.sv;
        let list_end = start + u64::from(deg) * self.sv;
        let (pc, addr) = self.split(from);
        let beat_end = (addr / self.dw + self.max_burst) * self.dw;
        let end = list_end.min(pc as u64 * self.cap + beat_end.min(self.cap));
        let hi = ((end - start) / self.sv) as u32;
        Chunk {
            pc,
            addr,
            len: end - from,
            lo: pos,
            hi,
        }
    }

    /// List position just past the last entry covered by beat `index`.
    pub fn beat_end(&self, c: &Chunk, index: u32) -> u32 {
        let end = ((c.addr / self.dw + u64::from(index) + 1) * self.dw).min(c.addr + c.len);
        c.lo + ((end - c.addr) / self.sv) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeList;

    fn setup(placement: Placement, cap: u64) -> (SimConfig, Graph, PartitionPlan) {
        let mut cfg = SimConfig::with_shape(2, 1);
        cfg.placement = placement;
        cfg.pc_capacity_bytes = cap;
        cfg.max_burst_beats = 2;
        let edges: Vec<_> = (1..40).map(|v| (0, v)).collect();
        let g = Graph::build(&EdgeList::new(40, edges, true).unwrap()).unwrap();
        let plan = PartitionPlan::new(&g, 2, 2).unwrap();
        (cfg, g, plan)
    }

    #[test]
    fn partitioned_chunks_stay_on_home_pc() {
        let (cfg, g, plan) = setup(Placement::Partitioned, 1 << 20);
        let l = Layout::new(&cfg, &g, &plan).unwrap();
        // PE 0 owns vertex 0 with 39 out-edges; DW is 8 bytes (2 entries).
        let adj = &plan.subgraphs[0].local_csr;
        let (pc, off) = l.offset_addr(&g, adj, 0, Mode::Push, 0, 0);
        assert_eq!((pc, off), (0, 0));
        let mut pos = 0;
        let mut chunks = Vec::new();
        while pos < 39 {
            let c = l.chunk(&g, adj, 0, Mode::Push, 0, 0, pos, 39);
            assert_eq!(c.pc, 0);
            pos = c.hi;
            chunks.push(c);
        }
        // Entries start after 21 offsets (168 bytes), 8-byte aligned.
        assert_eq!(chunks[0].addr, 168);
        assert!(chunks.iter().all(|c| c.hi - c.lo <= 4));
        assert_eq!(chunks.len(), 10);
        assert_eq!(l.beat_end(&chunks[0], 0), 2);
        assert_eq!(l.beat_end(&chunks[0], 1), 4);
        let pc1 = &plan.subgraphs[1].local_csc;
        assert_eq!(l.offset_addr(&g, pc1, 1, Mode::Pull, 0, 1).0, 1);
    }

    #[test]
    fn baseline_spills_across_pcs() {
        let (cfg, g, plan) = setup(Placement::Baseline, 512);
        let l = Layout::new(&cfg, &g, &plan).unwrap();
        // 41 offsets * 8 = 328 bytes, then 39 * 4 = 156 bytes of CSR entries,
        // then CSC offsets from 484.
        assert_eq!(l.placed_bytes(), [512, 2 * 328 + 2 * 156 - 512]);
        let adj = &plan.subgraphs[1].local_csc;
        let (pc, addr) = l.offset_addr(&g, adj, 1, Mode::Pull, 2, 5);
        assert_eq!((pc, addr), (1, 484 + 40 - 512));
        let c = l.chunk(&g, adj, 1, Mode::Pull, 2, 5, 0, 1);
        assert_eq!(c.pc, 1);
        // Vertex 0 has no in-edges, so vertex 5's single parent is CSC entry 4.
        assert_eq!(c.addr, 484 + 328 - 512 + 4 * 4);
        let err = Layout::new(&setup(Placement::Baseline, 256).0, &g, &plan).unwrap_err();
        assert!(matches!(err, SimError::Capacity { .. }));
    }

    #[test]
    fn chunks_split_at_pc_boundary() {
        let (mut cfg, g, plan) = setup(Placement::Baseline, 336);
        cfg.n_pc = 3;
        let l = Layout::new(&cfg, &g, &plan).unwrap();
        let adj = &plan.subgraphs[0].local_csr;
        // CSR entries start at 328; PC 0 ends at 336, two entries later.
        let c = l.chunk(&g, adj, 0, Mode::Push, 0, 0, 0, 39);
        assert_eq!((c.pc, c.addr, c.lo, c.hi), (0, 328, 0, 2));
        let c = l.chunk(&g, adj, 0, Mode::Push, 0, 0, 2, 39);
        assert_eq!((c.pc, c.addr, c.lo, c.hi), (1, 0, 2, 6));
    }

    #[test]
    fn partitioned_overflow_is_reported() {
        let (cfg, g, plan) = setup(Placement::Partitioned, 64);
        assert!(matches!(Layout::new(&cfg, &g, &plan), Err(SimError::Capacity { pc: 0, .. })));
    }
}

//! Cycle-approximate simulator of the accelerator: one HBM reader per
//! processing group (PG), hybrid PEs with P1 (workload preparation), P2
//! (neighbor checking) and P3 (result writing) stages, the vertex dispatcher
//! and one throughput/latency model per pseudo channel (PC).
//!
//! Each cycle runs, in order: channels deliver beats, readers unpack beats
//! into the dispatcher and issue one read command each, the fabrics advance,
//! and every PE spends its bitmap budget. Every bitmap is double-pumped and
//! allows two operations per PE per cycle.
//!
//! Push mode: P1 scans the current frontier and requests each active vertex's
//! out-list; entries travel to the child's owner where P2 tests the visited
//! map and P3 marks new vertices.
//!
//! Pull mode: P1 scans the visited map and requests each unvisited vertex's
//! in-list, one burst at a time. Parents travel to their owner where P2 tests
//! the current frontier. A hit is sent over a separate result fabric to the
//! child's owner for P3 to write, and the child's remaining bursts are not
//! read. Parents already in flight for a found child are dropped without a
//! bitmap access.

mod config;
mod hbm;
mod layout;
mod report;

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

pub use config::{Placement, SimConfig};
pub use hbm::{hbm_read, Beat, HbmChannel, SUBTICKS};
pub use report::{IterationReport, MessageCounters, SimReport};

use crate::bfs::{decide_mode, traversed_edges, BfsError, BfsState, IterationStats, Mode};
use crate::bitmap::Bitmap;
use crate::crossbar::{CrossbarError, DispatchMessage, Fabric, MessageKind, Sink};
use crate::graph::Graph;
use crate::partition::{LocalAdjacency, PartitionError, PartitionPlan};
use crate::{Level, VertexId};
use layout::{Chunk, Layout};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Crossbar(#[from] CrossbarError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Bfs(#[from] BfsError),
    #[error("read of {len} bytes at {addr:#x} lies outside the data placed on PC {pc}")]
    AddressFault { pc: usize, addr: u64, len: u64 },
    #[error("PC {pc} needs {bytes} bytes but holds {capacity}")]
    Capacity { pc: usize, bytes: u64, capacity: u64 },
    #[error("no progress possible at cycle {cycle} (level {level})")]
    Deadlock { cycle: u64, level: Level },
}

/// Result of [`run_simulation`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub report: SimReport,
    pub levels: Vec<Level>,
    pub counters: MessageCounters,
    /// Bytes read from each PC during each iteration.
    pub per_iteration_pc_bytes: Vec<Vec<u64>>,
}

const NO_TICKET: u32 = u32::MAX;
const BITMAP_OPS: u32 = 2;

#[derive(Debug, Clone, Copy)]
enum Slot {
    Free,
    Offset {
        pe: usize,
        local: usize,
    },
    Edges {
        pe: usize,
        local: usize,
        chunk: Chunk,
        cursor: u32,
        ticket: u32,
    },
}

/// Pull-mode bookkeeping for one unvisited vertex's in-list.
#[derive(Debug, Clone, Copy)]
struct Ticket {
    reader: usize,
    pe: usize,
    local: usize,
    next: u32,
    deg: u32,
    unresolved: u32,
}

#[derive(Debug, Clone, Copy)]
struct PendingRead {
    pe: usize,
    local: usize,
    chunk: Chunk,
    ticket: u32,
}

#[derive(Debug, Default)]
struct Reader {
    pc: usize,
    /// Offset lookups queued by P1 as `(pe, local index)`.
    requests: VecDeque<(usize, usize)>,
    pending: VecDeque<PendingRead>,
    staging: VecDeque<DispatchMessage>,
    in_use: usize,
}

#[derive(Debug)]
struct Pe {
    pc: usize,
    owned: usize,
    cursor: usize,
    inbox: Vec<VecDeque<DispatchMessage>>,
    lane: usize,
    writes: VecDeque<VertexId>,
}

struct InboxSink<'a> {
    pes: &'a mut [Pe],
    lane: usize,
    depth: usize,
}

impl Sink for InboxSink<'_> {
    fn can_accept(&self, port: usize) -> bool {
        self.pes[port].inbox[self.lane].len() < self.depth
    }
    fn accept(&mut self, port: usize, msg: DispatchMessage) {
        self.pes[port].inbox[self.lane].push_back(msg);
    }
}

struct WriteSink<'a> {
    pes: &'a mut [Pe],
    depth: usize,
}

impl Sink for WriteSink<'_> {
    fn can_accept(&self, port: usize) -> bool {
        self.pes[port].writes.len() < self.depth
    }
    fn accept(&mut self, port: usize, msg: DispatchMessage) {
        self.pes[port].writes.push_back(msg.vid);
    }
}

struct Machine<'a> {
    cfg: &'a SimConfig,
    g: &'a Graph,
    plan: &'a PartitionPlan,
    layout: Layout,
    q: usize,
    state: BfsState,
    found: Bitmap,
    channels: Vec<HbmChannel>,
    readers: Vec<Reader>,
    pes: Vec<Pe>,
    fabrics: Vec<Fabric>,
    results: Fabric,
    slots: Vec<Slot>,
    free_slots: Vec<u32>,
    tickets: Vec<Ticket>,
    free_tickets: Vec<u32>,
    live_tickets: usize,
    counters: MessageCounters,
    iter: IterationStats,
    now: u64,
}

fn adjacency(plan: &PartitionPlan, pe: usize, mode: Mode) -> &LocalAdjacency {
    let sg = &plan.subgraphs[pe];
    match mode {
        Mode::Push => &sg.local_csr,
        Mode::Pull => &sg.local_csc,
    }
}

impl<'a> Machine<'a> {
    fn new(cfg: &'a SimConfig, g: &'a Graph, plan: &'a PartitionPlan, root: VertexId) -> Result<Self, SimError> {
        let layout = Layout::new(cfg, g, plan)?;
        let topo = cfg.topology()?;
        let channels = (0..cfg.n_pc)
            .map(|pc| {
                HbmChannel::new(
                    pc,
                    cfg.dw_bytes(),
                    cfg.freq_hz(),
                    cfg.bw_max_bytes_per_s(),
                    cfg.hbm_latency_cycles,
                    cfg.cross_pc_penalty,
                    layout.placed_bytes()[pc],
                )
            })
            .collect();
        let pes = (0..plan.num_pes)
            .map(|pe| Pe {
                pc: plan.pe_to_pc[pe],
                owned: plan.subgraphs[pe].owned_count,
                cursor: 0,
                inbox: vec![VecDeque::new(); cfg.dispatch_lanes],
                lane: 0,
                writes: VecDeque::new(),
            })
            .collect();
        Ok(Self {
            cfg,
            g,
            plan,
            layout,
            q: plan.num_pes,
            state: BfsState::new(g.num_vertices(), root)?,
            found: Bitmap::new(g.num_vertices()),
            channels,
            readers: (0..cfg.n_pc).map(|pc| Reader { pc, ..Reader::default() }).collect(),
            pes,
            fabrics: (0..cfg.dispatch_lanes).map(|_| Fabric::new(topo.clone())).collect(),
            // One message per PE per cycle: a single P2 hit at most.
            results: Fabric::new(topo),
            slots: Vec::new(),
            free_slots: Vec::new(),
            tickets: Vec::new(),
            free_tickets: Vec::new(),
            live_tickets: 0,
            counters: MessageCounters::default(),
            iter: IterationStats::empty(Mode::Push),
            now: 0,
        })
    }

    #[inline]
    fn global(&self, pe: usize, local: usize) -> usize {
        local * self.q + pe
    }

    fn alloc_slot(&mut self, slot: Slot) -> u32 {
        match self.free_slots.pop() {
            Some(t) => {
                self.slots[t as usize] = slot;
                t
            }
            None => {
                self.slots.push(slot);
                (self.slots.len() - 1) as u32
            }
        }
    }

    fn release_slot(&mut self, tag: u32, reader: usize) {
        self.slots[tag as usize] = Slot::Free;
        self.free_slots.push(tag);
        self.readers[reader].in_use -= 1;
    }

    fn alloc_ticket(&mut self, t: Ticket) -> u32 {
        self.live_tickets += 1;
        match self.free_tickets.pop() {
            Some(id) => {
                self.tickets[id as usize] = t;
                id
            }
            None => {
                self.tickets.push(t);
                (self.tickets.len() - 1) as u32
            }
        }
    }

    fn on_beat(&mut self, b: Beat, mode: Mode) {
        match self.slots[b.tag as usize] {
            Slot::Free => unreachable!("beat for a free slot"),
            Slot::Offset { pe, local } => {
                self.release_slot(b.tag, b.reader);
                let adj = adjacency(self.plan, pe, mode);
                let (lo, hi) = adj.range(local);
                let deg = (hi - lo) as u32;
                if deg == 0 {
                    return;
                }
                let v = self.global(pe, local);
                match mode {
                    Mode::Push => {
                        let mut pos = 0;
                        while pos < deg {
                            let chunk = self.layout.chunk(self.g, adj, pe, mode, local, v, pos, deg);
                            pos = chunk.hi;
                            self.readers[b.reader].pending.push_back(PendingRead {
                                pe,
                                local,
                                chunk,
                                ticket: NO_TICKET,
                            });
                        }
                    }
                    Mode::Pull => {
                        let chunk = self.layout.chunk(self.g, adj, pe, mode, local, v, 0, deg);
                        let ticket = self.alloc_ticket(Ticket {
                            reader: b.reader,
                            pe,
                            local,
                            next: chunk.hi,
                            deg,
                            unresolved: chunk.hi - chunk.lo,
                        });
                        self.readers[b.reader].pending.push_back(PendingRead { pe, local, chunk, ticket });
                    }
                }
            }
            Slot::Edges {
                pe,
                local,
                chunk,
                cursor,
                ticket,
            } => {
                let end = if b.last { chunk.hi } else { self.layout.beat_end(&chunk, b.index) };
                let adj = adjacency(self.plan, pe, mode);
                let base = adj.offsets[local] as usize;
                let child = self.global(pe, local) as VertexId;
                let staging = &mut self.readers[b.reader].staging;
                for &vid in &adj.edges[base + cursor as usize..base + end as usize] {
                    let kind = match mode {
                        Mode::Push => MessageKind::ChildCheck,
                        Mode::Pull => MessageKind::ParentCheck { child, ticket },
                    };
                    staging.push_back(DispatchMessage::new(vid, kind));
                }
                self.counters.entries_read += u64::from(end - cursor);
                if b.last {
                    self.release_slot(b.tag, b.reader);
                } else if let Slot::Edges { cursor, .. } = &mut self.slots[b.tag as usize] {
                    *cursor = end;
                }
            }
        }
    }

    /// Moves staged entries into the reader's dispatcher inputs, in order,
    /// stopping at the first full FIFO.
    fn unpack(&mut self, r: usize) -> bool {
        let lanes = self.fabrics.len();
        let base = self.readers[r].pc * self.cfg.pes_per_pc;
        let mut moved = false;
        for s in 0..self.cfg.pes_per_pc * lanes {
            let Some(&msg) = self.readers[r].staging.front() else { break };
            if self.fabrics[s % lanes].inject(base + s / lanes, msg).is_err() {
                break;
            }
            self.readers[r].staging.pop_front();
            moved = true;
        }
        moved
    }

    fn issue(&mut self, r: usize, mode: Mode) -> Result<bool, SimError> {
        if self.readers[r].in_use >= self.cfg.reader_slots {
            return Ok(false);
        }
        let home = self.readers[r].pc;
        if let Some(p) = self.readers[r].pending.pop_front() {
            let tag = self.alloc_slot(Slot::Edges {
                pe: p.pe,
                local: p.local,
                chunk: p.chunk,
                cursor: p.chunk.lo,
                ticket: p.ticket,
            });
            self.channels[p.chunk.pc].issue(self.now, r, tag, p.chunk.addr, p.chunk.len, p.chunk.pc != home)?;
            self.counters.edge_reads += 1;
        } else if let Some((pe, local)) = self.readers[r].requests.pop_front() {
            let v = self.global(pe, local);
            let adj = adjacency(self.plan, pe, mode);
            let (pc, addr) = self.layout.offset_addr(self.g, adj, pe, mode, local, v);
            let tag = self.alloc_slot(Slot::Offset { pe, local });
            // An offset lookup costs one beat whatever the data width.
            self.channels[pc].issue(self.now, r, tag, addr, 1, pc != home)?;
            self.counters.offset_reads += 1;
        } else {
            return Ok(false);
        }
        self.readers[r].in_use += 1;
        Ok(true)
    }

    /// One P2 parent check has finished for `t`; issue the next burst or
    /// retire the ticket.
    fn resolve(&mut self, t: u32) {
        let tk = &mut self.tickets[t as usize];
        tk.unresolved -= 1;
        if tk.unresolved > 0 {
            return;
        }
        let tk = *tk;
        let child = self.global(tk.pe, tk.local);
        if self.found.get(child) || tk.next >= tk.deg {
            self.free_tickets.push(t);
            self.live_tickets -= 1;
            return;
        }
        let adj = adjacency(self.plan, tk.pe, Mode::Pull);
        let chunk = self.layout.chunk(self.g, adj, tk.pe, Mode::Pull, tk.local, child, tk.next, tk.deg);
        let slot = &mut self.tickets[t as usize];
        slot.next = chunk.hi;
        slot.unresolved = chunk.hi - chunk.lo;
        self.readers[tk.reader].pending.push_back(PendingRead {
            pe: tk.pe,
            local: tk.local,
            chunk,
            ticket: t,
        });
    }

    fn step_pe(&mut self, i: usize, mode: Mode) -> bool {
        let depth = self.cfg.pe_queue_depth;
        let mut visited_ops = BITMAP_OPS;
        let mut frontier_ops = BITMAP_OPS;
        let mut progress = false;

        // P3 writes the visited map (and the next frontier alongside it).
        while visited_ops > 0 {
            let Some(v) = self.pes[i].writes.pop_front() else { break };
            visited_ops -= 1;
            progress = true;
            if !self.state.visited_map.get(v as usize) {
                self.state.activate(v as usize);
                self.iter.vertices_activated += 1;
            }
        }

        // P2
        let lanes = self.pes[i].inbox.len();
        loop {
            let start = self.pes[i].lane;
            let Some(lane) = (0..lanes).map(|k| (start + k) % lanes).find(|&l| !self.pes[i].inbox[l].is_empty()) else {
                break;
            };
            let msg = self.pes[i].inbox[lane][0];
            match msg.kind {
                MessageKind::ChildCheck => {
                    if visited_ops == 0 || self.pes[i].writes.len() >= depth {
                        break;
                    }
                    visited_ops -= 1;
                    self.iter.edges_examined += 1;
                    if self.state.visited_map.get(msg.vid as usize) {
                        self.counters.p2_dropped += 1;
                    } else {
                        self.pes[i].writes.push_back(msg.vid);
                        self.counters.p2_passed += 1;
                    }
                }
                MessageKind::ParentCheck { child, ticket } => {
                    if self.found.get(child as usize) {
                        self.counters.p2_dropped += 1;
                        self.counters.p2_cancelled += 1;
                    } else {
                        if frontier_ops == 0 {
                            break;
                        }
                        let hit = self.state.current_frontier.get(msg.vid as usize);
                        if hit && !self.results.can_inject(i, child) {
                            break;
                        }
                        frontier_ops -= 1;
                        self.iter.edges_examined += 1;
                        if hit {
                            self.found.set(child as usize);
                            let sent = self.results.inject(i, DispatchMessage::new(child, MessageKind::ParentResult));
                            debug_assert!(sent.is_ok());
                            self.counters.p2_passed += 1;
                        } else {
                            self.counters.p2_dropped += 1;
                        }
                    }
                    self.resolve(ticket);
                }
                MessageKind::ParentResult => unreachable!("results use their own fabric"),
            }
            self.pes[i].inbox[lane].pop_front();
            self.pes[i].lane = (lane + 1) % lanes;
            progress = true;
        }

        // P1 scans the current frontier (push) or the visited map (pull).
        let scan_ops = match mode {
            Mode::Push => &mut frontier_ops,
            Mode::Pull => &mut visited_ops,
        };
        let pc = self.pes[i].pc;
        while *scan_ops > 0 && self.pes[i].cursor < self.pes[i].owned {
            let local = self.pes[i].cursor;
            let v = self.global(i, local);
            let wanted = match mode {
                Mode::Push => self.state.current_frontier.get(v),
                Mode::Pull => !self.state.visited_map.get(v),
            };
            if wanted {
                if self.readers[pc].requests.len() >= depth {
                    break;
                }
                self.readers[pc].requests.push_back((i, local));
                self.iter.active_or_unvisited_count += 1;
                self.iter.offset_words_read += 1;
            }
            self.pes[i].cursor += 1;
            *scan_ops -= 1;
            progress = true;
        }
        progress
    }

    /// Returns (progress made, a channel stalled on a full reader).
    fn cycle(&mut self, mode: Mode) -> Result<(bool, bool), SimError> {
        let mut progress = false;
        let mut blocked = false;
        let epb = self.cfg.entries_per_beat();
        let room = self.cfg.response_buffer_beats * epb;
        for c in 0..self.channels.len() {
            if self.channels[c].is_idle() {
                continue;
            }
            let readers = &self.readers;
            let mut refused = false;
            let beat = self.channels[c].poll(self.now, |r| {
                let ok = readers[r].staging.len() + epb <= room;
                refused = !ok;
                ok
            });
            blocked |= refused;
            if let Some(b) = beat {
                progress = true;
                self.on_beat(b, mode);
            }
        }
        for r in 0..self.readers.len() {
            progress |= self.unpack(r);
            progress |= self.issue(r, mode)?;
        }
        let depth = self.cfg.pe_queue_depth;
        for (lane, fabric) in self.fabrics.iter_mut().enumerate() {
            let mut sink = InboxSink {
                pes: &mut self.pes,
                lane,
                depth,
            };
            progress |= fabric.step(&mut sink) > 0;
        }
        let mut sink = WriteSink {
            pes: &mut self.pes,
            depth,
        };
        progress |= self.results.step(&mut sink) > 0;
        for i in 0..self.pes.len() {
            progress |= self.step_pe(i, mode);
        }
        Ok((progress, blocked))
    }

    fn quiescent(&self) -> bool {
        self.channels.iter().all(HbmChannel::is_idle)
            && self.fabrics.iter().all(Fabric::is_empty)
            && self.results.is_empty()
            && self
                .readers
                .iter()
                .all(|r| r.in_use == 0 && r.requests.is_empty() && r.pending.is_empty() && r.staging.is_empty())
            && self
                .pes
                .iter()
                .all(|p| p.cursor == p.owned && p.writes.is_empty() && p.inbox.iter().all(VecDeque::is_empty))
    }

    fn iteration(&mut self, mode: Mode) -> Result<IterationStats, SimError> {
        self.iter = IterationStats::empty(mode);
        for pe in &mut self.pes {
            pe.cursor = 0;
        }
        if mode == Mode::Pull {
            self.found.clear_all();
        }
        loop {
            let (progress, blocked) = self.cycle(mode)?;
            self.now += 1;
            if self.quiescent() {
                break;
            }
            if !progress {
                let next = self.channels.iter().filter_map(HbmChannel::next_event).min();
                match next {
                    Some(t) if !blocked => self.now = self.now.max(t),
                    _ => {
                        return Err(SimError::Deadlock {
                            cycle: self.now,
                            level: self.state.bfs_level,
                        })
                    }
                }
            }
        }
        debug_assert_eq!(self.live_tickets, 0);
        Ok(self.iter)
    }

    fn pc_bytes(&self) -> Vec<u64> {
        self.channels.iter().map(HbmChannel::bytes_read).collect()
    }
}

/// Runs a level-synchronous BFS from `root` on the modeled hardware.
pub fn run_simulation(cfg: &SimConfig, g: &Graph, root: VertexId) -> Result<SimRun, SimError> {
    cfg.validate()?;
    let plan = PartitionPlan::new(g, cfg.num_pes(), cfg.n_pc)?;
    let mut m = Machine::new(cfg, g, &plan, root)?;
    let freq = cfg.freq_hz();
    let mut per_iteration = Vec::new();
    let mut per_iteration_pc_bytes = Vec::new();
    let mut prev: Option<IterationStats> = None;
    while m.state.current_frontier.any() {
        let mode = decide_mode(&cfg.mode_policy, prev.as_ref(), g, &m.state);
        let before = m.pc_bytes();
        let start = m.now;
        let stats = m.iteration(mode)?;
        let cycles = m.now - start;
        let delta: Vec<u64> = m.pc_bytes().iter().zip(&before).map(|(a, b)| a - b).collect();
        let bytes_read = delta.iter().sum();
        per_iteration.push(IterationReport {
            level: m.state.bfs_level,
            stats,
            cycles,
            bytes_read,
            bandwidth_gbps: report::gbps(bytes_read, cycles, freq),
        });
        per_iteration_pc_bytes.push(delta);
        m.state.advance();
        prev = Some(stats);
    }

    let mut counters = m.counters;
    counters.injected = m.fabrics.iter().map(Fabric::injected).sum();
    counters.delivered = m.fabrics.iter().map(Fabric::delivered).sum();
    counters.results_sent = m.results.injected();
    counters.results_delivered = m.results.delivered();

    let per_pc_bytes_read = m.pc_bytes();
    let total_bytes: u64 = per_pc_bytes_read.iter().sum();
    let levels = m.state.level;
    let traversed = traversed_edges(g, &levels);
    let wall_time_s = m.now as f64 / freq;
    let gteps = if m.now == 0 { 0.0 } else { traversed as f64 / wall_time_s / 1e9 };
    Ok(SimRun {
        report: SimReport {
            total_cycles: m.now,
            wall_time_s,
            traversed_edges: traversed,
            gteps,
            per_pc_bytes_read,
            per_iteration,
            aggregated_bandwidth_gbps: report::gbps(total_bytes, m.now, freq),
        },
        levels,
        counters,
        per_iteration_pc_bytes,
    })
}

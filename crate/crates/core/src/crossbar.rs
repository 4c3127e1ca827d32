//! Vertex dispatch fabrics: an `N x N` full crossbar or its multi-layer
//! equivalent built from `N = C1 * C2 * ... * Ck`.
//!
//! Layer `l` holds `N / Cl` switches of size `Cl x Cl`, each with one FIFO per
//! input/output pair. Let `P(l) = C1 * ... * Cl`. Between layers a message
//! sits at a position `p = g + P(l) * r` where `g = vid % P(l)` is its group
//! so far. Layer `l + 1` forwards it to output digit `(vid / P(l)) % C(l+1)`,
//! so after the last layer `p = vid % N`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::VertexId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CrossbarError {
    #[error("crossbar needs at least one port")]
    NoPorts,
    #[error("factors {factors:?} multiply to {product}, expected {n_ports}")]
    FactorProduct {
        factors: Vec<usize>,
        product: usize,
        n_ports: usize,
    },
    #[error("every factor must be at least 2")]
    FactorTooSmall,
    #[error("FIFO depth must be at least 1")]
    ZeroDepth,
    #[error("input port {port} out of range for {n_ports} ports")]
    PortOutOfRange { port: usize, n_ports: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossbarTopology {
    n_ports: usize,
    factors: Vec<usize>,
    fifo_depth: usize,
}

/// One switch traversal on a message's path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hop {
    pub layer: usize,
    pub switch: usize,
    pub output_port: usize,
}

/// LUT cost of the dispatcher plus PEs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutEstimate {
    pub fifo_luts: f64,
    pub pe_luts: f64,
    pub total: f64,
    /// Whether the closed form `k * N^(1/k + 1)` was used for the FIFO count.
    pub closed_form: bool,
}

impl LutEstimate {
    pub fn feasible(&self, r_limit: f64) -> bool {
        self.total < r_limit
    }
}

impl CrossbarTopology {
    pub const DEFAULT_FIFO_DEPTH: usize = 16;

    pub fn new(n_ports: usize, factors: Vec<usize>, fifo_depth: usize) -> Result<Self, CrossbarError> {
        if n_ports == 0 {
            return Err(CrossbarError::NoPorts);
        }
        if fifo_depth == 0 {
            return Err(CrossbarError::ZeroDepth);
        }
        // N = 1 is the one case where a single factor of 1 is allowed.
        let factors = if factors.is_empty() { vec![n_ports] } else { factors };
        if n_ports > 1 && factors.iter().any(|&c| c < 2) {
            return Err(CrossbarError::FactorTooSmall);
        }
        let product = factors.iter().try_fold(1usize, |a, &c| a.checked_mul(c)).unwrap_or(0);
        if product != n_ports {
            return Err(CrossbarError::FactorProduct {
                factors,
                product,
                n_ports,
            });
        }
        Ok(Self {
            n_ports,
            factors,
            fifo_depth,
        })
    }

    pub fn full(n_ports: usize, fifo_depth: usize) -> Result<Self, CrossbarError> {
        Self::new(n_ports, vec![n_ports], fifo_depth)
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn fifo_depth(&self) -> usize {
        self.fifo_depth
    }

    pub fn layers(&self) -> usize {
        self.factors.len()
    }

    pub fn switches_in_layer(&self, layer: usize) -> usize {
        self.n_ports / self.factors[layer]
    }

    /// `sum over layers of (N / C) * C^2`.
    pub fn fifo_count(&self) -> u64 {
        self.factors
            .iter()
            .map(|&c| (self.n_ports / c) as u64 * (c * c) as u64)
            .sum()
    }

    pub fn route_path(&self, vid: VertexId, input_port: usize) -> Result<Vec<Hop>, CrossbarError> {
        if input_port >= self.n_ports {
            return Err(CrossbarError::PortOutOfRange {
                port: input_port,
                n_ports: self.n_ports,
            });
        }
        let mut pos = input_port;
        let mut prefix = 1;
        let mut hops = Vec::with_capacity(self.layers());
        for (layer, &c) in self.factors.iter().enumerate() {
            let (switch, _, digit, next) = step_position(pos, prefix, c, vid);
            hops.push(Hop {
                layer,
                switch,
                output_port: digit,
            });
            pos = next;
            prefix *= c;
        }
        Ok(hops)
    }

    /// LUTs for the dispatcher FIFOs and `n_pe` PEs. Equal-factor topologies
    /// use `k * N^(1/k + 1)`; otherwise (or when the root is not integral) the
    /// exact FIFO count is used.
    pub fn lut_estimate(&self, r_fifo: f64, n_pe: usize, r_pe: f64) -> LutEstimate {
        let k = self.layers();
        let equal = self.factors.windows(2).all(|w| w[0] == w[1]);
        let closed = equal
            .then(|| closed_form_fifo_count(self.n_ports as u64, k as u32))
            .flatten();
        let fifos = closed.unwrap_or(self.fifo_count() as f64);
        let fifo_luts = fifos * r_fifo;
        let pe_luts = n_pe as f64 * r_pe;
        LutEstimate {
            fifo_luts,
            pe_luts,
            total: fifo_luts + pe_luts,
            closed_form: closed.is_some(),
        }
    }

    /// Every ordered factorization of `n` into factors of at least 2.
    pub fn factorizations(n: usize) -> Vec<Vec<usize>> {
        fn go(n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if n == 1 {
                out.push(prefix.clone());
                return;
            }
            for c in 2..=n {
                if n.is_multiple_of(c) {
                    prefix.push(c);
                    go(n / c, prefix, out);
                    prefix.pop();
                }
            }
        }
        let mut out = Vec::new();
        if n == 1 {
            out.push(vec![1]);
        } else {
            go(n, &mut Vec::new(), &mut out);
        }
        out
    }
}

/// `k * N^(1/k + 1)` when `N^(1/k)` is an integer, else `None`.
pub fn closed_form_fifo_count(n: u64, k: u32) -> Option<f64> {
    if k == 0 {
        return None;
    }
    let root = libm::round(libm::pow(n as f64, 1.0 / f64::from(k))) as u64;
    if root.checked_pow(k) != Some(n) {
        return None;
    }
    Some(f64::from(k) * n as f64 * root as f64)
}

/// Routing step through one layer: returns (switch, input, output digit,
/// next position).
#[inline]
fn step_position(pos: usize, prefix: usize, c: usize, vid: VertexId) -> (usize, usize, usize, usize) {
    let g = pos % prefix;
    let r = pos / prefix;
    let (r_lo, r_hi) = (r % c, r / c);
    let digit = (vid as usize / prefix) % c;
    let switch = g + prefix * r_hi;
    let next = g + prefix * digit + prefix * c * r_hi;
    (switch, r_lo, digit, next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    /// Push mode: a child to check against the visited map.
    ChildCheck,
    /// Pull mode: a parent to check against the current frontier, on behalf
    /// of the unvisited `child`. `ticket` identifies the read request.
    ParentCheck { child: VertexId, ticket: u32 },
    /// Pull mode: `vid` found an active parent and is to be written.
    ParentResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DispatchMessage {
    /// Routing key; the message is delivered to port `vid % N`.
    pub vid: VertexId,
    pub kind: MessageKind,
    pub hop_count: u8,
}

impl DispatchMessage {
    pub fn new(vid: VertexId, kind: MessageKind) -> Self {
        Self { vid, kind, hop_count: 0 }
    }
}

/// Receiver of messages leaving the last layer.
pub trait Sink {
    fn can_accept(&self, port: usize) -> bool;
    fn accept(&mut self, port: usize, msg: DispatchMessage);
}

/// Sink that never pushes back.
#[derive(Debug, Default)]
pub struct Collect(pub Vec<(usize, DispatchMessage)>);

impl Sink for Collect {
    fn can_accept(&self, _: usize) -> bool {
        true
    }
    fn accept(&mut self, port: usize, msg: DispatchMessage) {
        self.0.push((port, msg));
    }
}

#[derive(Debug, Clone)]
struct Layer {
    c: usize,
    prefix: usize,
    /// Indexed `(switch * c + input) * c + output`.
    fifos: Vec<VecDeque<DispatchMessage>>,
    /// Round-robin pointer per `(switch, output)`.
    rr: Vec<usize>,
    occupancy: Vec<usize>,
}

impl Layer {
    #[inline]
    fn fifo_index(&self, pos: usize, vid: VertexId) -> (usize, usize) {
        let (switch, input, digit, _) = step_position(pos, self.prefix, self.c, vid);
        (switch, (switch * self.c + input) * self.c + digit)
    }

    #[inline]
    fn output_position(&self, switch: usize, output: usize) -> usize {
        let g = switch % self.prefix;
        let r_hi = switch / self.prefix;
        g + self.prefix * output + self.prefix * self.c * r_hi
    }
}

/// Cycle-stepped dispatch fabric over a [`CrossbarTopology`].
///
/// Each cycle every switch output forwards at most one message, chosen
/// round-robin among the inputs whose head message can move (downstream FIFO
/// not full, or the sink accepting at the last layer).
#[derive(Debug, Clone)]
pub struct Fabric {
    topo: CrossbarTopology,
    layers: Vec<Layer>,
    injected: u64,
    delivered: u64,
}

impl Fabric {
    pub fn new(topo: CrossbarTopology) -> Self {
        let mut prefix = 1;
        let layers = topo
            .factors
            .iter()
            .map(|&c| {
                let switches = topo.n_ports / c;
                let l = Layer {
                    c,
                    prefix,
                    fifos: (0..switches * c * c).map(|_| VecDeque::with_capacity(topo.fifo_depth)).collect(),
                    rr: vec![0; switches * c],
                    occupancy: vec![0; switches],
                };
                prefix *= c;
                l
            })
            .collect();
        Self {
            topo,
            layers,
            injected: 0,
            delivered: 0,
        }
    }

    pub fn topology(&self) -> &CrossbarTopology {
        &self.topo
    }

    pub fn injected(&self) -> u64 {
        self.injected
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    pub fn in_flight(&self) -> u64 {
        self.injected - self.delivered
    }

    pub fn is_empty(&self) -> bool {
        self.in_flight() == 0
    }

    /// Messages actually sitting in FIFOs; equals [`Self::in_flight`].
    pub fn queued(&self) -> u64 {
        self.layers
            .iter()
            .flat_map(|l| l.fifos.iter())
            .map(|f| f.len() as u64)
            .sum()
    }

    /// Whether a message with `vid` entering at `port` would find room.
    pub fn can_inject(&self, port: usize, vid: VertexId) -> bool {
        let (_, idx) = self.layers[0].fifo_index(port, vid);
        self.layers[0].fifos[idx].len() < self.topo.fifo_depth
    }

    /// Enqueues `msg` at input `port`; hands it back when the first-layer FIFO
    /// is full.
    pub fn inject(&mut self, port: usize, msg: DispatchMessage) -> Result<(), DispatchMessage> {
        debug_assert!(port < self.topo.n_ports);
        let depth = self.topo.fifo_depth;
        let layer = &mut self.layers[0];
        let (switch, idx) = layer.fifo_index(port, msg.vid);
        if layer.fifos[idx].len() >= depth {
            return Err(msg);
        }
        layer.fifos[idx].push_back(msg);
        layer.occupancy[switch] += 1;
        self.injected += 1;
        Ok(())
    }

    /// Advances the fabric one cycle. Returns the number of messages that
    /// moved (forwarded or delivered).
    pub fn step(&mut self, sink: &mut impl Sink) -> usize {
        if self.is_empty() {
            return 0;
        }
        let depth = self.topo.fifo_depth;
        let mut moved = 0;
        let last = self.layers.len() - 1;
        // Downstream layers first so a message advances one layer per cycle.
        for li in (0..self.layers.len()).rev() {
            let (head, tail) = self.layers.split_at_mut(li + 1);
            let layer = &mut head[li];
            let mut next = tail.first_mut();
            let c = layer.c;
            for switch in 0..layer.occupancy.len() {
                if layer.occupancy[switch] == 0 {
                    continue;
                }
                for out in 0..c {
                    let out_pos = layer.output_position(switch, out);
                    let start = layer.rr[switch * c + out];
                    for k in 0..c {
                        let input = (start + k) % c;
                        let idx = (switch * c + input) * c + out;
                        let Some(&msg) = layer.fifos[idx].front() else {
                            continue;
                        };
                        let ok = match next.as_deref() {
                            None => sink.can_accept(out_pos),
                            Some(nl) => {
                                let (_, nidx) = nl.fifo_index(out_pos, msg.vid);
                                nl.fifos[nidx].len() < depth
                            }
                        };
                        if !ok {
                            continue;
                        }
                        layer.fifos[idx].pop_front();
                        layer.occupancy[switch] -= 1;
                        layer.rr[switch * c + out] = (input + 1) % c;
                        let mut msg = msg;
                        msg.hop_count = msg.hop_count.saturating_add(1);
                        match next.as_deref_mut() {
                            None => {
                                debug_assert_eq!(li, last);
                                sink.accept(out_pos, msg);
                                self.delivered += 1;
                            }
                            Some(nl) => {
                                let (nswitch, nidx) = nl.fifo_index(out_pos, msg.vid);
                                nl.fifos[nidx].push_back(msg);
                                nl.occupancy[nswitch] += 1;
                            }
                        }
                        moved += 1;
                        break;
                    }
                }
            }
        }
        moved
    }

    /// One synchronous cycle fed from per-port input queues: each port offers
    /// its head message, then the fabric advances. Messages delivered during
    /// the cycle are returned as `(port, message)`.
    pub fn step_dispatch(&mut self, inputs: &mut [VecDeque<DispatchMessage>]) -> Vec<(usize, DispatchMessage)> {
        for (port, q) in inputs.iter_mut().enumerate() {
            if let Some(&msg) = q.front() {
                if self.inject(port, msg).is_ok() {
                    q.pop_front();
                }
            }
        }
        let mut sink = Collect::default();
        self.step(&mut sink);
        sink.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo(n: usize, f: &[usize]) -> CrossbarTopology {
        CrossbarTopology::new(n, f.to_vec(), 16).unwrap()
    }

    #[test]
    fn fifo_counts() {
        assert_eq!(topo(16, &[16]).fifo_count(), 256);
        assert_eq!(topo(16, &[4, 4]).fifo_count(), 128);
        assert_eq!(topo(64, &[4, 4, 4]).fifo_count(), 768);
        assert_eq!(topo(32, &[32]).fifo_count(), 1024);
        assert_eq!(topo(64, &[4, 4, 4]).switches_in_layer(1), 16);
    }

    #[test]
    fn topology_validation() {
        assert!(matches!(
            CrossbarTopology::new(16, vec![4, 2], 16),
            Err(CrossbarError::FactorProduct { product: 8, .. })
        ));
        assert_eq!(CrossbarTopology::new(4, vec![1, 4], 16), Err(CrossbarError::FactorTooSmall));
        assert_eq!(CrossbarTopology::new(4, vec![4], 0), Err(CrossbarError::ZeroDepth));
        assert_eq!(topo(8, &[]).factors(), [8]);
        assert_eq!(topo(1, &[1]).fifo_count(), 1);
    }

    #[test]
    fn two_layer_route_of_vid_seven() {
        let t = topo(16, &[4, 4]);
        for input in 0..16 {
            let path = t.route_path(7, input).unwrap();
            assert_eq!(path.len(), 2);
            assert_eq!(path[0].output_port, 3);
            assert_eq!(path[0].switch, input / 4);
            // Output-layer switch i serves PEs with id % 4 == i.
            assert_eq!(path[1].switch, 3);
        }
        let full = topo(16, &[16]).route_path(7, 5).unwrap();
        assert_eq!(full, [Hop { layer: 0, switch: 0, output_port: 7 }]);
        assert!(t.route_path(1, 16).is_err());
    }

    /// Walk positions by hand and check the final port for every vid, input
    /// and factorization.
    #[test]
    fn exhaustive_routing_reaches_vid_mod_n() {
        for n in [4usize, 8, 16, 64] {
            for f in CrossbarTopology::factorizations(n) {
                let t = topo(n, &f);
                for vid in 0..n as u32 * 2 {
                    for input in 0..n {
                        let path = t.route_path(vid, input).unwrap();
                        assert_eq!(path.len(), f.len());
                        let mut prefix = 1;
                        let mut pos = input;
                        for (hop, &c) in path.iter().zip(&f) {
                            assert!(hop.switch < n / c);
                            pos = (pos % prefix) + prefix * hop.output_port + prefix * c * ((pos / prefix) / c);
                            prefix *= c;
                            assert_eq!(pos % prefix, vid as usize % prefix);
                        }
                        assert_eq!(pos, vid as usize % n);
                    }
                }
            }
        }
    }

    #[test]
    fn factorization_enumeration() {
        assert_eq!(CrossbarTopology::factorizations(4), [vec![2, 2], vec![4]]);
        // Ordered factorizations of 2^6 are the 2^5 compositions of 6.
        assert_eq!(CrossbarTopology::factorizations(64).len(), 32);
    }

    #[test]
    fn unloaded_latency_is_layer_count() {
        for f in [&[16][..], &[4, 4], &[2, 2, 4]] {
            let mut fab = Fabric::new(topo(16, f));
            let mut q = vec![VecDeque::new(); 16];
            q[3].push_back(DispatchMessage::new(9, MessageKind::ChildCheck));
            let mut cycles = 0;
            let out = loop {
                cycles += 1;
                let d = fab.step_dispatch(&mut q);
                if !d.is_empty() {
                    break d;
                }
            };
            assert_eq!(cycles, f.len());
            assert_eq!(out[0].0, 9);
            assert_eq!(out[0].1.hop_count as usize, f.len());
        }
    }

    #[test]
    fn hotspot_caps_at_one_per_cycle() {
        let mut fab = Fabric::new(topo(8, &[2, 4]));
        let mut q: Vec<VecDeque<_>> = (0..8)
            .map(|_| (0..50).map(|_| DispatchMessage::new(5, MessageKind::ChildCheck)).collect())
            .collect();
        let mut per_cycle = Vec::new();
        let mut stalled = false;
        for _ in 0..500 {
            let d = fab.step_dispatch(&mut q);
            assert!(d.iter().all(|(p, _)| *p == 5));
            per_cycle.push(d.len());
            stalled |= q.iter().any(|x| !x.is_empty()) && fab.in_flight() > 0;
            assert_eq!(fab.queued(), fab.in_flight());
            if fab.delivered() == 400 {
                break;
            }
        }
        assert!(per_cycle.iter().all(|&c| c <= 1));
        assert_eq!(fab.delivered(), 400);
        assert!(stalled);
        // Steady state is exactly one delivery per cycle.
        assert_eq!(per_cycle.len(), 400 + 1);
    }

    #[test]
    fn backpressure_from_sink_blocks_delivery() {
        struct Closed;
        impl Sink for Closed {
            fn can_accept(&self, _: usize) -> bool {
                false
            }
            fn accept(&mut self, _: usize, _: DispatchMessage) {
                unreachable!()
            }
        }
        let mut fab = Fabric::new(CrossbarTopology::new(4, vec![4], 2).unwrap());
        let m = DispatchMessage::new(1, MessageKind::ParentResult);
        assert!(fab.inject(0, m).is_ok());
        assert!(fab.inject(0, m).is_ok());
        assert_eq!(fab.inject(0, m), Err(m));
        assert!(!fab.can_inject(0, 1));
        assert!(fab.can_inject(0, 2));
        assert_eq!(fab.step(&mut Closed), 0);
        assert_eq!(fab.in_flight(), 2);
    }

    #[test]
    fn lut_estimate_forms() {
        let t = topo(64, &[4, 4, 4]);
        let e = t.lut_estimate(1.0, 64, 0.0);
        assert!(e.closed_form);
        assert_eq!(e.fifo_luts, 768.0);
        let full = topo(16, &[16]).lut_estimate(2.0, 16, 10.0);
        assert_eq!(full.total, 256.0 * 2.0 + 16.0 * 10.0);
        let mixed = topo(32, &[4, 8]).lut_estimate(1.0, 32, 0.0);
        assert!(!mixed.closed_form);
        assert_eq!(mixed.fifo_luts, topo(32, &[4, 8]).fifo_count() as f64);
        assert_eq!(closed_form_fifo_count(32, 2), None);
        assert_eq!(closed_form_fifo_count(64, 3), Some(768.0));
    }
}

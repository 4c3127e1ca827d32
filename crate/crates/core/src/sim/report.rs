use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bfs::IterationStats;
use crate::Level;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    /// BFS level being expanded.
    pub level: Level,
    pub stats: IterationStats,
    pub cycles: u64,
    pub bytes_read: u64,
    pub bandwidth_gbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub total_cycles: u64,
    pub wall_time_s: f64,
    pub traversed_edges: u64,
    pub gteps: f64,
    pub per_pc_bytes_read: Vec<u64>,
    pub per_iteration: Vec<IterationReport>,
    pub aggregated_bandwidth_gbps: f64,
}

/// Message accounting over a whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MessageCounters {
    pub offset_reads: u64,
    pub edge_reads: u64,
    /// Neighbor entries unpacked from delivered beats.
    pub entries_read: u64,
    pub injected: u64,
    pub delivered: u64,
    pub p2_passed: u64,
    /// Includes `p2_cancelled`.
    pub p2_dropped: u64,
    /// Pull-mode parents dropped because their child was already found.
    pub p2_cancelled: u64,
    pub results_sent: u64,
    pub results_delivered: u64,
}

impl MessageCounters {
    pub fn conserved(&self) -> bool {
        self.entries_read == self.injected
            && self.injected == self.delivered
            && self.delivered == self.p2_passed + self.p2_dropped
            && self.results_sent == self.results_delivered
    }
}

pub(crate) fn gbps(bytes: u64, cycles: u64, freq_hz: f64) -> f64 {
    if cycles == 0 {
        return 0.0;
    }
    bytes as f64 / (cycles as f64 / freq_hz) / 1e9
}

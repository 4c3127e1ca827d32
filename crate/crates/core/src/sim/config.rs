use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bfs::ModePolicy;
use crate::crossbar::CrossbarTopology;
use crate::sim::SimError;

/// Where adjacency data lives in HBM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Each PE's subgraph sits on its own PG's pseudo channel.
    #[default]
    Partitioned,
    /// Global CSR/CSC arrays laid out back to back starting at PC 0.
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub schema_version: u32,
    pub n_pc: usize,
    pub pes_per_pc: usize,
    pub freq_mhz: f64,
    pub sv_bits: u32,
    /// GB/s (1e9 bytes) per pseudo channel.
    pub bw_max_gbps_per_pc: f64,
    pub hbm_latency_cycles: u64,
    /// Empty means one full crossbar.
    pub crossbar_factors: Vec<usize>,
    pub fifo_depth: usize,
    pub mode_policy: ModePolicy,
    pub placement: Placement,
    /// Bandwidth divisor for reads served by a PC other than the reader's own.
    /// Only baseline placement issues such reads.
    pub cross_pc_penalty: f64,
    /// Longest single edge-list read command, in beats.
    pub max_burst_beats: u32,
    /// Outstanding read commands per HBM reader.
    pub reader_slots: usize,
    /// Delivered beats a reader can hold before the channel stalls.
    pub response_buffer_beats: usize,
    pub pc_capacity_bytes: u64,
    /// Parallel dispatch fabrics; each PE takes one message per lane per cycle.
    pub dispatch_lanes: usize,
    /// Depth of each PE inbox lane and of the P3 write queue.
    pub pe_queue_depth: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            schema_version: Self::SCHEMA_VERSION,
            n_pc: 32,
            pes_per_pc: 2,
            freq_mhz: 90.0,
            sv_bits: 32,
            bw_max_gbps_per_pc: 13.27,
            hbm_latency_cycles: 128,
            crossbar_factors: vec![4, 4, 4],
            fifo_depth: CrossbarTopology::DEFAULT_FIFO_DEPTH,
            mode_policy: ModePolicy::hybrid(),
            placement: Placement::Partitioned,
            cross_pc_penalty: 1.0,
            max_burst_beats: 8,
            reader_slots: 64,
            response_buffer_beats: 32,
            pc_capacity_bytes: 256 << 20,
            dispatch_lanes: 2,
            pe_queue_depth: 16,
        }
    }
}

impl SimConfig {
    pub const SCHEMA_VERSION: u32 = 1;
    pub const MAX_PCS: usize = 32;

    /// Defaults with `n_pc * pes_per_pc` PEs behind a full crossbar.
    pub fn with_shape(n_pc: usize, pes_per_pc: usize) -> Self {
        Self {
            n_pc,
            pes_per_pc,
            crossbar_factors: Vec::new(),
            ..Self::default()
        }
    }

    pub fn num_pes(&self) -> usize {
        self.n_pc * self.pes_per_pc
    }

    pub fn dw_bits(&self) -> u64 {
        crate::perf::data_width(self.pes_per_pc as u32, self.sv_bits)
    }

    pub fn dw_bytes(&self) -> u64 {
        self.dw_bits() / 8
    }

    pub fn sv_bytes(&self) -> u64 {
        u64::from(self.sv_bits) / 8
    }

    pub fn entries_per_beat(&self) -> usize {
        (self.dw_bits() / u64::from(self.sv_bits)) as usize
    }

    pub fn freq_hz(&self) -> f64 {
        self.freq_mhz * 1e6
    }

    pub fn bw_max_bytes_per_s(&self) -> f64 {
        self.bw_max_gbps_per_pc * 1e9
    }

    /// min(DW * F, BW_MAX) in GB/s for one PC.
    pub fn pc_bandwidth_bound_gbps(&self) -> f64 {
        crate::perf::channel_bw(self.dw_bits(), self.freq_hz(), self.bw_max_bytes_per_s()).0 / 1e9
    }

    pub fn topology(&self) -> Result<CrossbarTopology, SimError> {
        Ok(CrossbarTopology::new(self.num_pes(), self.crossbar_factors.clone(), self.fifo_depth)?)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg| Err(SimError::Config(msg));
        if self.schema_version != Self::SCHEMA_VERSION {
            return bad("unsupported schema_version");
        }
        if !(1..=Self::MAX_PCS).contains(&self.n_pc) {
            return bad("n_pc must be in 1..=32");
        }
        if self.pes_per_pc == 0 {
            return bad("pes_per_pc must be at least 1");
        }
        if !(self.freq_mhz.is_finite() && self.freq_mhz > 0.0) {
            return bad("freq_mhz must be positive");
        }
        if !matches!(self.sv_bits, 8 | 16 | 32 | 64) {
            return bad("sv_bits must be 8, 16, 32 or 64");
        }
        if self.bw_max_gbps_per_pc.is_nan() || self.bw_max_gbps_per_pc <= 0.0 {
            return bad("bw_max_gbps_per_pc must be positive");
        }
        if !(self.cross_pc_penalty.is_finite() && self.cross_pc_penalty >= 1.0) {
            return bad("cross_pc_penalty must be at least 1");
        }
        if self.max_burst_beats == 0 || self.reader_slots == 0 || self.dispatch_lanes == 0 || self.pe_queue_depth == 0 {
            return bad("burst, slot, lane and queue sizes must be at least 1");
        }
        if self.response_buffer_beats == 0 {
            return bad("response_buffer_beats must be at least 1");
        }
        if self.pc_capacity_bytes < self.dw_bytes() {
            return bad("pc_capacity_bytes is smaller than one beat");
        }
        self.mode_policy.validate()?;
        self.topology()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_the_evaluated_build() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(c.num_pes(), 64);
        assert_eq!(c.dw_bits(), 128);
        assert_eq!(c.entries_per_beat(), 4);
        assert!((c.pc_bandwidth_bound_gbps() * 32.0 - 46.08).abs() < 1e-9);
        assert_eq!(c.topology().unwrap().fifo_count(), 768);
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut c = SimConfig::default();
        c.n_pc = 33;
        assert!(matches!(c.validate(), Err(SimError::Config(_))));
        c.n_pc = 16;
        assert!(matches!(c.validate(), Err(SimError::Crossbar(_))));
        c.crossbar_factors.clear();
        c.validate().unwrap();
        c.cross_pc_penalty = 0.5;
        assert!(c.validate().is_err());
        let mut c = SimConfig::with_shape(1, 1);
        c.validate().unwrap();
        c.sv_bits = 24;
        assert!(c.validate().is_err());
    }
}

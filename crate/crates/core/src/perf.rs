//! Closed-form throughput and LUT model of one processing group and of the
//! whole accelerator.
//!
//! Vertex size `S_v` is in bits for the data width and neighbor fraction and
//! converted to bytes where bandwidth turns into edges per second.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::crossbar::{closed_form_fifo_count, CrossbarTopology};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PerfError {
    #[error("parameter {0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("PE count {0} is not a power of two")]
    NotPowerOfTwo(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerfParams {
    /// PEs per processing group.
    pub n_pe: u32,
    pub n_pc: u32,
    pub sv_bits: u32,
    pub freq_hz: f64,
    /// Bytes per second per pseudo channel.
    pub bw_max: f64,
    pub len_nl: f64,
    /// Dispatcher layers.
    pub k: u32,
    pub r_fifo: f64,
    pub r_pe: f64,
    pub r_limit: f64,
}

impl Default for PerfParams {
    /// One PC at 100 MHz with 32-bit vertices. LUT costs are per-FIFO and
    /// per-PE shares of the 32 PC / 64 PE build on a 1304K-LUT device.
    fn default() -> Self {
        Self {
            n_pe: 16,
            n_pc: 1,
            sv_bits: 32,
            freq_hz: 100e6,
            bw_max: 13.27e9,
            len_nl: 64.0,
            k: 3,
            r_fifo: 227.0,
            r_pe: 2916.0,
            r_limit: 1_304_000.0,
        }
    }
}

impl PerfParams {
    pub fn validate(&self) -> Result<(), PerfError> {
        let ints = [("n_pe", self.n_pe), ("n_pc", self.n_pc), ("sv_bits", self.sv_bits), ("k", self.k)];
        for (name, v) in ints {
            if v == 0 {
                return Err(PerfError::NonPositive(name));
            }
        }
        let floats = [
            ("freq_hz", self.freq_hz),
            ("len_nl", self.len_nl),
            ("r_fifo", self.r_fifo),
            ("r_pe", self.r_pe),
        ];
        for (name, v) in floats {
            if !(v.is_finite() && v > 0.0) {
                return Err(PerfError::NonPositive(name));
            }
        }
        // Infinite caps are allowed: they switch the limit off.
        for (name, v) in [("bw_max", self.bw_max), ("r_limit", self.r_limit)] {
            if v.is_nan() || v <= 0.0 {
                return Err(PerfError::NonPositive(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfEstimate {
    pub dw_bits: u64,
    pub bw_bytes_per_s: f64,
    pub p_nl: f64,
    pub bw_nl: f64,
    pub perf_pg_teps: f64,
    pub perf_total_teps: f64,
    pub saturated: bool,
    pub feasible: bool,
    pub luts: f64,
}

/// Bus width that feeds `n_pe` PEs two vertices each per cycle.
pub fn data_width(n_pe: u32, sv_bits: u32) -> u64 {
    2 * u64::from(n_pe) * u64::from(sv_bits)
}

/// Bytes/s delivered to one PG, and whether the channel cap binds.
pub fn channel_bw(dw_bits: u64, freq_hz: f64, bw_max: f64) -> (f64, bool) {
    let raw = dw_bits as f64 / 8.0 * freq_hz;
    if raw > bw_max {
        (bw_max, true)
    } else {
        (raw, false)
    }
}

/// Share of the bandwidth spent on neighbor lists rather than offsets.
pub fn neighbor_fraction(len_nl: f64, sv_bits: u32, dw_bits: u64) -> f64 {
    let nl = len_nl * f64::from(sv_bits);
    nl / (dw_bits as f64 + nl)
}

/// Edges per second for one PG.
pub fn perf_pg(p: &PerfParams) -> f64 {
    let dw = data_width(p.n_pe, p.sv_bits);
    let (bw, saturated) = channel_bw(dw, p.freq_hz, p.bw_max);
    let two_n = 2.0 * f64::from(p.n_pe);
    if saturated {
        bw * p.len_nl / ((two_n + p.len_nl) * f64::from(p.sv_bits) / 8.0)
    } else {
        two_n * p.freq_hz * p.len_nl / (two_n + p.len_nl)
    }
}

pub fn perf_total(p: &PerfParams) -> f64 {
    perf_pg(p) * f64::from(p.n_pc)
}

/// LUTs for `n` PEs behind a `k`-layer dispatcher. When `n^(1/k)` is not an
/// integer the dispatcher is built from powers of two spread as evenly as
/// possible over the layers.
pub fn dispatcher_luts(n: u64, k: u32, r_fifo: f64, r_pe: f64) -> Result<f64, PerfError> {
    if !n.is_power_of_two() {
        return Err(PerfError::NotPowerOfTwo(n));
    }
    let fifos = match closed_form_fifo_count(n, k) {
        Some(f) => f,
        None => {
            let bits = n.trailing_zeros();
            let layers = k.min(bits.max(1));
            let factors: Vec<usize> = (0..layers)
                .map(|i| 1usize << (bits / layers + u32::from(i < bits % layers)))
                .collect();
            let topo = CrossbarTopology::new(n as usize, factors, CrossbarTopology::DEFAULT_FIFO_DEPTH)
                .expect("power-of-two factors multiply to n");
            topo.fifo_count() as f64
        }
    };
    Ok(fifos * r_fifo + n as f64 * r_pe)
}

/// LUT total for all `n_pe * n_pc` PEs and whether it fits under `r_limit`.
pub fn resource_check(p: &PerfParams) -> Result<(bool, f64), PerfError> {
    p.validate()?;
    if !p.n_pe.is_power_of_two() {
        return Err(PerfError::NotPowerOfTwo(u64::from(p.n_pe)));
    }
    let total_pes = u64::from(p.n_pe) * u64::from(p.n_pc);
    let luts = dispatcher_luts(total_pes, p.k, p.r_fifo, p.r_pe)?;
    Ok((luts < p.r_limit, luts))
}

pub fn estimate(p: &PerfParams) -> Result<PerfEstimate, PerfError> {
    let (feasible, luts) = resource_check(p)?;
    let dw = data_width(p.n_pe, p.sv_bits);
    let (bw, saturated) = channel_bw(dw, p.freq_hz, p.bw_max);
    let p_nl = neighbor_fraction(p.len_nl, p.sv_bits, dw);
    let pg = perf_pg(p);
    Ok(PerfEstimate {
        dw_bits: dw,
        bw_bytes_per_s: bw,
        p_nl,
        bw_nl: bw * p_nl,
        perf_pg_teps: pg,
        perf_total_teps: pg * f64::from(p.n_pc),
        saturated,
        feasible,
        luts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_pe: u32,
    pub len_nl: f64,
    pub dw_bits: u64,
    pub saturated: bool,
    pub perf_pg_gteps: f64,
    pub perf_total_gteps: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// `(len_nl, n_pe with the highest perf_pg)`.
    pub argmax: Vec<(f64, u32)>,
}

/// Evaluates every `(n_pe, len_nl)` pair over `base`. Rows are grouped by
/// `len_nl` in the given order.
pub fn sweep(base: &PerfParams, n_pes: &[u32], lens: &[f64]) -> Result<Sweep, PerfError> {
    let mut rows = Vec::with_capacity(n_pes.len() * lens.len());
    let mut argmax = Vec::with_capacity(lens.len());
    for &len_nl in lens {
        let mut best: Option<(f64, u32)> = None;
        for &n_pe in n_pes {
            let p = PerfParams {
                n_pe,
                len_nl,
                ..base.clone()
            };
            let e = estimate(&p)?;
            if best.is_none_or(|(v, _)| e.perf_pg_teps > v) {
                best = Some((e.perf_pg_teps, n_pe));
            }
            rows.push(SweepRow {
                n_pe,
                len_nl,
                dw_bits: e.dw_bits,
                saturated: e.saturated,
                perf_pg_gteps: e.perf_pg_teps / 1e9,
                perf_total_gteps: e.perf_total_teps / 1e9,
                feasible: e.feasible,
            });
        }
        if let Some((_, n)) = best {
            argmax.push((len_nl, n));
        }
    }
    Ok(Sweep { rows, argmax })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn fig(n_pe: u32, len: f64) -> PerfParams {
        PerfParams {
            n_pe,
            len_nl: len,
            ..PerfParams::default()
        }
    }

    #[test]
    fn data_width_examples() {
        assert_eq!(data_width(2, 32), 128);
        assert_eq!(data_width(1, 32), 64);
        assert_eq!(data_width(16, 32), 1024);
    }

    #[test]
    fn channel_bw_examples() {
        let (bw, sat) = channel_bw(128, 90e6, 13.27e9);
        assert_eq!((bw, sat), (1.44e9, false));
        assert!(rel(bw * 32.0, 46.08e9) < 1e-12);
        assert_eq!(channel_bw(2048, 100e6, 13.27e9), (13.27e9, true));
        assert_eq!(channel_bw(2048, 100e6, f64::INFINITY), (25.6e9, false));
    }

    #[test]
    fn neighbor_fraction_examples() {
        assert!(rel(neighbor_fraction(16.0, 32, 2048), 0.2) < 1e-15);
        assert!(rel(neighbor_fraction(64.0, 32, 128), 2048.0 / 2176.0) < 1e-15);
        assert!(neighbor_fraction(1e12, 32, 128) > 1.0 - 1e-9);
    }

    #[test]
    fn perf_pg_break_point() {
        let p16 = perf_pg(&fig(16, 64.0));
        assert!(rel(p16, 32.0 * 1e8 * 64.0 / 96.0) < 1e-12);
        assert!(!estimate(&fig(16, 64.0)).unwrap().saturated);
        let p32 = perf_pg(&fig(32, 64.0));
        assert!(rel(p32, 13.27e9 * 64.0 / (128.0 * 4.0)) < 1e-12);
        assert!(estimate(&fig(32, 64.0)).unwrap().saturated);
        assert!(p32 < p16);
        // Long lists approach the 2 vertices per PE per cycle pipeline bound.
        let mut p = fig(4, 1e12);
        p.bw_max = f64::INFINITY;
        assert!(rel(perf_pg(&p), 8.0 * 100e6) < 1e-9);
    }

    #[test]
    fn perf_total_scales_with_channels() {
        let p = PerfParams {
            n_pe: 2,
            n_pc: 32,
            freq_hz: 90e6,
            ..PerfParams::default()
        };
        assert!(rel(perf_total(&p), 32.0 * 4.0 * 9e7 * 64.0 / 68.0) < 1e-12);
        let one = PerfParams { n_pc: 1, ..p.clone() };
        assert_eq!(perf_total(&one), perf_pg(&one));
        let double = PerfParams { n_pc: 64, ..p.clone() };
        assert_eq!(perf_total(&double), 2.0 * perf_total(&p));
    }

    #[test]
    fn resource_examples() {
        let p = PerfParams {
            n_pe: 2,
            n_pc: 32,
            k: 3,
            ..PerfParams::default()
        };
        let (feasible, luts) = resource_check(&p).unwrap();
        assert!(feasible);
        assert_eq!(luts, 768.0 * 227.0 + 64.0 * 2916.0);
        let unlimited = PerfParams {
            n_pe: 64,
            n_pc: 32,
            r_limit: f64::INFINITY,
            ..p.clone()
        };
        assert!(resource_check(&unlimited).unwrap().0);
        assert_eq!(resource_check(&fig(3, 8.0)), Err(PerfError::NotPowerOfTwo(3)));
        // A full 64x64 crossbar alone takes more than half the device.
        assert!(dispatcher_luts(64, 1, 227.0, 0.0).unwrap() > 1_304_000.0 / 2.0);
        // 32 = 2^5 over 2 layers falls back to factors [8, 4].
        assert_eq!(dispatcher_luts(32, 2, 1.0, 0.0).unwrap(), 32.0 * 12.0);
    }

    #[test]
    fn resource_check_matches_fifo_count() {
        for (n, k, f) in [(64u64, 3u32, vec![4usize, 4, 4]), (16, 2, vec![4, 4]), (16, 1, vec![16]), (64, 2, vec![8, 8])] {
            let topo = CrossbarTopology::new(n as usize, f, 16).unwrap();
            assert_eq!(dispatcher_luts(n, k, 1.0, 0.0).unwrap(), topo.fifo_count() as f64);
        }
    }

    #[test]
    fn sweep_shape() {
        let pes = [1, 2, 4, 8, 16, 32, 64];
        let lens = [8.0, 16.0, 32.0, 64.0];
        let s = sweep(&PerfParams::default(), &pes, &lens).unwrap();
        assert_eq!(s.rows.len(), 28);
        assert_eq!(s.argmax.last(), Some(&(64.0, 16)));
        let a8 = s.argmax[0].1;
        assert!(a8 <= 16);
        for (i, &n) in pes.iter().enumerate() {
            let col: Vec<f64> = (0..lens.len()).map(|j| s.rows[j * pes.len() + i].perf_pg_gteps).collect();
            assert!(col.windows(2).all(|w| w[0] < w[1]), "n_pe={n}");
        }
        let single = sweep(&PerfParams::default(), &[4], &[16.0]).unwrap();
        assert_eq!(single.rows.len(), 1);
        assert_eq!(single.argmax, [(16.0, 4)]);
    }

    #[test]
    fn validation() {
        let mut p = PerfParams::default();
        p.len_nl = 0.0;
        assert_eq!(p.validate(), Err(PerfError::NonPositive("len_nl")));
        p.len_nl = 1.0;
        p.n_pc = 0;
        assert_eq!(p.validate(), Err(PerfError::NonPositive("n_pc")));
    }

    proptest! {
        #[test]
        fn closed_form_equals_bandwidth_identity(
            n_pe in 1u32..=128,
            len in 0.5f64..512.0,
            sv in prop::sample::select(vec![16u32, 32, 64]),
            f in 50e6f64..500e6,
            bw_max in 1e9f64..50e9,
        ) {
            let p = PerfParams { n_pe, len_nl: len, sv_bits: sv, freq_hz: f, bw_max, ..PerfParams::default() };
            let dw = data_width(n_pe, sv);
            let (bw, _) = channel_bw(dw, f, bw_max);
            let via_fraction = bw * neighbor_fraction(len, sv, dw) / (f64::from(sv) / 8.0);
            prop_assert!(rel(perf_pg(&p), via_fraction) < 1e-12);
            let p_nl = neighbor_fraction(len, sv, dw);
            prop_assert!(p_nl > 0.0 && p_nl < 1.0);
        }

        #[test]
        fn branches_meet_at_saturation_boundary(n_pe in 1u32..=64, len in 1.0f64..256.0, sv in 8u32..=64) {
            let f = 100e6;
            let bw_max = data_width(n_pe, sv) as f64 / 8.0 * f;
            let p = PerfParams { n_pe, len_nl: len, sv_bits: sv, freq_hz: f, bw_max, ..PerfParams::default() };
            let two_n = 2.0 * f64::from(n_pe);
            let unsat = two_n * f * len / (two_n + len);
            let sat = bw_max * len / ((two_n + len) * f64::from(sv) / 8.0);
            prop_assert!(rel(unsat, sat) < 1e-9);
            prop_assert!(rel(perf_pg(&p), unsat) < 1e-9);
        }

        #[test]
        fn unimodal_over_powers_of_two(len in 1.0f64..1024.0, bw_max in 1e9f64..40e9) {
            let base = PerfParams { len_nl: len, bw_max, ..PerfParams::default() };
            let mut prev: Option<(f64, bool)> = None;
            for b in 0..8 {
                let p = PerfParams { n_pe: 1 << b, ..base.clone() };
                let e = estimate(&p).unwrap();
                if let Some((v, was_sat)) = prev {
                    if !e.saturated {
                        prop_assert!(e.perf_pg_teps > v);
                    } else if was_sat {
                        prop_assert!(e.perf_pg_teps < v);
                    }
                }
                prev = Some((e.perf_pg_teps, e.saturated));
            }
        }
    }
}

//! Throughput/latency model of one HBM pseudo channel.
//!
//! Bus time is tracked in fixed-point subticks so that a bandwidth cap which
//! is not a whole number of bytes per cycle still averages out exactly. A beat
//! of `dw` bytes occupies the bus for `max(1 cycle, dw / cap)`, scaled by the
//! cross-channel penalty for remote reads. Data for a request cannot start
//! before `issue + latency`, and requests finish in issue order.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::sim::SimError;

pub const SUBTICKS: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pending {
    reader: usize,
    tag: u32,
    beats: u32,
    done: u32,
    ready_at: u64,
    cost: u64,
}

/// One beat handed to a reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Beat {
    pub reader: usize,
    pub tag: u32,
    pub index: u32,
    pub last: bool,
}

#[derive(Debug, Clone)]
pub struct HbmChannel {
    pc_id: usize,
    dw_bytes: u64,
    latency: u64,
    beat_cost: u64,
    remote_cost: u64,
    placed_bytes: u64,
    queue: VecDeque<Pending>,
    bus_free: u64,
    bytes_read: u64,
}

impl HbmChannel {
    /// `bw_cap` is in bytes per second, `penalty` divides bandwidth for
    /// remote reads.
    pub fn new(pc_id: usize, dw_bytes: u64, freq_hz: f64, bw_cap: f64, latency: u64, penalty: f64, placed_bytes: u64) -> Self {
        let cap_per_cycle = bw_cap / freq_hz;
        let cycles = (dw_bytes as f64 / cap_per_cycle).max(1.0);
        // Round up so the long-run average never exceeds the cap.
        let beat_cost = libm::ceil(cycles * SUBTICKS as f64) as u64;
        let remote_cost = libm::ceil(cycles * penalty * SUBTICKS as f64) as u64;
        Self {
            pc_id,
            dw_bytes,
            latency,
            beat_cost,
            remote_cost,
            placed_bytes,
            queue: VecDeque::new(),
            bus_free: 0,
            bytes_read: 0,
        }
    }

    pub fn pc_id(&self) -> usize {
        self.pc_id
    }

    pub fn bytes_read(&self) -> u64 {
        self.bytes_read
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn queued(&self) -> usize {
        self.queue.len()
    }

    /// Beats covering `[addr, addr + len)` with DW-aligned bursts.
    pub fn beats_for(&self, addr: u64, len: u64) -> u32 {
        if len == 0 {
            return 0;
        }
        ((addr + len - 1) / self.dw_bytes - addr / self.dw_bytes + 1) as u32
    }

    /// Queues a read of `[addr, addr + len)` (PC-local bytes). Offset lookups
    /// pass `len <= dw` and cost one beat.
    pub fn issue(&mut self, cycle: u64, reader: usize, tag: u32, addr: u64, len: u64, remote: bool) -> Result<u32, SimError> {
        if len == 0 || addr.checked_add(len).is_none_or(|end| end > self.placed_bytes) {
            return Err(SimError::AddressFault {
                pc: self.pc_id,
                addr,
                len,
            });
        }
        let beats = self.beats_for(addr, len);
        self.queue.push_back(Pending {
            reader,
            tag,
            beats,
            done: 0,
            ready_at: cycle + self.latency,
            cost: if remote { self.remote_cost } else { self.beat_cost },
        });
        Ok(beats)
    }

    fn head_finish(&self) -> Option<u64> {
        let h = self.queue.front()?;
        Some(self.bus_free.max(h.ready_at * SUBTICKS) + h.cost)
    }

    /// Earliest cycle at which the next beat can be delivered.
    pub fn next_event(&self) -> Option<u64> {
        self.head_finish().map(|f| f.div_ceil(SUBTICKS))
    }

    /// Delivers at most one beat finishing by `cycle`. If the target reader
    /// has no room the bus idles for this cycle.
    pub fn poll(&mut self, cycle: u64, can_accept: impl FnOnce(usize) -> bool) -> Option<Beat> {
        let finish = self.head_finish()?;
        if finish > cycle * SUBTICKS {
            return None;
        }
        let head = self.queue.front_mut()?;
        if !can_accept(head.reader) {
            self.bus_free = (cycle + 1) * SUBTICKS - head.cost;
            return None;
        }
        self.bus_free = finish;
        let beat = Beat {
            reader: head.reader,
            tag: head.tag,
            index: head.done,
            last: head.done + 1 == head.beats,
        };
        head.done += 1;
        if beat.last {
            self.queue.pop_front();
        }
        self.bytes_read += self.dw_bytes;
        Some(beat)
    }
}

/// Completion cycle and `(cycle, bytes)` delivery schedule of one read on an
/// idle channel with an always-ready reader.
pub fn hbm_read(ch: &mut HbmChannel, byte_addr: u64, byte_len: u64, issue_cycle: u64) -> Result<(u64, Vec<(u64, u64)>), SimError> {
    ch.issue(issue_cycle, 0, 0, byte_addr, byte_len, false)?;
    let mut schedule = Vec::new();
    let mut cycle = issue_cycle;
    while let Some(next) = ch.next_event() {
        cycle = cycle.max(next);
        if let Some(b) = ch.poll(cycle, |_| true) {
            schedule.push((cycle, ch.dw_bytes));
            if b.last {
                break;
            }
        }
    }
    Ok((cycle, schedule))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel(dw: u64, freq: f64, cap: f64) -> HbmChannel {
        HbmChannel::new(0, dw, freq, cap, 128, 1.0, 1 << 30)
    }

    #[test]
    fn single_beat_latency() {
        let mut ch = channel(16, 90e6, 13.27e9);
        let (done, sched) = hbm_read(&mut ch, 0, 16, 10).unwrap();
        assert_eq!(done, 10 + 128 + 1);
        assert_eq!(sched, [(139, 16)]);
        assert_eq!(ch.bytes_read(), 16);
    }

    #[test]
    fn beats_follow_alignment() {
        let ch = channel(16, 90e6, 13.27e9);
        assert_eq!(ch.beats_for(0, 16), 1);
        assert_eq!(ch.beats_for(12, 8), 2);
        assert_eq!(ch.beats_for(32, 64), 4);
        assert_eq!(ch.beats_for(4, 4), 1);
    }

    #[test]
    fn streaming_at_full_width() {
        let mut ch = channel(16, 90e6, 13.27e9);
        let (done, sched) = hbm_read(&mut ch, 0, 16 * 100, 0).unwrap();
        assert_eq!(done, 128 + 100);
        assert!(sched.windows(2).all(|w| w[1].0 == w[0].0 + 1));
    }

    #[test]
    fn capped_average_matches_bw_max() {
        // 256-byte beats at 100 MHz want 25.6 GB/s against a 13.27 GB/s cap.
        let (freq, cap) = (100e6, 13.27e9);
        let mut ch = channel(256, freq, cap);
        let mut cycle = 0;
        for i in 0..200u32 {
            ch.issue(0, 0, i, u64::from(i) * 4096, 4096, false).unwrap();
        }
        let first = ch.next_event().unwrap();
        let mut bytes = 0;
        let mut last = 0;
        while !ch.is_idle() {
            cycle = cycle.max(ch.next_event().unwrap());
            if ch.poll(cycle, |_| true).is_some() {
                bytes += 256;
                last = cycle;
            }
        }
        let secs = (last - first + ch.beat_cost.div_ceil(SUBTICKS)) as f64 / freq;
        let avg = bytes as f64 / secs;
        assert!(avg <= cap * 1.0001, "{avg}");
        assert!((avg - cap).abs() / cap < 0.01, "{avg}");
    }

    #[test]
    fn in_order_completion_and_pipelined_latency() {
        let mut ch = channel(16, 90e6, 13.27e9);
        ch.issue(0, 0, 1, 0, 64, false).unwrap();
        ch.issue(1, 1, 2, 64, 16, false).unwrap();
        let mut got = Vec::new();
        for cycle in 0..300 {
            if let Some(b) = ch.poll(cycle, |_| true) {
                got.push((cycle, b.tag, b.index));
            }
        }
        assert_eq!(got, [(129, 1, 0), (130, 1, 1), (131, 1, 2), (132, 1, 3), (133, 2, 0)]);
    }

    #[test]
    fn remote_reads_pay_penalty() {
        let mut ch = HbmChannel::new(0, 16, 90e6, 13.27e9, 0, 20.0, 1 << 20);
        ch.issue(0, 0, 0, 0, 32, true).unwrap();
        let mut cycles = Vec::new();
        for c in 0..100 {
            if ch.poll(c, |_| true).is_some() {
                cycles.push(c);
            }
        }
        assert_eq!(cycles, [20, 40]);
    }

    #[test]
    fn blocked_reader_stalls_bus() {
        let mut ch = HbmChannel::new(0, 16, 90e6, 13.27e9, 0, 1.0, 1 << 20);
        ch.issue(0, 0, 0, 0, 32, false).unwrap();
        assert_eq!(ch.poll(1, |_| false), None);
        assert_eq!(ch.poll(1, |_| true), None);
        assert!(ch.poll(2, |_| true).is_some());
        assert!(ch.poll(3, |_| true).unwrap().last);
    }

    #[test]
    fn out_of_range_is_a_fault() {
        let mut ch = HbmChannel::new(3, 16, 90e6, 13.27e9, 0, 1.0, 100);
        assert_eq!(
            ch.issue(0, 0, 0, 96, 8, false),
            Err(SimError::AddressFault { pc: 3, addr: 96, len: 8 })
        );
        assert!(ch.issue(0, 0, 0, 96, 4, false).is_ok());
    }
}

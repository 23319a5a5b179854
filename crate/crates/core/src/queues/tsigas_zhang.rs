use std::sync::atomic::AtomicU64;
use std::sync::atomic::Ordering::{AcqRel, Acquire};

use crossbeam_utils::CachePadded;

use super::{before_commit, is_sentinel, NULL0, NULL1};
use crate::error::{Error, Result};

/// Bounded circular-array queue using two alternating null values.
///
/// `head` and `tail` are monotone 64-bit positions; the slot index is the low bits and the
/// lap number sits in the high bits. An empty slot of lap `L` holds `null(L mod 2)`; a
/// dequeue at lap `L` stores `null((L + 1) mod 2)` so the slot is ready for the next lap.
///
/// A single alternating bit cannot distinguish laps `L` and `L + 2`. An enqueuer suspended
/// between its check and its CAS for two full laps may therefore place its item in the
/// slot of a later lap. The item is still delivered exactly once but may overtake items
/// enqueued by others. Likewise a dequeuer suspended for two laps can take a slot that was
/// refilled with an equal payload.
pub struct TsigasZhangQueue {
    head: CachePadded<AtomicU64>,
    tail: CachePadded<AtomicU64>,
    slots: Box<[AtomicU64]>,
    mask: u64,
    shift: u32,
}

#[inline]
fn null_of(lap: u64) -> u64 {
    if lap & 1 == 0 {
        NULL0
    } else {
        NULL1
    }
}

impl TsigasZhangQueue {
    pub fn with_capacity(capacity_hint: usize) -> Result<Self> {
        if capacity_hint == 0 {
            return Err(Error::Config("tsigas-zhang needs a capacity > 0".into()));
        }
        let cap = capacity_hint
            .checked_next_power_of_two()
            .ok_or_else(|| Error::Config(format!("capacity {capacity_hint} too large")))?;
        let slots = (0..cap).map(|_| AtomicU64::new(NULL0)).collect();
        Ok(TsigasZhangQueue {
            head: CachePadded::new(AtomicU64::new(0)),
            tail: CachePadded::new(AtomicU64::new(0)),
            slots,
            mask: cap as u64 - 1,
            shift: cap.trailing_zeros(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn enqueue(&self, value: u64) -> bool {
        let cap = self.slots.len() as u64;
        loop {
            let t = self.tail.load(Acquire);
            let h = self.head.load(Acquire);
            let slot = &self.slots[(t & self.mask) as usize];
            let s = slot.load(Acquire);
            if t != self.tail.load(Acquire) {
                continue;
            }
            if s == null_of(t >> self.shift) {
                before_commit();
                if slot.compare_exchange(s, value, AcqRel, Acquire).is_ok() {
                    let _ = self.tail.compare_exchange(t, t + 1, AcqRel, Acquire);
                    return true;
                }
            } else if !is_sentinel(s) {
                if h + cap <= t {
                    return false;
                }
                // Item of this lap whose enqueuer has not bumped the tail yet.
                let _ = self.tail.compare_exchange(t, t + 1, AcqRel, Acquire);
            }
        }
    }

    pub fn dequeue(&self) -> Option<u64> {
        loop {
            let h = self.head.load(Acquire);
            let t = self.tail.load(Acquire);
            let slot = &self.slots[(h & self.mask) as usize];
            let s = slot.load(Acquire);
            if h != self.head.load(Acquire) {
                continue;
            }
            if is_sentinel(s) {
                if h == t {
                    return None;
                }
                // Already taken; the taker has not bumped the head yet.
                let _ = self.head.compare_exchange(h, h + 1, AcqRel, Acquire);
                continue;
            }
            if h == t {
                let _ = self.tail.compare_exchange(t, t + 1, AcqRel, Acquire);
                continue;
            }
            before_commit();
            if slot.compare_exchange(s, null_of((h >> self.shift) + 1), AcqRel, Acquire).is_ok() {
                let _ = self.head.compare_exchange(h, h + 1, AcqRel, Acquire);
                return Some(s);
            }
        }
    }
}

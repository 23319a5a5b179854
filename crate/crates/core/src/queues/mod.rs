//! Lock-free multi-producer/multi-consumer FIFO queues behind one handle.
//!
//! Payloads are 64-bit tokens. The all-zero and all-one words are reserved as the two
//! null markers of the array-based algorithms and cannot be enqueued.

mod linked_arrays;
mod michael_scott;
mod tsigas_zhang;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use linked_arrays::LinkedArraysQueue;
pub use michael_scott::MichaelScottQueue;
pub use tsigas_zhang::TsigasZhangQueue;

/// First reserved encoding (all bits clear).
pub const NULL0: u64 = 0;
/// Second reserved encoding (all bits set).
pub const NULL1: u64 = u64::MAX;

/// A payload that is guaranteed not to collide with the reserved encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueueValue(u64);

impl QueueValue {
    pub fn new(payload: u64) -> Result<Self> {
        if is_sentinel(payload) {
            Err(Error::Argument(format!("payload {payload:#x} is a reserved sentinel")))
        } else {
            Ok(QueueValue(payload))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for QueueValue {
    type Error = Error;

    fn try_from(payload: u64) -> Result<Self> {
        QueueValue::new(payload)
    }
}

#[inline]
pub(crate) fn is_sentinel(word: u64) -> bool {
    word == NULL0 || word == NULL1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    MichaelScott,
    TsigasZhang,
    LinkedArrays,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] =
        [Algorithm::MichaelScott, Algorithm::TsigasZhang, Algorithm::LinkedArrays];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::MichaelScott => "michael-scott",
            Algorithm::TsigasZhang => "tsigas-zhang",
            Algorithm::LinkedArrays => "linked-arrays",
        }
    }

    pub fn is_bounded(self) -> bool {
        self == Algorithm::TsigasZhang
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String =
            s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_lowercase();
        match key.as_str() {
            "michaelscott" | "ms" => Ok(Algorithm::MichaelScott),
            "tsigaszhang" | "tz" => Ok(Algorithm::TsigasZhang),
            "linkedarrays" | "la" | "gidenstam" => Ok(Algorithm::LinkedArrays),
            _ => Err(Error::Argument(format!(
                "unknown algorithm {s:?} (expected michael-scott, tsigas-zhang or linked-arrays)"
            ))),
        }
    }
}

/// A queue of any of the supported algorithms.
pub enum Queue {
    MichaelScott(MichaelScottQueue),
    TsigasZhang(TsigasZhangQueue),
    LinkedArrays(LinkedArraysQueue),
}

/// Creates an empty queue. `capacity_hint` is only used by bounded algorithms, where it is
/// rounded up to a power of two and must be positive.
pub fn new_queue(algorithm: Algorithm, capacity_hint: usize) -> Result<Queue> {
    Ok(match algorithm {
        Algorithm::MichaelScott => Queue::MichaelScott(MichaelScottQueue::new()),
        Algorithm::TsigasZhang => Queue::TsigasZhang(TsigasZhangQueue::with_capacity(capacity_hint)?),
        Algorithm::LinkedArrays => Queue::LinkedArrays(LinkedArraysQueue::new()),
    })
}

impl Queue {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Queue::MichaelScott(_) => Algorithm::MichaelScott,
            Queue::TsigasZhang(_) => Algorithm::TsigasZhang,
            Queue::LinkedArrays(_) => Algorithm::LinkedArrays,
        }
    }

    /// Item capacity, or `None` when unbounded.
    pub fn capacity(&self) -> Option<usize> {
        match self {
            Queue::TsigasZhang(q) => Some(q.capacity()),
            _ => None,
        }
    }

    /// Returns `false` only when a bounded queue is full.
    #[inline]
    pub fn enqueue(&self, v: QueueValue) -> bool {
        match self {
            Queue::MichaelScott(q) => {
                q.enqueue(v.0);
                true
            }
            Queue::TsigasZhang(q) => q.enqueue(v.0),
            Queue::LinkedArrays(q) => {
                q.enqueue(v.0);
                true
            }
        }
    }

    /// Checked variant taking a raw payload.
    pub fn try_enqueue(&self, payload: u64) -> Result<bool> {
        Ok(self.enqueue(QueueValue::new(payload)?))
    }

    /// Oldest item, or `None` (Null) if the queue was observed empty.
    #[inline]
    pub fn dequeue(&self) -> Option<QueueValue> {
        let raw = match self {
            Queue::MichaelScott(q) => q.dequeue(),
            Queue::TsigasZhang(q) => q.dequeue(),
            Queue::LinkedArrays(q) => q.dequeue(),
        };
        raw.map(QueueValue)
    }
}


#[inline(always)]
pub(crate) fn before_commit() {
    #[cfg(test)]
    hook::fire();
}

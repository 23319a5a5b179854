use std::sync::atomic::Ordering::{AcqRel, Acquire, Relaxed, Release};
use std::sync::atomic::{AtomicU64, AtomicUsize};

use crossbeam_epoch::{self as epoch, Atomic, Guard, Owned, Shared};
use crossbeam_utils::CachePadded;

use super::{before_commit, NULL0, NULL1};

const BLOCK: usize = 64;
const EMPTY: u64 = NULL0;
const TAKEN: u64 = NULL1;

struct Block {
    slots: [AtomicU64; BLOCK],
    next: Atomic<Block>,
    /// No slot below this index is empty.
    enq_hint: AtomicUsize,
    /// No slot below this index holds an item.
    deq_hint: AtomicUsize,
}

impl Block {
    fn new(first: Option<u64>) -> Self {
        let block = Block {
            slots: std::array::from_fn(|_| AtomicU64::new(EMPTY)),
            next: Atomic::null(),
            enq_hint: AtomicUsize::new(0),
            deq_hint: AtomicUsize::new(0),
        };
        if let Some(v) = first {
            block.slots[0].store(v, Relaxed);
            block.enq_hint.store(1, Relaxed);
        }
        block
    }
}

/// Unbounded queue made of a linked list of fixed-size arrays.
///
/// Every slot moves once from empty to an item and once from the item to taken, so slot
/// CASes never suffer ABA. Items fill slots in index order and a block gets a successor
/// only once it is full. The global head and tail block pointers are advanced lazily and
/// retired blocks are reclaimed through epochs.
pub struct LinkedArraysQueue {
    head: CachePadded<Atomic<Block>>,
    tail: CachePadded<Atomic<Block>>,
}

impl LinkedArraysQueue {
    pub fn new() -> Self {
        let guard = unsafe { epoch::unprotected() };
        let first = Owned::new(Block::new(None)).into_shared(guard);
        LinkedArraysQueue {
            head: CachePadded::new(Atomic::from(first)),
            tail: CachePadded::new(Atomic::from(first)),
        }
    }

    pub fn enqueue(&self, value: u64) {
        let guard = &epoch::pin();
        loop {
            let tail = self.tail.load(Acquire, guard);
            // SAFETY: the tail block is never retired while pinned threads can reach it.
            let b = unsafe { tail.deref() };
            let mut i = b.enq_hint.load(Acquire);
            while i < BLOCK {
                if b.slots[i].load(Acquire) != EMPTY {
                    i += 1;
                    continue;
                }
                before_commit();
                if b.slots[i].compare_exchange(EMPTY, value, AcqRel, Acquire).is_ok() {
                    b.enq_hint.fetch_max(i + 1, Release);
                    return;
                }
            }
            b.enq_hint.fetch_max(BLOCK, Release);
            let next = b.next.load(Acquire, guard);
            if next.is_null() {
                let fresh = Owned::new(Block::new(Some(value)));
                match b.next.compare_exchange(Shared::null(), fresh, AcqRel, Acquire, guard) {
                    Ok(fresh) => {
                        let _ = self.tail.compare_exchange(tail, fresh, Release, Relaxed, guard);
                        return;
                    }
                    Err(e) => self.advance_tail(tail, e.current, guard),
                }
            } else {
                self.advance_tail(tail, next, guard);
            }
        }
    }

    fn advance_tail<'g>(&self, from: Shared<'g, Block>, to: Shared<'g, Block>, guard: &'g Guard) {
        let _ = self.tail.compare_exchange(from, to, Release, Relaxed, guard);
    }

    pub fn dequeue(&self) -> Option<u64> {
        let guard = &epoch::pin();
        loop {
            let head = self.head.load(Acquire, guard);
            // SAFETY: protected by the guard.
            let b = unsafe { head.deref() };
            let mut i = b.deq_hint.load(Acquire);
            while i < BLOCK {
                let s = b.slots[i].load(Acquire);
                if s == EMPTY {
                    return None;
                }
                if s == TAKEN {
                    i += 1;
                    continue;
                }
                before_commit();
                if b.slots[i].compare_exchange(s, TAKEN, AcqRel, Acquire).is_ok() {
                    b.deq_hint.fetch_max(i + 1, Release);
                    return Some(s);
                }
            }
            b.deq_hint.fetch_max(BLOCK, Release);
            let next = b.next.load(Acquire, guard);
            if next.is_null() {
                return None;
            }
            let tail = self.tail.load(Acquire, guard);
            if tail == head {
                self.advance_tail(tail, next, guard);
                continue;
            }
            if self.head.compare_exchange(head, next, Release, Relaxed, guard).is_ok() {
                // SAFETY: unlinked from both global pointers.
                unsafe { guard.defer_destroy(head) };
            }
        }
    }
}

impl Default for LinkedArraysQueue {
    fn default() -> Self {
        Self::new()
    }
}

impl Drop for LinkedArraysQueue {
    fn drop(&mut self) {
        // SAFETY: exclusive access.
        unsafe {
            let guard = epoch::unprotected();
            let mut cur = self.head.load(Relaxed, guard);
            while !cur.is_null() {
                let next = cur.deref().next.load(Relaxed, guard);
                drop(cur.into_owned());
                cur = next;
            }
        }
    }
}

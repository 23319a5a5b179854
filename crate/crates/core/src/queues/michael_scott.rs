use std::sync::atomic::Ordering::{Acquire, Relaxed, Release};

use crossbeam_epoch::{self as epoch, Atomic, Owned, Shared};
use crossbeam_utils::CachePadded;

use super::before_commit;

struct Node {
    value: u64,
    next: Atomic<Node>,
}

/// Singly linked queue with a dummy head node, shared head and tail pointers and lazily
/// swung tail. Unlinked nodes are reclaimed through epochs.
pub struct MichaelScottQueue {
    head: CachePadded<Atomic<Node>>,
    tail: CachePadded<Atomic<Node>>,
}

impl MichaelScottQueue {
    pub fn new() -> Self {
        let dummy = Owned::new(Node { value: 0, next: Atomic::null() });
        let guard = unsafe { epoch::unprotected() };
        let dummy = dummy.into_shared(guard);
        MichaelScottQueue {
            head: CachePadded::new(Atomic::from(dummy)),
            tail: CachePadded::new(Atomic::from(dummy)),
        }
    }

    pub fn enqueue(&self, value: u64) {
        let guard = &epoch::pin();
        let node = Owned::new(Node { value, next: Atomic::null() }).into_shared(guard);
        loop {
            let tail = self.tail.load(Acquire, guard);
            // SAFETY: the tail is never retired while a pinned thread can reach it.
            let t = unsafe { tail.deref() };
            let next = t.next.load(Acquire, guard);
            if tail != self.tail.load(Acquire, guard) {
                continue;
            }
            if next.is_null() {
                before_commit();
                if t.next.compare_exchange(Shared::null(), node, Release, Relaxed, guard).is_ok() {
                    let _ = self.tail.compare_exchange(tail, node, Release, Relaxed, guard);
                    return;
                }
            } else {
                let _ = self.tail.compare_exchange(tail, next, Release, Relaxed, guard);
            }
        }
    }

    pub fn dequeue(&self) -> Option<u64> {
        let guard = &epoch::pin();
        loop {
            let head = self.head.load(Acquire, guard);
            // SAFETY: protected by the guard.
            let h = unsafe { head.deref() };
            let next = h.next.load(Acquire, guard);
            let tail = self.tail.load(Acquire, guard);
            if head != self.head.load(Acquire, guard) {
                continue;
            }
            let Some(n) = (unsafe { next.as_ref() }) else {
                return None;
            };
            if head == tail {
                let _ = self.tail.compare_exchange(tail, next, Release, Relaxed, guard);
                continue;
            }
            before_commit();
            if self.head.compare_exchange(head, next, Release, Relaxed, guard).is_ok() {
                let value = n.value;
                // SAFETY: head is unlinked and the tail has moved past it.
                unsafe { guard.defer_destroy(head) };
                return Some(value);
            }
        }
    }
}

impl Default for MichaelScottQueue {
    fn default() -> Self {
        Self::new()
    }
}

impl Drop for MichaelScottQueue {
    fn drop(&mut self) {
        // SAFETY: exclusive access; nothing else can observe the nodes.
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

//! Multi-producer/multi-consumer stress harness shared by the integration tests.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;

use qwb_core::queues::{Queue, QueueValue};

fn payload(producer: u64, seq: u64) -> QueueValue {
    QueueValue::new(((producer + 1) << 32) | (seq + 1)).unwrap()
}

fn split(v: QueueValue) -> (usize, u64) {
    let x = v.get();
    ((x >> 32) as usize - 1, (x & 0xffff_ffff) - 1)
}

/// What each consumer dequeued, grouped by producer, plus whether the queue was empty
/// afterwards.
pub struct StressRun {
    pub per_consumer: Vec<Vec<Vec<u64>>>,
    pub producers: usize,
    pub per_producer: u64,
    pub drained: bool,
}

/// Runs `producers × consumers` threads over `items` items.
pub fn stress(q: Arc<Queue>, producers: usize, consumers: usize, items: u64) -> StressRun {
    let per = items / producers as u64;
    let total = per * producers as u64;
    let taken = Arc::new(AtomicU64::new(0));
    let mut handles = Vec::new();
    for p in 0..producers {
        let q = Arc::clone(&q);
        handles.push(thread::spawn(move || {
            for s in 0..per {
                let v = payload(p as u64, s);
                while !q.enqueue(v) {
                    thread::yield_now();
                }
            }
            Vec::new()
        }));
    }
    for _ in 0..consumers {
        let q = Arc::clone(&q);
        let taken = Arc::clone(&taken);
        handles.push(thread::spawn(move || {
            let mut seen = vec![Vec::new(); producers];
            while taken.load(Ordering::Relaxed) < total {
                match q.dequeue() {
                    Some(v) => {
                        taken.fetch_add(1, Ordering::Relaxed);
                        let (p, s) = split(v);
                        seen[p].push(s);
                    }
                    None => thread::yield_now(),
                }
            }
            seen
        }));
    }
    let out: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    StressRun {
        per_consumer: out.into_iter().skip(producers).collect(),
        producers,
        per_producer: per,
        drained: q.dequeue().is_none(),
    }
}

impl StressRun {
    /// Every item dequeued exactly once and nothing left behind.
    pub fn check_conservation(&self) -> Result<(), String> {
        if !self.drained {
            return Err("queue not empty after all items were taken".into());
        }
        for p in 0..self.producers {
            let mut all: Vec<u64> =
                self.per_consumer.iter().flat_map(|c| c[p].iter().copied()).collect();
            all.sort_unstable();
            if all.len() as u64 != self.per_producer
                || all.iter().enumerate().any(|(i, s)| *s != i as u64)
            {
                let dup = all.windows(2).filter(|w| w[0] == w[1]).count();
                return Err(format!(
                    "producer {p}: {} items seen for {} sent ({dup} duplicates)",
                    all.len(),
                    self.per_producer
                ));
            }
        }
        Ok(())
    }

    /// Each consumer saw each producer's items in increasing order.
    pub fn check_order(&self) -> Result<(), String> {
        for (c, seen) in self.per_consumer.iter().enumerate() {
            for (p, seq) in seen.iter().enumerate() {
                if !seq.windows(2).all(|w| w[0] < w[1]) {
                    return Err(format!("consumer {c} saw producer {p} out of order"));
                }
            }
        }
        Ok(())
    }
}

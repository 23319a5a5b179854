use std::sync::atomic::Ordering::{Acquire, Relaxed, Release};
use std::sync::atomic::{AtomicU64, AtomicU8};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_utils::CachePadded;

use super::pause::{parallel_work, LambdaUnit};
use super::pin::{pair_layout, physical_core_order, pin_current, pinning_disabled_by_env};
use super::power::PowerSource;
use super::{Measurement, RunConfig};
use crate::error::{Error, Result};
use crate::queues::{new_queue, Queue, QueueValue};

const RUN: u8 = 0;
const DRAIN: u8 = 1;
const STOP: u8 = 2;

/// Flag set when the run could not be pinned as requested.
pub const FLAG_PIN_DEGRADED: &str = "pinning-degraded";
/// Flag set when the two halves of the window disagree beyond the steady-state tolerance.
pub const FLAG_NON_STEADY: &str = "non-steady";

struct Shared {
    queue: Queue,
    phase: AtomicU8,
    enqueued: Vec<CachePadded<AtomicU64>>,
    items: Vec<CachePadded<AtomicU64>>,
    nulls: Vec<CachePadded<AtomicU64>>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Totals {
    enqueued: u64,
    items: u64,
    nulls: u64,
}

impl Totals {
    fn minus(self, o: Totals) -> Totals {
        Totals {
            enqueued: self.enqueued - o.enqueued,
            items: self.items - o.items,
            nulls: self.nulls - o.nulls,
        }
    }

    fn plus(self, o: Totals) -> Totals {
        Totals {
            enqueued: self.enqueued + o.enqueued,
            items: self.items + o.items,
            nulls: self.nulls + o.nulls,
        }
    }
}

impl Shared {
    fn totals(&self) -> Totals {
        let sum = |v: &[CachePadded<AtomicU64>]| v.iter().map(|c| c.load(Acquire)).sum();
        Totals { enqueued: sum(&self.enqueued), items: sum(&self.items), nulls: sum(&self.nulls) }
    }
}

fn enqueuer(s: &Shared, unit: &LambdaUnit, pw: f64, id: u64) {
    let counter = &s.enqueued[id as usize];
    let mut seq = 0u64;
    loop {
        match s.phase.load(Relaxed) {
            STOP => return,
            DRAIN => {
                thread::yield_now();
                continue;
            }
            _ => {}
        }
        parallel_work(unit, pw);
        seq += 1;
        let v = QueueValue::new(((id + 1) << 40) | (seq & ((1 << 40) - 1)).max(1))
            .expect("payload is never a sentinel");
        while !s.queue.enqueue(v) {
            if s.phase.load(Relaxed) == STOP {
                return;
            }
            thread::yield_now();
        }
        counter.store(seq, Release);
    }
}

fn dequeuer(s: &Shared, unit: &LambdaUnit, pw: f64, id: usize) {
    let (mut items, mut nulls) = (0u64, 0u64);
    while s.phase.load(Relaxed) != STOP {
        if s.queue.dequeue().is_some() {
            items += 1;
            s.items[id].store(items, Release);
            if s.phase.load(Relaxed) == RUN {
                parallel_work(unit, pw);
            }
        } else {
            nulls += 1;
            s.nulls[id].store(nulls, Release);
        }
    }
}

/// Runs the queue benchmark: `n` enqueuers looping on {parallel work, enqueue} and `n`
/// dequeuers looping on {dequeue, parallel work if an item came back}.
///
/// Counts are taken after the warm-up. Whenever the queue holds more than `size_cap`
/// items, enqueuers are held, the dequeuers empty the queue without parallel work, and
/// that period is left out of both counts and elapsed time.
pub fn run_benchmark(
    cfg: &RunConfig,
    unit: &LambdaUnit,
    power: Option<&mut dyn PowerSource>,
) -> Result<Measurement> {
    cfg.validate()?;
    let n = cfg.n as usize;
    let mut flags = Vec::new();

    let layout = if !cfg.pin || pinning_disabled_by_env() {
        flags.push("unpinned".to_string());
        None
    } else {
        let layout = pair_layout(n, &physical_core_order());
        if layout.is_none() {
            log::warn!("fewer than {} physical cores; running unpinned", 2 * n);
            flags.push(format!("{FLAG_PIN_DEGRADED}: fewer than {} physical cores", 2 * n));
        }
        layout
    };

    let counters = |k: usize| (0..k).map(|_| CachePadded::new(AtomicU64::new(0))).collect();
    let shared = Arc::new(Shared {
        queue: new_queue(cfg.algorithm, cfg.capacity)?,
        phase: AtomicU8::new(RUN),
        enqueued: counters(n),
        items: counters(n),
        nulls: counters(n),
    });
    let pin_failures = Arc::new(AtomicU64::new(0));

    let mut handles = Vec::with_capacity(2 * n);
    for i in 0..n {
        for is_enqueuer in [true, false] {
            let s = Arc::clone(&shared);
            let unit = *unit;
            let cpu = layout.as_ref().map(|l| if is_enqueuer { l[i].0 } else { l[i].1 });
            let failures = Arc::clone(&pin_failures);
            let (pw_e, pw_d) = (cfg.pw_e, cfg.pw_d);
            let h = thread::Builder::new()
                .name(format!("{}-{i}", if is_enqueuer { "enq" } else { "deq" }))
                .spawn(move || {
                    if let Some(cpu) = cpu {
                        if !pin_current(cpu) {
                            failures.fetch_add(1, Relaxed);
                        }
                    }
                    if is_enqueuer {
                        enqueuer(&s, &unit, pw_e, i as u64)
                    } else {
                        dequeuer(&s, &unit, pw_d, i)
                    }
                });
            match h {
                Ok(h) => handles.push(h),
                Err(e) => {
                    shared.phase.store(STOP, Release);
                    for h in handles {
                        let _ = h.join();
                    }
                    return Err(Error::Benchmark(format!("thread spawn failed: {e}")));
                }
            }
        }
    }

    let outcome = coordinate(cfg, &shared, power, &mut flags);
    shared.phase.store(STOP, Release);
    for h in handles {
        h.join().map_err(|_| Error::Benchmark("worker panicked".into()))?;
    }
    if pin_failures.load(Relaxed) > 0 {
        flags.push(format!("{FLAG_PIN_DEGRADED}: affinity call failed"));
    }
    let (totals, halves, measured, watts) = outcome?;

    let lambdas = measured.as_secs_f64() / unit.seconds_per_lambda;
    let dequeues = totals.items + totals.nulls;
    let t_d = dequeues as f64 / lambdas;
    let t_e = totals.enqueued as f64 / lambdas;
    let tol = cfg.steady_tolerance;
    let rel = |a: f64, b: f64| if a.max(b) > 0.0 { (a - b).abs() / a.max(b) } else { 0.0 };
    let [(d1, e1), (d2, e2)] = halves;
    if rel(d1, d2) > tol || rel(e1, e2) > tol {
        flags.push(format!(
            "{FLAG_NON_STEADY}: halves differ (T_d {d1:.4}/{d2:.4}, T_e {e1:.4}/{e2:.4} ops per unit time)"
        ));
    }
    Ok(Measurement {
        t_d,
        t_e,
        null_fraction: if dequeues > 0 { totals.nulls as f64 / dequeues as f64 } else { 0.0 },
        elapsed_s: measured.as_secs_f64(),
        power: watts,
        repetitions: 1,
        flags,
    })
}

type Outcome = (Totals, [(f64, f64); 2], Duration, Option<crate::model::ComponentWatts>);

fn coordinate(
    cfg: &RunConfig,
    s: &Shared,
    mut power: Option<&mut dyn PowerSource>,
    flags: &mut Vec<String>,
) -> Result<Outcome> {
    thread::sleep(Duration::from_secs_f64(cfg.warmup_s));
    let mut power_ok = match power.as_deref_mut() {
        Some(p) => match p.start() {
            Ok(()) => true,
            Err(e) => {
                flags.push(format!("power unavailable: {e}"));
                false
            }
        },
        None => false,
    };

    let window = Duration::from_secs_f64(cfg.duration_s);
    let half = window / 2;
    let t0 = Instant::now();
    let c0 = s.totals();
    let mut excluded = Totals::default();
    let mut drained = Duration::ZERO;
    let mut drains = 0u32;
    let mut mid: Option<(Totals, Duration)> = None;
    let tick = Duration::from_millis(2).min(window / 20).max(Duration::from_micros(100));

    loop {
        let measured = t0.elapsed().saturating_sub(drained);
        let now = s.totals();
        if mid.is_none() && measured >= half {
            mid = Some((now.minus(c0).minus(excluded), measured));
        }
        if measured >= window {
            break;
        }
        if now.enqueued.saturating_sub(now.items) > cfg.size_cap {
            drains += 1;
            let d0 = Instant::now();
            s.phase.store(DRAIN, Release);
            let before = s.totals();
            let deadline = d0 + Duration::from_secs(30);
            loop {
                let t = s.totals();
                if t.items >= t.enqueued {
                    break;
                }
                if Instant::now() > deadline {
                    return Err(Error::Benchmark("queue drain timed out".into()));
                }
                thread::yield_now();
            }
            excluded = excluded.plus(s.totals().minus(before));
            s.phase.store(RUN, Release);
            drained += d0.elapsed();
            continue;
        }
        thread::sleep(tick);
    }
    let end = s.totals();
    let measured = t0.elapsed().saturating_sub(drained);
    let watts = match power.as_deref_mut() {
        Some(p) if power_ok => match p.stop() {
            Ok(w) => Some(w),
            Err(e) => {
                flags.push(format!("power unavailable: {e}"));
                power_ok = false;
                None
            }
        },
        _ => None,
    };
    let _ = power_ok;
    if drains > 0 {
        flags.push(format!("drained {drains} time(s)"));
    }
    let totals = end.minus(c0).minus(excluded);
    let (first, first_time) = mid.unwrap_or((totals, measured));
    let second = totals.minus(first);
    let second_time = measured.saturating_sub(first_time);
    let rate = |t: Totals, d: Duration| {
        let secs = d.as_secs_f64().max(1e-9);
        ((t.items + t.nulls) as f64 / secs, t.enqueued as f64 / secs)
    };
    Ok((totals, [rate(first, first_time), rate(second, second_time)], measured, watts))
}

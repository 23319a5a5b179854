//! Deterministic discrete-event simulator of `n` enqueuers and `n` dequeuers sharing a FIFO.
//!
//! Each thread alternates parallel sections and retry loops. A try reads its queue end when
//! it starts and commits when it ends; the last `commit_window` of every try is serialized
//! per end, first come first served. A try fails, and starts over, iff another successful
//! commit landed on the same end between its read and its commit. Dequeues that read an
//! empty queue cost `cw_d+`, return Null without committing anything, and are retried at
//! once. Enqueues cost `cw_e-` while fewer than `n` items are queued and `cw_e+` otherwise.
//!
//! Time is counted in integer cycles; one bunch is 1000 cycles and one λ is `1000·f` cycles.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibrate::{CalibrationInputs, CalibrationPoints};
use crate::error::{Error, Result};
use crate::model::Basic;
use crate::workload::Measurement;

pub const CYCLES_PER_BUNCH: f64 = 1000.0;

/// Cost of one try of each basic operation, in bunches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TryCosts {
    pub d_plus: f64,
    pub d_minus: f64,
    pub e_plus: f64,
    pub e_minus: f64,
}

impl TryCosts {
    pub fn uniform(cw: f64) -> Self {
        TryCosts { d_plus: cw, d_minus: cw, e_plus: cw, e_minus: cw }
    }

    pub fn get(&self, basic: Basic) -> f64 {
        match basic {
            Basic::DequeueEmpty => self.d_plus,
            Basic::DequeueItem => self.d_minus,
            Basic::EnqueueFree => self.e_plus,
            Basic::EnqueueContended => self.e_minus,
        }
    }

    fn min(&self) -> f64 {
        self.d_plus.min(self.d_minus).min(self.e_plus).min(self.e_minus)
    }

    fn max(&self) -> f64 {
        self.d_plus.max(self.d_minus).max(self.e_plus).max(self.e_minus)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub n: u32,
    pub f: f64,
    pub pw_d: f64,
    pub pw_e: f64,
    pub cw: TryCosts,
    /// Serialized tail of every try, in bunches.
    pub commit_window: f64,
    /// Simulated time, in λ.
    pub horizon: f64,
    pub seed: u64,
    /// Thread `i` of each class starts its first try at `i·cw` instead of at time 0.
    #[serde(default)]
    pub stagger: bool,
    /// Items in the queue at time 0.
    #[serde(default)]
    pub prefill: u64,
    /// Runs only the threads of one basic operation and pins the queue state it assumes
    /// (always empty, never empty, never inter-contended, always inter-contended).
    /// Every operation is then followed by a parallel section, Null dequeues included.
    #[serde(default)]
    pub isolate: Option<Basic>,
}

impl SimParams {
    /// A moderately contended configuration used by the CLI and the examples.
    pub fn example() -> Self {
        SimParams {
            n: 3,
            f: 1.0,
            pw_d: 20.0,
            pw_e: 20.0,
            cw: TryCosts { d_plus: 0.6, d_minus: 1.5, e_plus: 1.2, e_minus: 1.8 },
            commit_window: 0.3,
            horizon: 50_000.0,
            seed: 1,
            stagger: false,
            prefill: 0,
            isolate: None,
        }
    }

    pub fn at(&self, pw_d: f64, pw_e: f64) -> Self {
        SimParams { pw_d, pw_e, ..self.clone() }
    }

    fn cycles_per_lambda(&self) -> f64 {
        CYCLES_PER_BUNCH * self.f
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.cw;
        if self.n == 0 {
            return Err(Error::Config("n must be ≥ 1".into()));
        }
        if !(self.f > 0.0) {
            return Err(Error::Config("f must be > 0".into()));
        }
        if !(self.pw_d > 0.0 && self.pw_e > 0.0) {
            return Err(Error::Config("parallel sections must be > 0".into()));
        }
        if [c.d_plus, c.d_minus, c.e_plus, c.e_minus].iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::Config(format!("try costs must be > 0: {c:?}")));
        }
        if !(self.commit_window > 0.0 && self.commit_window <= c.min()) {
            return Err(Error::Config(format!(
                "commit_window must lie in (0, min cw = {}], got {}",
                c.min(),
                self.commit_window
            )));
        }
        if (self.commit_window * CYCLES_PER_BUNCH).round() < 1.0 {
            return Err(Error::Config("commit_window is shorter than one cycle".into()));
        }
        let cycle = self.pw_d.max(self.pw_e) + c.max();
        let steady = 0.9 * self.horizon * self.f;
        if !(steady >= 10.0 * cycle && steady * CYCLES_PER_BUNCH >= 1000.0) {
            return Err(Error::Simulation(format!(
                "horizon {} λ is too short: the measured window must span at least ten \
                 parallel-section cycles ({cycle} bunches each)",
                self.horizon
            )));
        }
        Ok(())
    }
}

/// Outcome of one simulation, over the window that follows the discarded warm-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// All dequeues per λ, Null ones included.
    pub t_d: f64,
    pub t_e: f64,
    /// Dequeues that returned an item, per λ.
    pub t_d_items: f64,
    pub null_fraction: f64,
    /// Throughput split by the basic operation each completed operation performed.
    pub basic: TryCosts,
    pub mean_occupancy: f64,
    pub final_occupancy: u64,
    pub enqueued_total: u64,
    pub dequeued_total: u64,
    pub failed_tries: u64,
    pub serialization_waits: u64,
    /// Per-thread fraction of the window spent outside the parallel section.
    pub retry_fraction_e: Vec<f64>,
    pub retry_fraction_d: Vec<f64>,
    pub window_lambda: f64,
    pub seed: u64,
}

impl SimResult {
    pub fn queue_throughput(&self) -> f64 {
        self.t_d.min(self.t_e)
    }

    pub fn to_measurement(&self) -> Measurement {
        Measurement {
            t_d: self.t_d,
            t_e: self.t_e,
            null_fraction: self.null_fraction,
            elapsed_s: 0.0,
            power: None,
            repetitions: 1,
            flags: vec!["simulated".into()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    // Commits sort before try starts at equal times: a read sees every commit of its instant.
    CommitDone = 0,
    CommitRequest = 1,
    TryStart = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Event {
    time: u64,
    kind: Kind,
    tie: u64,
    seq: u64,
    thread: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum End {
    Tail,
    Head,
}

#[derive(Debug, Clone, Copy)]
struct Try {
    read_version: u64,
    /// The queue was empty at the read (dequeues only).
    saw_empty: bool,
    basic: Basic,
}

struct Thread {
    end: End,
    pw: u64,
    current: Option<Try>,
    ps_time: u64,
}

struct EndState {
    version: u64,
    busy_until: u64,
}

struct Sim<'a> {
    p: &'a SimParams,
    heap: BinaryHeap<Reverse<Event>>,
    rng: ChaCha8Rng,
    seq: u64,
    threads: Vec<Thread>,
    tail: EndState,
    head: EndState,
    occupancy: u64,
    occ_since: u64,
    occ_area: u128,
    warm: u64,
    horizon: u64,
    cost: [u64; 4],
    window: u64,
    counts: [u64; 4],
    enqueued_total: u64,
    dequeued_total: u64,
    failed: u64,
    waits: u64,
}

fn basic_index(b: Basic) -> usize {
    match b {
        Basic::DequeueEmpty => 0,
        Basic::DequeueItem => 1,
        Basic::EnqueueFree => 2,
        Basic::EnqueueContended => 3,
    }
}

fn cycles(bunches: f64) -> u64 {
    (bunches * CYCLES_PER_BUNCH).round().max(1.0) as u64
}

impl<'a> Sim<'a> {
    fn new(p: &'a SimParams) -> Self {
        let horizon = (p.horizon * p.cycles_per_lambda()).round() as u64;
        let warm = horizon / 10;
        let n = p.n as usize;
        let (enq, deq) = match p.isolate {
            None => (n, n),
            Some(b) if b.is_dequeue() => (0, n),
            Some(_) => (n, 0),
        };
        let mut threads = Vec::with_capacity(enq + deq);
        for _ in 0..enq {
            threads.push(Thread { end: End::Tail, pw: cycles(p.pw_e), current: None, ps_time: 0 });
        }
        for _ in 0..deq {
            threads.push(Thread { end: End::Head, pw: cycles(p.pw_d), current: None, ps_time: 0 });
        }
        let cost = Basic::ALL.map(|b| cycles(p.cw.get(b)));
        Sim {
            p,
            heap: BinaryHeap::new(),
            rng: ChaCha8Rng::seed_from_u64(p.seed),
            seq: 0,
            threads,
            tail: EndState { version: 0, busy_until: 0 },
            head: EndState { version: 0, busy_until: 0 },
            occupancy: p.prefill,
            occ_since: warm,
            occ_area: 0,
            warm,
            horizon,
            cost,
            window: cycles(p.commit_window),
            counts: [0; 4],
            enqueued_total: 0,
            dequeued_total: 0,
            failed: 0,
            waits: 0,
        }
    }

    fn push(&mut self, time: u64, kind: Kind, thread: usize) {
        self.seq += 1;
        let tie = self.rng.next_u64();
        self.heap.push(Reverse(Event { time, kind, tie, seq: self.seq, thread }));
    }

    fn end(&mut self, end: End) -> &mut EndState {
        match end {
            End::Tail => &mut self.tail,
            End::Head => &mut self.head,
        }
    }

    fn set_occupancy(&mut self, now: u64, occupancy: u64) {
        if now > self.warm {
            let from = self.occ_since.max(self.warm);
            self.occ_area += u128::from(self.occupancy) * u128::from(now - from);
            self.occ_since = now;
        }
        self.occupancy = occupancy;
    }

    /// Accounts a parallel section `[start, start + len)` clipped to the window.
    fn parallel_section(&mut self, thread: usize, start: u64) {
        let len = self.threads[thread].pw;
        let lo = start.max(self.warm);
        let hi = (start + len).min(self.horizon);
        if hi > lo {
            self.threads[thread].ps_time += hi - lo;
        }
        self.push(start + len, Kind::TryStart, thread);
    }

    fn start_try(&mut self, now: u64, thread: usize) {
        let end = self.threads[thread].end;
        let n = u64::from(self.p.n);
        let (basic, saw_empty) = match (end, self.p.isolate) {
            (End::Tail, Some(b)) => (b, false),
            (End::Head, Some(b)) => (b, b == Basic::DequeueEmpty),
            (End::Tail, None) if self.occupancy < n => (Basic::EnqueueContended, false),
            (End::Tail, None) => (Basic::EnqueueFree, false),
            (End::Head, None) if self.occupancy == 0 => (Basic::DequeueEmpty, true),
            (End::Head, None) => (Basic::DequeueItem, false),
        };
        let read_version = self.end(end).version;
        self.threads[thread].current = Some(Try { read_version, saw_empty, basic });
        let cost = self.cost[basic_index(basic)];
        let open = cost.saturating_sub(self.window);
        self.push(now + open, Kind::CommitRequest, thread);
    }

    fn request_commit(&mut self, now: u64, thread: usize) {
        let end = self.threads[thread].end;
        let window = self.window;
        let state = self.end(end);
        let grant = now.max(state.busy_until);
        state.busy_until = grant + window;
        if grant > now && now >= self.warm {
            self.waits += 1;
        }
        self.push(grant + window, Kind::CommitDone, thread);
    }

    fn finish_commit(&mut self, now: u64, thread: usize) {
        let t = self.threads[thread].current.take().expect("commit without a try");
        let end = self.threads[thread].end;
        let in_window = now >= self.warm && now < self.horizon;
        if t.saw_empty {
            if in_window {
                self.counts[basic_index(t.basic)] += 1;
            }
            if self.p.isolate.is_some() {
                self.parallel_section(thread, now);
            } else {
                self.start_try(now, thread);
            }
            return;
        }
        if self.end(end).version != t.read_version {
            if in_window {
                self.failed += 1;
            }
            self.start_try(now, thread);
            return;
        }
        self.end(end).version += 1;
        if in_window {
            self.counts[basic_index(t.basic)] += 1;
        }
        if self.p.isolate.is_none() {
            match end {
                End::Tail => {
                    self.enqueued_total += 1;
                    self.set_occupancy(now, self.occupancy + 1);
                }
                End::Head => {
                    self.dequeued_total += 1;
                    self.set_occupancy(now, self.occupancy - 1);
                }
            }
        }
        self.parallel_section(thread, now);
    }

    fn run(mut self) -> SimResult {
        let p = self.p;
        let enqueuers = self.threads.iter().filter(|t| t.end == End::Tail).count();
        for i in 0..self.threads.len() {
            let class_index = if i < enqueuers { i } else { i - enqueuers };
            let start = if p.stagger {
                let basic = match self.threads[i].end {
                    End::Tail => Basic::EnqueueFree,
                    End::Head => Basic::DequeueItem,
                };
                class_index as u64 * self.cost[basic_index(basic)]
            } else {
                0
            };
            self.push(start, Kind::TryStart, i);
        }
        while let Some(Reverse(ev)) = self.heap.pop() {
            if ev.time >= self.horizon {
                break;
            }
            match ev.kind {
                Kind::TryStart => self.start_try(ev.time, ev.thread),
                Kind::CommitRequest => self.request_commit(ev.time, ev.thread),
                Kind::CommitDone => self.finish_commit(ev.time, ev.thread),
            }
        }
        let horizon = self.horizon;
        self.set_occupancy(horizon, self.occupancy);

        let span = (horizon - self.warm) as f64;
        let window_lambda = span / p.cycles_per_lambda();
        let per_lambda = |c: u64| c as f64 / window_lambda;
        let [dp, dm, ep, em] = self.counts;
        let nulls = dp;
        let dequeues = dp + dm;
        let fraction = |t: &Thread| 1.0 - t.ps_time as f64 / span;
        SimResult {
            t_d: per_lambda(dequeues),
            t_e: per_lambda(ep + em),
            t_d_items: per_lambda(dm),
            null_fraction: if dequeues > 0 { nulls as f64 / dequeues as f64 } else { 0.0 },
            basic: TryCosts {
                d_plus: per_lambda(dp),
                d_minus: per_lambda(dm),
                e_plus: per_lambda(ep),
                e_minus: per_lambda(em),
            },
            mean_occupancy: self.occ_area as f64 / span,
            final_occupancy: self.occupancy,
            enqueued_total: self.enqueued_total,
            dequeued_total: self.dequeued_total,
            failed_tries: self.failed,
            serialization_waits: self.waits,
            retry_fraction_e: self
                .threads
                .iter()
                .filter(|t| t.end == End::Tail)
                .map(fraction)
                .collect(),
            retry_fraction_d: self
                .threads
                .iter()
                .filter(|t| t.end == End::Head)
                .map(fraction)
                .collect(),
            window_lambda,
            seed: p.seed,
        }
    }
}

/// Runs one simulation. Identical parameters, seed included, give identical results.
pub fn simulate(p: &SimParams) -> Result<SimResult> {
    p.validate()?;
    Ok(Sim::new(p).run())
}

/// The `{1, 5, 20, 100, 1000}²` validation grid.
pub fn validation_grid() -> Vec<(f64, f64)> {
    const AXIS: [f64; 5] = [1.0, 5.0, 20.0, 100.0, 1000.0];
    AXIS.iter().flat_map(|&d| AXIS.iter().map(move |&e| (d, e))).collect()
}

/// Simulated runs at the calibration points and on the validation grid.
#[derive(Debug, Clone)]
pub struct SimSuite {
    pub calibration: CalibrationInputs,
    pub validation: Vec<((f64, f64), SimResult)>,
}

/// Simulates the eight calibration points and the validation grid with `base`'s settings.
pub fn simulate_calibration_suite(base: &SimParams) -> Result<SimSuite> {
    let points = CalibrationPoints::default();
    let mut measurements = Vec::new();
    for pt in points.all() {
        let r = simulate(&base.at(pt.pw_d, pt.pw_e))?;
        measurements.push((pt, r.to_measurement()));
    }
    let mut validation = Vec::new();
    for (d, e) in validation_grid() {
        validation.push(((d, e), simulate(&base.at(d, e))?));
    }
    let calibration = CalibrationInputs {
        algorithm: "simulated".into(),
        n: base.n,
        f: base.f,
        lambda_seconds: 1e-6,
        points,
        measurements,
    };
    Ok(SimSuite { calibration, validation })
}

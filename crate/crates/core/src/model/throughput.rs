//! Throughput side of the model.
//!
//! Dequeuer and enqueuer throughputs are rebuilt from four basic throughputs, each of
//! which depends on the parallel-section size of its own operation class only:
//!
//! | basic | meaning                                       |
//! |-------|-----------------------------------------------|
//! | `d+`  | dequeue on an empty queue (returns Null)      |
//! | `d-`  | dequeue on a non-empty queue                  |
//! | `e+`  | enqueue without dequeuer interference         |
//! | `e-`  | enqueue under maximal dequeuer interference   |
//!
//! Every throughput is expressed in operations per λ, every amount of work in bunches of
//! pauses (1 bunch ≈ 1000 cycles). One bunch therefore lasts `1/f` λ at frequency `f` GHz.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when testing the regime conditions, so that boundary cases that hold
/// exactly in real arithmetic are not rejected because of rounding.
const REGIME_TOL: f64 = 1e-12;

/// Relative distance under which `T_d^+` and `T_d^-` are treated as equal.
const SINGULAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basic {
    /// `T_d^+`: dequeue that finds the queue empty.
    DequeueEmpty,
    /// `T_d^-`: dequeue that removes an item.
    DequeueItem,
    /// `T_e^+`: enqueue that is not inter-contended.
    EnqueueFree,
    /// `T_e^-`: enqueue under maximal inter-contention.
    EnqueueContended,
}

impl Basic {
    pub const ALL: [Basic; 4] = [
        Basic::DequeueEmpty,
        Basic::DequeueItem,
        Basic::EnqueueFree,
        Basic::EnqueueContended,
    ];

    pub fn is_dequeue(self) -> bool {
        matches!(self, Basic::DequeueEmpty | Basic::DequeueItem)
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Basic::DequeueEmpty => "d+",
            Basic::DequeueItem => "d-",
            Basic::EnqueueFree => "e+",
            Basic::EnqueueContended => "e-",
        }
    }
}

impl fmt::Display for Basic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Throughput of `n` threads that each succeed at their first try: `n·f / (pw + cw)`.
pub fn low_contention_throughput(n: f64, f: f64, pw: f64, cw: f64) -> f64 {
    n * f / (pw + cw)
}

/// Parallel-section size below which threads of the same class start failing tries.
pub fn frontier(n: u32, cw: f64) -> f64 {
    f64::from(n.saturating_sub(1)) * cw
}

/// Fraction of a thread's time spent in the retry loop, `1 - T·pw / (n·f)`.
///
/// Measured inputs can push `T·pw/(n·f)` slightly outside `[0, 1]`; the result is clamped.
pub fn ratio(throughput: f64, pw: f64, n: u32, f: f64) -> f64 {
    let busy = throughput * pw / (f64::from(n) * f);
    if busy > 1.0 {
        if busy > 1.0 + 1e-9 {
            log::warn!("retry-loop ratio clamped: T·pw/(n·f) = {busy:.6} > 1");
        }
        0.0
    } else if busy < 0.0 {
        1.0
    } else {
        1.0 - busy
    }
}

/// Queue throughput: the minimum of dequeuers' and enqueuers' throughput.
pub fn queue_throughput(t_d: f64, t_e: f64) -> f64 {
    t_d.min(t_e)
}

/// Parameters of one basic curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    /// Work in a single uncontended try of the retry loop, in bunches.
    pub cw: f64,
    /// Throughput at the high-contention anchor `pw = p_sma`, in ops per λ.
    pub anchor: f64,
}

/// The four basic curves for one (algorithm, n, f).
///
/// Each curve is hyperbolic (`n·f/(pw + cw)`) above its frontier `(n-1)·cw` and linear
/// between the anchor `(p_sma, anchor)` and the frontier point `((n-1)·cw, f/cw)` below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasicThroughputModel {
    pub n: u32,
    pub f: f64,
    pub p_sma: f64,
    pub dequeue_empty: CurveParams,
    pub dequeue_item: CurveParams,
    pub enqueue_free: CurveParams,
    pub enqueue_contended: CurveParams,
}

impl BasicThroughputModel {
    pub fn curve(&self, basic: Basic) -> CurveParams {
        match basic {
            Basic::DequeueEmpty => self.dequeue_empty,
            Basic::DequeueItem => self.dequeue_item,
            Basic::EnqueueFree => self.enqueue_free,
            Basic::EnqueueContended => self.enqueue_contended,
        }
    }

    pub fn curve_mut(&mut self, basic: Basic) -> &mut CurveParams {
        match basic {
            Basic::DequeueEmpty => &mut self.dequeue_empty,
            Basic::DequeueItem => &mut self.dequeue_item,
            Basic::EnqueueFree => &mut self.enqueue_free,
            Basic::EnqueueContended => &mut self.enqueue_contended,
        }
    }

    pub fn frontier(&self, basic: Basic) -> f64 {
        frontier(self.n, self.curve(basic).cw)
    }

    /// Evaluates one basic throughput at parallel-section size `pw`.
    pub fn throughput(&self, basic: Basic, pw: f64) -> Result<f64> {
        if !(pw >= self.p_sma - 1e-12 * self.p_sma.abs().max(1.0)) {
            return Err(Error::Domain(format!(
                "pw = {pw} is below p_sma = {} for basic {basic}",
                self.p_sma
            )));
        }
        let CurveParams { cw, anchor } = self.curve(basic);
        let n = f64::from(self.n);
        let pw_star = frontier(self.n, cw);
        if pw_star > self.p_sma && pw <= pw_star {
            let at_frontier = self.f / cw;
            Ok(anchor + (at_frontier - anchor) * (pw - self.p_sma) / (pw_star - self.p_sma))
        } else {
            Ok(low_contention_throughput(n, self.f, pw, cw))
        }
    }

    /// All four basic throughputs at `(pw_d, pw_e)`.
    pub fn at(&self, pw_d: f64, pw_e: f64) -> Result<BasicThroughputs> {
        Ok(BasicThroughputs {
            d_plus: self.throughput(Basic::DequeueEmpty, pw_d)?,
            d_minus: self.throughput(Basic::DequeueItem, pw_d)?,
            e_plus: self.throughput(Basic::EnqueueFree, pw_e)?,
            e_minus: self.throughput(Basic::EnqueueContended, pw_e)?,
        })
    }
}

/// Basic throughputs evaluated at one point of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasicThroughputs {
    pub e_plus: f64,
    pub e_minus: f64,
    pub d_plus: f64,
    pub d_minus: f64,
}

impl BasicThroughputs {
    pub fn get(&self, basic: Basic) -> f64 {
        match basic {
            Basic::DequeueEmpty => self.d_plus,
            Basic::DequeueItem => self.d_minus,
            Basic::EnqueueFree => self.e_plus,
            Basic::EnqueueContended => self.e_minus,
        }
    }

    /// Checks positivity and the orderings `T_d^+ ≥ T_d^-`, `T_e^+ ≥ T_e^-`.
    pub fn validate(&self) -> Result<()> {
        let all = [self.e_plus, self.e_minus, self.d_plus, self.d_minus];
        if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Domain(format!("basic throughputs must be positive: {self:?}")));
        }
        if self.d_plus < self.d_minus * (1.0 - REGIME_TOL) {
            return Err(Error::Domain(format!(
                "T_d+ = {} < T_d- = {}",
                self.d_plus, self.d_minus
            )));
        }
        if self.e_plus < self.e_minus * (1.0 - REGIME_TOL) {
            return Err(Error::Domain(format!(
                "T_e+ = {} < T_e- = {}",
                self.e_plus, self.e_minus
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Enqueuers outpace dequeuers; no Null dequeue happens.
    Growing,
    /// The queue is mostly empty; some dequeues return Null.
    MostlyEmpty,
    /// Both states are consistent; each throughput is the mean of the two solutions.
    Averaged,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Growing => "growing",
            Regime::MostlyEmpty => "mostly-empty",
            Regime::Averaged => "averaged",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "growing" => Ok(Regime::Growing),
            "mostly-empty" => Ok(Regime::MostlyEmpty),
            "averaged" => Ok(Regime::Averaged),
            other => Err(Error::Argument(format!("unknown regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputPair {
    pub t_d: f64,
    pub t_e: f64,
}

/// Dequeuers' and enqueuers' throughput rebuilt from the basic throughputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedSolution {
    pub t_d: f64,
    pub t_e: f64,
    pub regime: Regime,
    pub r_d: f64,
    pub r_e: f64,
    /// The growing-queue solution, when consistent.
    pub growing: Option<ThroughputPair>,
    /// The mostly-empty solution, when consistent.
    pub mostly_empty: Option<ThroughputPair>,
}

impl CombinedSolution {
    pub fn throughput(&self) -> f64 {
        queue_throughput(self.t_d, self.t_e)
    }
}

/// Returns whether the mostly-empty state admits a solution:
/// `T_e^-/T_d^- ≤ 1 - pw_d/(n·f) · (T_e^+ - T_e^-)`.
pub fn mostly_empty_feasible(b: &BasicThroughputs, pw_d: f64, n: u32, f: f64) -> bool {
    let k = pw_d / (f64::from(n) * f);
    let lhs = b.e_minus / b.d_minus;
    let rhs = 1.0 - k * (b.e_plus - b.e_minus);
    lhs <= rhs + REGIME_TOL * lhs.abs().max(rhs.abs()).max(1.0)
}

/// Returns whether the growing state admits a solution: `T_e^+ > T_d^-`.
pub fn growing_feasible(b: &BasicThroughputs) -> bool {
    b.e_plus > b.d_minus
}

/// Intersection of the dequeue balance (Null dequeues fill the slack left by items) with the
/// enqueue interpolation between `T_e^-` and `T_e^+` weighted by the dequeuers' idle ratio.
fn mostly_empty_solution(b: &BasicThroughputs, pw_d: f64, n: u32, f: f64) -> ThroughputPair {
    let k = pw_d / (f64::from(n) * f);
    let spread = b.e_plus - b.e_minus;
    let t_d = if (b.d_plus - b.d_minus).abs() <= SINGULAR_TOL * b.d_minus {
        b.d_minus
    } else {
        // s ≤ 0, so the denominator is at least 1.
        let s = 1.0 - b.d_plus / b.d_minus;
        (b.d_plus + b.e_minus * s) / (1.0 - k * spread * s)
    };
    let busy = (t_d * k).clamp(0.0, 1.0);
    let t_e = busy * b.e_plus + (1.0 - busy) * b.e_minus;
    ThroughputPair { t_d, t_e }
}

/// Combines basic throughputs into `(T_d, T_e)`.
///
/// The growing solution `(T_d^-, T_e^+)` is consistent iff `T_e^+ > T_d^-`; the mostly-empty
/// solution is consistent iff [`mostly_empty_feasible`]. At least one of them always is for
/// valid inputs. When both are, the mean of the two is returned.
pub fn solve_combined(
    b: &BasicThroughputs,
    pw_d: f64,
    pw_e: f64,
    n: u32,
    f: f64,
) -> Result<CombinedSolution> {
    b.validate()?;
    if !(pw_d > 0.0 && pw_e > 0.0 && n >= 1 && f > 0.0) {
        return Err(Error::Domain(format!(
            "need pw_d, pw_e, f > 0 and n ≥ 1 (pw_d = {pw_d}, pw_e = {pw_e}, n = {n}, f = {f})"
        )));
    }

    let growing =
        growing_feasible(b).then_some(ThroughputPair { t_d: b.d_minus, t_e: b.e_plus });
    let mostly_empty =
        mostly_empty_feasible(b, pw_d, n, f).then(|| mostly_empty_solution(b, pw_d, n, f));

    let (pair, regime) = match (growing, mostly_empty) {
        (Some(g), Some(m)) => (
            ThroughputPair { t_d: 0.5 * (g.t_d + m.t_d), t_e: 0.5 * (g.t_e + m.t_e) },
            Regime::Averaged,
        ),
        (Some(g), None) => (g, Regime::Growing),
        (None, Some(m)) => (m, Regime::MostlyEmpty),
        (None, None) => {
            // Impossible for validated inputs: T_e+ ≤ T_d- implies the mostly-empty condition.
            return Err(Error::Domain(format!(
                "no consistent solution for {b:?} at pw_d = {pw_d}, n = {n}, f = {f}"
            )));
        }
    };

    Ok(CombinedSolution {
        t_d: pair.t_d,
        t_e: pair.t_e,
        regime,
        r_d: ratio(pair.t_d, pw_d, n, f),
        r_e: ratio(pair.t_e, pw_e, n, f),
        growing,
        mostly_empty,
    })
}

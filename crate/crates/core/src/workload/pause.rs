use std::hint;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pauses per bunch on x86.
pub const PAUSES_PER_BUNCH: u32 = 90;
/// Target length of one bunch, in cycles.
pub const TARGET_CYCLES_PER_BUNCH: f64 = 1000.0;

/// Wall-clock meaning of the bunch and λ units on this machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaUnit {
    pub f: f64,
    /// Wall time of `90·f` pauses, i.e. of `f` bunches.
    pub seconds_per_lambda: f64,
    pub cycles_per_bunch: f64,
    /// Spin-loop hints issued per bunch.
    pub spins_per_bunch: u32,
}

impl LambdaUnit {
    /// Unit assuming one bunch takes exactly 1000 cycles at `f` GHz.
    pub fn nominal(f: f64) -> Self {
        LambdaUnit {
            f,
            seconds_per_lambda: TARGET_CYCLES_PER_BUNCH * f / (f * 1e9),
            cycles_per_bunch: TARGET_CYCLES_PER_BUNCH,
            spins_per_bunch: PAUSES_PER_BUNCH,
        }
    }

    pub fn bunch_seconds(&self) -> f64 {
        self.seconds_per_lambda / self.f
    }

    /// Converts a duration into λ units.
    pub fn lambdas(&self, d: Duration) -> f64 {
        d.as_secs_f64() / self.seconds_per_lambda
    }

    /// Converts a duration into bunches.
    pub fn bunches(&self, d: Duration) -> f64 {
        d.as_secs_f64() / self.bunch_seconds()
    }

    /// Whether the bunch length is within 10% of the 1000-cycle target.
    pub fn on_target(&self) -> bool {
        (self.cycles_per_bunch / TARGET_CYCLES_PER_BUNCH - 1.0).abs() <= 0.10
    }
}

/// Busy-waits for `spins` spin-loop hints (the pause instruction on x86).
#[inline]
pub fn spin(spins: u64) {
    for _ in 0..spins {
        hint::spin_loop();
    }
}

/// Parallel section of `pw` bunches.
#[inline]
pub fn parallel_work(unit: &LambdaUnit, pw: f64) {
    spin((pw * f64::from(unit.spins_per_bunch)).round() as u64);
}

fn time_spins(spins: u64) -> Duration {
    let start = Instant::now();
    spin(spins);
    start.elapsed()
}

/// Measures the length of a bunch at declared frequency `f` (GHz).
///
/// On x86 a bunch is 90 pause instructions and its measured cycle count is reported. On
/// other targets the number of spin hints is tuned so that a bunch lasts 1000 cycles.
pub fn calibrate_pause_unit(f: f64) -> Result<LambdaUnit> {
    if !(f > 0.0) {
        return Err(Error::Config("frequency must be > 0".into()));
    }
    let probe = Instant::now();
    let mut tick = probe.elapsed();
    while tick.is_zero() {
        tick = probe.elapsed();
    }
    if tick > Duration::from_micros(100) {
        return Err(Error::Benchmark(format!("timer resolution too coarse: {tick:?}")));
    }

    // Grow the sample until it lasts long enough to swamp timer granularity.
    let mut spins: u64 = 1 << 12;
    let mut elapsed = time_spins(spins);
    while elapsed < Duration::from_millis(20) {
        spins *= 2;
        elapsed = time_spins(spins);
    }
    let best = (0..3).map(|_| time_spins(spins)).min().unwrap_or(elapsed);
    let cycles_per_spin = best.as_secs_f64() * f * 1e9 / spins as f64;

    let spins_per_bunch = if cfg!(any(target_arch = "x86", target_arch = "x86_64")) {
        PAUSES_PER_BUNCH
    } else {
        ((TARGET_CYCLES_PER_BUNCH / cycles_per_spin).round() as u32).max(1)
    };
    let cycles_per_bunch = cycles_per_spin * f64::from(spins_per_bunch);
    let bunch_seconds = cycles_per_bunch / (f * 1e9);
    Ok(LambdaUnit { f, seconds_per_lambda: bunch_seconds * f, cycles_per_bunch, spins_per_bunch })
}

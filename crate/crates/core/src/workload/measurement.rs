use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ComponentWatts;
use crate::queues::Algorithm;

/// One benchmark scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    /// Threads per operation class; 2n threads run in total.
    pub n: u32,
    /// Declared clock frequency in GHz. The tool never changes the governor.
    pub f: f64,
    /// Dequeuer parallel section, in bunches.
    pub pw_d: f64,
    /// Enqueuer parallel section, in bunches.
    pub pw_e: f64,
    pub duration_s: f64,
    pub warmup_s: f64,
    /// Occupancy above which measurement pauses while the queue is drained.
    pub size_cap: u64,
    /// Capacity used for bounded algorithms.
    pub capacity: usize,
    pub pin: bool,
    /// Relative tolerance between the two halves of the window for the run to count as steady.
    pub steady_tolerance: f64,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, n: u32, f: f64, pw_d: f64, pw_e: f64) -> Self {
        RunConfig {
            algorithm,
            n,
            f,
            pw_d,
            pw_e,
            duration_s: 2.0,
            warmup_s: 0.5,
            size_cap: 1 << 20,
            capacity: 1 << 21,
            pin: true,
            steady_tolerance: 0.10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be ≥ 1".into()));
        }
        if !(self.pw_d >= 1.0 && self.pw_e >= 1.0) {
            return Err(Error::Config(format!(
                "parallel sections must be ≥ 1 bunch (pw_d = {}, pw_e = {})",
                self.pw_d, self.pw_e
            )));
        }
        if !(self.duration_s > 0.0) || !(self.warmup_s >= 0.0) {
            return Err(Error::Config("duration must be > 0 and warmup ≥ 0".into()));
        }
        if !(self.f > 0.0) {
            return Err(Error::Config("frequency must be > 0".into()));
        }
        if self.size_cap == 0 {
            return Err(Error::Config("size_cap must be > 0".into()));
        }
        if !(self.steady_tolerance > 0.0) {
            return Err(Error::Config("steady-state tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// Observed throughputs (ops per λ) and optional component powers of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub t_d: f64,
    pub t_e: f64,
    pub null_fraction: f64,
    pub elapsed_s: f64,
    pub power: Option<ComponentWatts>,
    pub repetitions: u32,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl Measurement {
    pub fn throughputs(t_d: f64, t_e: f64) -> Self {
        Measurement {
            t_d,
            t_e,
            null_fraction: 0.0,
            elapsed_s: 0.0,
            power: None,
            repetitions: 1,
            flags: Vec::new(),
        }
    }

    pub fn with_power(mut self, power: ComponentWatts) -> Self {
        self.power = Some(power);
        self
    }

    /// Throughput of the queue as a whole.
    pub fn queue_throughput(&self) -> f64 {
        self.t_d.min(self.t_e)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Component-wise median of repeated runs. Power is kept only if every run has it.
pub fn median_measurement(runs: &[Measurement]) -> Result<Measurement> {
    if runs.is_empty() {
        return Err(Error::Argument("no runs to summarize".into()));
    }
    let pick = |get: &dyn Fn(&Measurement) -> f64| {
        let mut v: Vec<f64> = runs.iter().map(get).collect();
        median(&mut v)
    };
    let power = if runs.iter().all(|m| m.power.is_some()) {
        Some(ComponentWatts {
            cpu: pick(&|m| m.power.unwrap().cpu),
            memory: pick(&|m| m.power.unwrap().memory),
            uncore: pick(&|m| m.power.unwrap().uncore),
        })
    } else {
        None
    };
    let mut flags: Vec<String> = runs.iter().flat_map(|m| m.flags.iter().cloned()).collect();
    flags.sort();
    flags.dedup();
    Ok(Measurement {
        t_d: pick(&|m| m.t_d),
        t_e: pick(&|m| m.t_e),
        null_fraction: pick(&|m| m.null_fraction),
        elapsed_s: runs.iter().map(|m| m.elapsed_s).sum(),
        power,
        repetitions: runs.iter().map(|m| m.repetitions).sum(),
        flags,
    })
}

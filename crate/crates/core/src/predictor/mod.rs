//! Evaluates a calibrated profile over the `(pw_d, pw_e)` domain and over application work
//! distributions.

pub mod mandelbrot;

use serde::{Deserialize, Serialize};

use crate::calibrate::CalibrationProfile;
use crate::error::{Error, Result};
use crate::model::power::{PlatformPowers, Topology};
use crate::model::{
    dynamic_power, energy_per_op, solve_combined, total_power, ComponentWatts, PowerBreakdown,
    Regime,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedMetrics {
    pub pw_d: f64,
    pub pw_e: f64,
    pub t_d: f64,
    pub t_e: f64,
    pub t: f64,
    pub regime: Regime,
    pub r_d: f64,
    pub r_e: f64,
    /// Absent when the profile carries no power parameters.
    pub power: Option<PowerBreakdown>,
    pub energy_per_op: Option<f64>,
}

/// The platform used when none is supplied: no static or activation power, one socket.
pub fn bare_platform(profile: &CalibrationProfile) -> PlatformPowers {
    let mut p = PlatformPowers::zero(Topology { sockets: 1, cores_per_socket: 2 * profile.n });
    p.lambda_seconds = profile.lambda_seconds;
    p
}

fn predict_with(
    profile: &CalibrationProfile,
    platform: &PlatformPowers,
    p_ps_override: Option<f64>,
    pw_d: f64,
    pw_e: f64,
) -> Result<PredictedMetrics> {
    let (n, f) = (profile.n, profile.f);
    let basics = profile.model().at(pw_d, pw_e)?;
    let sol = solve_combined(&basics, pw_d, pw_e, n, f)?;
    let t = sol.throughput();
    let power = profile.power.map(|mut params| {
        if let Some(p_ps) = p_ps_override {
            params.p_ps_cpu = p_ps;
        }
        let dynamic = dynamic_power(&params, sol.t_d, sol.t_e, pw_d, pw_e, n, f);
        let (sockets, cores) = platform.placement(n);
        total_power(platform, dynamic, sockets, cores)
    });
    Ok(PredictedMetrics {
        pw_d,
        pw_e,
        t_d: sol.t_d,
        t_e: sol.t_e,
        t,
        regime: sol.regime,
        r_d: sol.r_d,
        r_e: sol.r_e,
        energy_per_op: power.map(|p| energy_per_op(p.total_w, t, platform.lambda_seconds)),
        power,
    })
}

/// Predicts throughputs, power and energy per operation at one point.
pub fn predict_point(
    profile: &CalibrationProfile,
    platform: Option<&PlatformPowers>,
    pw_d: f64,
    pw_e: f64,
) -> Result<PredictedMetrics> {
    let bare = bare_platform(profile);
    predict_with(profile, platform.unwrap_or(&bare), None, pw_d, pw_e)
}

/// Predicts every point of `grid`, in order.
pub fn sweep(
    profile: &CalibrationProfile,
    platform: Option<&PlatformPowers>,
    grid: &[(f64, f64)],
) -> Result<Vec<PredictedMetrics>> {
    if grid.is_empty() {
        return Err(Error::Argument("empty sweep grid".into()));
    }
    grid.iter().map(|&(d, e)| predict_point(profile, platform, d, e)).collect()
}

/// Cartesian product of two axes, `pw_d` major.
pub fn grid(pw_d: &[f64], pw_e: &[f64]) -> Vec<(f64, f64)> {
    pw_d.iter().flat_map(|&d| pw_e.iter().map(move |&e| (d, e))).collect()
}

pub const DEFAULT_AXIS: [f64; 10] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0];

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    pw_d: f64,
    pw_e: f64,
    #[serde(rename = "T_d")]
    t_d: f64,
    #[serde(rename = "T_e")]
    t_e: f64,
    #[serde(rename = "T")]
    t: f64,
    regime: String,
    r_d: f64,
    r_e: f64,
    #[serde(rename = "P_cpu")]
    p_cpu: Option<f64>,
    #[serde(rename = "P_mem")]
    p_mem: Option<f64>,
    #[serde(rename = "P_unc")]
    p_unc: Option<f64>,
    #[serde(rename = "P_total")]
    p_total: Option<f64>,
    energy_per_op: Option<f64>,
}

/// Writes sweep rows as CSV with a header.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[PredictedMetrics], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for m in rows {
        w.serialize(SweepRow {
            pw_d: m.pw_d,
            pw_e: m.pw_e,
            t_d: m.t_d,
            t_e: m.t_e,
            t: m.t,
            regime: m.regime.to_string(),
            r_d: m.r_d,
            r_e: m.r_e,
            p_cpu: m.power.map(|p| p.cpu.total_w),
            p_mem: m.power.map(|p| p.memory.total_w),
            p_unc: m.power.map(|p| p.uncore.total_w),
            p_total: m.power.map(|p| p.total_w),
            energy_per_op: m.energy_per_op,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Queue operations performed at one level of producer work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkBin {
    pub size: f64,
    pub pw_e: f64,
}

/// Application work seen by the queue: producers' parallel sections binned by size, and a
/// constant consumer parallel section.
///
/// Consumers are assumed to back off for their parallel-section length after a Null
/// dequeue, which keeps them in the regime the benchmark calibrates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkDistribution {
    pub bins: Vec<WorkBin>,
    pub pw_d: f64,
    /// Replaces the profile's parallel-section CPU power when set.
    #[serde(default)]
    pub app_p_ps_cpu: Option<f64>,
}

impl WorkDistribution {
    pub fn validate(&self) -> Result<()> {
        if self.bins.is_empty() {
            return Err(Error::Argument("work distribution has no bins".into()));
        }
        if let Some(b) = self.bins.iter().find(|b| !(b.size > 0.0) || !(b.pw_e > 0.0)) {
            return Err(Error::Argument(format!("invalid bin {b:?}")));
        }
        if !(self.pw_d > 0.0) {
            return Err(Error::Argument("pw_d must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinPrediction {
    pub size: f64,
    pub pw_e: f64,
    pub throughput: f64,
    pub time_s: f64,
    pub power: Option<ComponentWatts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppPrediction {
    pub time_total_s: f64,
    /// Time-weighted mean power per component, plus the total.
    pub avg_power: Option<AvgPower>,
    pub energy_total_j: Option<f64>,
    pub bins: Vec<BinPrediction>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvgPower {
    pub cpu: f64,
    pub memory: f64,
    pub uncore: f64,
    pub total: f64,
}

/// Combines independent steady-state intervals: `Time = Σ size_i·λ/T_i` and each power is
/// the time-weighted mean of the per-interval powers.
pub fn predict_application(
    profile: &CalibrationProfile,
    platform: Option<&PlatformPowers>,
    dist: &WorkDistribution,
) -> Result<AppPrediction> {
    dist.validate()?;
    let bare = bare_platform(profile);
    let platform = platform.unwrap_or(&bare);
    let lambda = platform.lambda_seconds;
    let p_sma = profile.points.p_sma;
    let mut flags = Vec::new();
    let pw_d = if dist.pw_d < p_sma {
        flags.push(format!("pw_d = {} raised to p_sma = {p_sma}", dist.pw_d));
        p_sma
    } else {
        dist.pw_d
    };

    let mut bins = Vec::with_capacity(dist.bins.len());
    let mut clamped = 0usize;
    for b in &dist.bins {
        let pw_e = if b.pw_e < p_sma {
            clamped += 1;
            p_sma
        } else {
            b.pw_e
        };
        let m = predict_with(profile, platform, dist.app_p_ps_cpu, pw_d, pw_e)?;
        let time_s = if m.t > 0.0 { b.size * lambda / m.t } else { f64::INFINITY };
        if !time_s.is_finite() {
            flags.push(format!("bin at pw_e = {} has zero throughput", b.pw_e));
        }
        bins.push(BinPrediction {
            size: b.size,
            pw_e: b.pw_e,
            throughput: m.t,
            time_s,
            power: m.power.map(|p| p.totals()),
        });
    }
    if clamped > 0 {
        flags.push(format!("{clamped} bin(s) below p_sma = {p_sma} evaluated at p_sma"));
    }

    let time_total_s: f64 = bins.iter().map(|b| b.time_s).sum();
    let avg_power = if bins.iter().all(|b| b.power.is_some()) && time_total_s.is_finite() {
        let mut acc = ComponentWatts::default();
        for b in &bins {
            acc = acc + b.power.unwrap() * b.time_s;
        }
        let avg = acc * (1.0 / time_total_s);
        Some(AvgPower { cpu: avg.cpu, memory: avg.memory, uncore: avg.uncore, total: avg.total() })
    } else {
        None
    };
    let energy_total_j = avg_power.map(|p| p.total * time_total_s);
    Ok(AppPrediction { time_total_s, avg_power, energy_total_j, bins, flags })
}

impl AppPrediction {
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }
}

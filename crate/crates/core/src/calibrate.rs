//! Instantiates the model from measurements at eight `(pw_d, pw_e)` points.
//!
//! Three amounts of work are used: `p_sma` (maximal intra-contention), `p_mid` (low
//! intra-contention but short enough for the queue to stay contended) and `p_big`
//! (negligible contention).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::power::PlatformPowers;
use crate::model::{
    low_contention_throughput, ratio, Basic, BasicThroughputModel, ComponentWatts, CurveParams,
    DynamicPowerParams,
};
use crate::workload::Measurement;

/// Smallest accepted `cw` estimate, in bunches.
pub const CW_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoints {
    pub p_sma: f64,
    pub p_mid: f64,
    pub p_big: f64,
}

impl Default for CalibrationPoints {
    fn default() -> Self {
        CalibrationPoints { p_sma: 1.0, p_mid: 20.0, p_big: 1000.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwPoint {
    pub pw_d: f64,
    pub pw_e: f64,
}

impl PwPoint {
    pub fn new(pw_d: f64, pw_e: f64) -> Self {
        PwPoint { pw_d, pw_e }
    }
}

impl fmt::Display for PwPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.pw_d, self.pw_e)
    }
}

impl CalibrationPoints {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_sma > 0.0 && self.p_sma < self.p_mid && self.p_mid < self.p_big) {
            return Err(Error::Config(format!(
                "need 0 < p_sma < p_mid < p_big, got {} / {} / {}",
                self.p_sma, self.p_mid, self.p_big
            )));
        }
        Ok(())
    }

    /// The eight points, as `(pw_d, pw_e)`.
    pub fn all(&self) -> Vec<PwPoint> {
        let CalibrationPoints { p_sma: s, p_mid: m, p_big: b } = *self;
        [(m, s), (m, b), (s, m), (b, m), (s, s), (b, s), (b, b), (s, b)]
            .into_iter()
            .map(|(d, e)| PwPoint::new(d, e))
            .collect()
    }
}

/// The eight default calibration points.
pub fn calibration_points() -> Vec<PwPoint> {
    CalibrationPoints::default().all()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationInputs {
    pub algorithm: String,
    pub n: u32,
    pub f: f64,
    pub lambda_seconds: f64,
    pub points: CalibrationPoints,
    pub measurements: Vec<(PwPoint, Measurement)>,
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

impl CalibrationInputs {
    pub fn get(&self, pw_d: f64, pw_e: f64) -> Result<&Measurement> {
        self.measurements
            .iter()
            .find(|(p, _)| same(p.pw_d, pw_d) && same(p.pw_e, pw_e))
            .map(|(_, m)| m)
            .ok_or_else(|| Error::Calibration(format!("no measurement at ({pw_d}, {pw_e})")))
    }

    /// Calibration points without a measurement.
    pub fn missing(&self) -> Vec<PwPoint> {
        self.points
            .all()
            .into_iter()
            .filter(|p| self.get(p.pw_d, p.pw_e).is_err())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.points.validate()?;
        if self.n == 0 || !(self.f > 0.0) || !(self.lambda_seconds > 0.0) {
            return Err(Error::Config("need n ≥ 1, f > 0 and lambda_seconds > 0".into()));
        }
        let missing = self.missing();
        if !missing.is_empty() {
            let list: Vec<String> = missing.iter().map(ToString::to_string).collect();
            return Err(Error::Calibration(format!(
                "missing calibration points (pw_d, pw_e): {}",
                list.join(", ")
            )));
        }
        for (p, m) in &self.measurements {
            if !(m.t_d > 0.0 && m.t_e > 0.0 && m.t_d.is_finite() && m.t_e.is_finite()) {
                return Err(Error::Calibration(format!(
                    "throughputs at {p} must be positive, got T_d = {}, T_e = {}",
                    m.t_d, m.t_e
                )));
            }
        }
        Ok(())
    }

    fn nf(&self) -> f64 {
        f64::from(self.n) * self.f
    }
}

/// Try costs estimated from the low-contention points, in bunches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowContentionFit {
    pub cw_dm: f64,
    pub cw_dp: f64,
    pub cw_ep: f64,
    pub cw_em: f64,
}

/// Throughputs at `p_sma`, in ops per λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchors {
    pub anchor_dm: f64,
    pub anchor_dp: f64,
    pub anchor_ep: f64,
    pub anchor_em: f64,
}

fn clamp_cw(name: &str, raw: f64, flags: &mut Vec<String>) -> f64 {
    if raw >= CW_FLOOR {
        raw
    } else {
        flags.push(format!("{name} estimate {raw:.6} clamped to {CW_FLOOR}"));
        CW_FLOOR
    }
}

/// Estimates the four try costs from `(p_mid, p_sma)`, `(p_mid, p_big)`, `(p_big, p_mid)`
/// and `(p_sma, p_mid)`, where every class is assumed to run without intra-contention.
pub fn fit_low_contention(
    inputs: &CalibrationInputs,
    flags: &mut Vec<String>,
) -> Result<LowContentionFit> {
    let CalibrationPoints { p_sma, p_mid, p_big } = inputs.points;
    let nf = inputs.nf();

    // Growing queue: every dequeue returns an item.
    let a = inputs.get(p_mid, p_sma)?;
    if a.t_d >= a.t_e {
        flags.push(format!(
            "premise: T_d < T_e expected at ({p_mid}, {p_sma}), got T_d = {} ≥ T_e = {}",
            a.t_d, a.t_e
        ));
    }
    let cw_dm = clamp_cw("cw_d-", nf / a.t_d - p_mid, flags);

    // Mostly empty: item dequeues fill T_e/T_d^- of the time, Null dequeues the rest.
    let b = inputs.get(p_mid, p_big)?;
    let d_minus = low_contention_throughput(f64::from(inputs.n), inputs.f, p_mid, cw_dm);
    let slack = 1.0 - b.t_e / d_minus;
    let cw_dp = if slack > 0.0 && b.t_d > b.t_e {
        clamp_cw("cw_d+", nf / ((b.t_d - b.t_e) / slack) - p_mid, flags)
    } else {
        flags.push(format!(
            "premise: mostly-empty queue expected at ({p_mid}, {p_big}); cw_d+ set to cw_d-"
        ));
        cw_dm
    };

    let c = inputs.get(p_big, p_mid)?;
    if c.t_e <= c.t_d {
        flags.push(format!(
            "premise: T_e > T_d expected at ({p_big}, {p_mid}), got T_e = {} ≤ T_d = {}",
            c.t_e, c.t_d
        ));
    }
    let cw_ep = clamp_cw("cw_e+", nf / c.t_e - p_mid, flags);

    // Enqueues interpolate between T_e^+ and T_e^- by the dequeuers' parallel-section share.
    let d = inputs.get(p_sma, p_mid)?;
    if d.t_d < d.t_e {
        flags.push(format!(
            "premise: T_d ≥ T_e expected at ({p_sma}, {p_mid}), got T_d = {} < T_e = {}",
            d.t_d, d.t_e
        ));
    }
    let e_plus = low_contention_throughput(f64::from(inputs.n), inputs.f, p_mid, cw_ep);
    let rho = (d.t_d * p_sma / nf).clamp(0.0, 1.0);
    let e_minus = if 1.0 - rho > 1e-9 { (d.t_e - rho * e_plus) / (1.0 - rho) } else { f64::NAN };
    let cw_em = if e_minus > 0.0 {
        clamp_cw("cw_e-", nf / e_minus - p_mid, flags)
    } else {
        flags.push(format!("cw_e- not identifiable at ({p_sma}, {p_mid}); set to cw_e+"));
        cw_ep
    };

    Ok(LowContentionFit { cw_dm, cw_dp, cw_ep, cw_em })
}

/// Estimates the throughputs at `p_sma` from `(p_sma, p_mid)`, `(p_sma, p_sma)` and
/// `(p_mid, p_sma)`.
pub fn fit_high_contention(
    inputs: &CalibrationInputs,
    cw: &LowContentionFit,
    flags: &mut Vec<String>,
) -> Result<Anchors> {
    let CalibrationPoints { p_sma, p_mid, .. } = inputs.points;
    let n = f64::from(inputs.n);
    let nf = inputs.nf();
    let lc = |cw: f64| low_contention_throughput(n, inputs.f, p_sma, cw);

    // At both points the queue is mostly empty, so T_d - T_e = Y - (Y/X)·T_e with
    // X = T_d^-(p_sma) and Y = T_d^+(p_sma).
    let a = inputs.get(p_sma, p_mid)?;
    let b = inputs.get(p_sma, p_sma)?;
    let fallback = |flags: &mut Vec<String>, why: &str| {
        flags.push(format!("{why}; dequeue anchors set to low-contention values"));
        (lc(cw.cw_dm), lc(cw.cw_dp))
    };
    let (anchor_dm, anchor_dp) = if b.t_d >= b.t_e {
        let det = b.t_e - a.t_e;
        if det.abs() <= 1e-12 * a.t_e.max(b.t_e) {
            fallback(flags, "singular dequeue-anchor system")
        } else {
            let slope = ((a.t_d - a.t_e) - (b.t_d - b.t_e)) / det;
            let y = (a.t_d - a.t_e) + slope * a.t_e;
            if slope > 0.0 && y > 0.0 {
                (y / slope, y)
            } else {
                fallback(flags, "dequeue-anchor system has no positive solution")
            }
        }
    } else {
        let x = b.t_d;
        let slack = 1.0 - a.t_e / x;
        let y = if slack > 0.0 { (a.t_d - a.t_e) / slack } else { f64::NAN };
        if y > 0.0 {
            (x, y)
        } else {
            let (_, dp) = fallback(flags, "T_d^+(p_sma) not identifiable");
            (x, dp)
        }
    };

    let anchor_ep = inputs.get(p_mid, p_sma)?.t_e;
    let anchor_em = if b.t_d >= b.t_e {
        let rho = (b.t_d * p_sma / nf).clamp(0.0, 1.0);
        let em = if 1.0 - rho > 1e-9 { (b.t_e - rho * anchor_ep) / (1.0 - rho) } else { f64::NAN };
        if em > 0.0 {
            em
        } else {
            flags.push("T_e^-(p_sma) not identifiable; set to T_e^+(p_sma)".into());
            anchor_ep
        }
    } else {
        anchor_ep
    };

    Ok(Anchors { anchor_dm, anchor_dp, anchor_ep, anchor_em })
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let d = det3(&m);
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !(d.abs() > 1e-12 * scale.powi(3)) {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut mk = m;
        for row in 0..3 {
            mk[row][k] = rhs[row];
        }
        *slot = det3(&mk) / d;
    }
    Some(out)
}

fn solve2(m: [[f64; 2]; 2], rhs: [f64; 2]) -> Option<[f64; 2]> {
    let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !(d.abs() > 1e-12 * scale * scale) {
        return None;
    }
    Some([(rhs[0] * m[1][1] - m[0][1] * rhs[1]) / d, (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / d])
}

/// Fits the dynamic power constants from `(p_big, p_sma)`, `(p_sma, p_big)` and
/// `(p_big, p_big)`.
///
/// Measured powers are totals; the static and activation parts of `platform` are removed
/// first. The retry-loop ratios come from the measured throughputs, and the small ratios
/// of the contention-free class are kept in the solve rather than neglected, so data
/// generated by the model itself is inverted exactly. Returns `None` (and a flag) when a
/// point has no power sample.
pub fn fit_power(
    inputs: &CalibrationInputs,
    platform: Option<&PlatformPowers>,
    flags: &mut Vec<String>,
) -> Result<Option<DynamicPowerParams>> {
    let CalibrationPoints { p_sma, p_big, .. } = inputs.points;
    let pts = [(p_big, p_sma), (p_sma, p_big), (p_big, p_big)];
    let mut samples = Vec::with_capacity(3);
    for &(d, e) in &pts {
        let m = inputs.get(d, e)?;
        let Some(power) = m.power else {
            flags.push(format!("no power sample at ({d}, {e}); profile is throughput-only"));
            return Ok(None);
        };
        let baseline = match platform {
            Some(pl) => {
                let (sockets, cores) = pl.placement(inputs.n);
                crate::model::total_power(pl, ComponentWatts::default(), sockets, cores).totals()
            }
            None => ComponentWatts::default(),
        };
        let dynamic = ComponentWatts {
            cpu: power.cpu - baseline.cpu,
            memory: power.memory - baseline.memory,
            uncore: power.uncore - baseline.uncore,
        };
        let r_e = ratio(m.t_e, e, inputs.n, inputs.f);
        let r_d = ratio(m.t_d, d, inputs.n, inputs.f);
        samples.push((dynamic, r_e, r_d));
    }
    let n = f64::from(inputs.n);

    let passive = |get: fn(&ComponentWatts) -> f64, what: &str, flags: &mut Vec<String>| {
        let (w1, re1, rd1) = samples[0];
        let (w2, re2, rd2) = samples[1];
        match solve2([[re1, rd1], [re2, rd2]], [get(&w1), get(&w2)]) {
            Some([c_e, c_d]) => (c_e, c_d),
            None => {
                flags.push(format!("{what} power system singular; using single-point estimates"));
                (get(&w1) / re1.max(1e-12), get(&w2) / rd2.max(1e-12))
            }
        }
    };
    let (c_e_mem, c_d_mem) = passive(|w| w.memory, "memory", flags);
    let (c_e_unc, c_d_unc) = passive(|w| w.uncore, "uncore", flags);

    // Row k: C_k = n·[r_e·P_rl_e + r_d·P_rl_d + (2 - r_e - r_d)·P_ps].
    let rows: [[f64; 3]; 3] = std::array::from_fn(|k| {
        let (_, re, rd) = samples[k];
        [n * re, n * rd, n * (2.0 - re - rd)]
    });
    let rhs: [f64; 3] = std::array::from_fn(|k| samples[k].0.cpu);
    let (p_rl_cpu_e, p_rl_cpu_d, p_ps_cpu) = match solve3(rows, rhs) {
        Some([e, d, ps]) => (e, d, ps),
        None => {
            flags.push("cpu power system singular; using single-point estimates".into());
            let ps = rhs[2] / (2.0 * n);
            let (_, re1, _) = samples[0];
            let (_, _, rd2) = samples[1];
            let e = rhs[0] / (n * re1.max(1e-12)) - (2.0 / re1.max(1e-12) - 1.0) * ps;
            let d = rhs[1] / (n * rd2.max(1e-12)) - (2.0 / rd2.max(1e-12) - 1.0) * ps;
            (e, d, ps)
        }
    };

    let params =
        DynamicPowerParams { p_ps_cpu, p_rl_cpu_e, p_rl_cpu_d, c_e_mem, c_d_mem, c_e_unc, c_d_unc };
    for (name, v) in [
        ("p_ps_cpu", p_ps_cpu),
        ("p_rl_cpu_e", p_rl_cpu_e),
        ("p_rl_cpu_d", p_rl_cpu_d),
        ("c_e_mem", c_e_mem),
        ("c_d_mem", c_d_mem),
    ] {
        if v < 0.0 {
            flags.push(format!("power parameter {name} is negative ({v:.6})"));
        }
    }
    Ok(Some(params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputParams {
    pub cw_dm: f64,
    pub cw_dp: f64,
    pub cw_ep: f64,
    pub cw_em: f64,
    pub anchor_dm: f64,
    pub anchor_dp: f64,
    pub anchor_ep: f64,
    pub anchor_em: f64,
}

impl ThroughputParams {
    pub fn from_parts(cw: LowContentionFit, a: Anchors) -> Self {
        ThroughputParams {
            cw_dm: cw.cw_dm,
            cw_dp: cw.cw_dp,
            cw_ep: cw.cw_ep,
            cw_em: cw.cw_em,
            anchor_dm: a.anchor_dm,
            anchor_dp: a.anchor_dp,
            anchor_ep: a.anchor_ep,
            anchor_em: a.anchor_em,
        }
    }

    pub fn from_model(m: &BasicThroughputModel) -> Self {
        ThroughputParams {
            cw_dm: m.dequeue_item.cw,
            cw_dp: m.dequeue_empty.cw,
            cw_ep: m.enqueue_free.cw,
            cw_em: m.enqueue_contended.cw,
            anchor_dm: m.dequeue_item.anchor,
            anchor_dp: m.dequeue_empty.anchor,
            anchor_ep: m.enqueue_free.anchor,
            anchor_em: m.enqueue_contended.anchor,
        }
    }

    pub fn model(&self, n: u32, f: f64, p_sma: f64) -> BasicThroughputModel {
        let c = |cw, anchor| CurveParams { cw, anchor };
        BasicThroughputModel {
            n,
            f,
            p_sma,
            dequeue_empty: c(self.cw_dp, self.anchor_dp),
            dequeue_item: c(self.cw_dm, self.anchor_dm),
            enqueue_free: c(self.cw_ep, self.anchor_ep),
            enqueue_contended: c(self.cw_em, self.anchor_em),
        }
    }
}

/// A calibrated model for one (algorithm, n, f).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProfile {
    pub algorithm: String,
    pub n: u32,
    pub f: f64,
    pub lambda_seconds: f64,
    pub points: CalibrationPoints,
    pub throughput: ThroughputParams,
    pub power: Option<DynamicPowerParams>,
    pub flags: Vec<String>,
}

impl CalibrationProfile {
    pub fn model(&self) -> BasicThroughputModel {
        self.throughput.model(self.n, self.f, self.points.p_sma)
    }

    /// Pretty-printed JSON with sorted keys.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: CalibrationProfile = serde_json::from_str(text)?;
        p.points.validate()?;
        if p.n == 0 || !(p.f > 0.0) || !(p.lambda_seconds > 0.0) {
            return Err(Error::Config("profile needs n ≥ 1, f > 0 and lambda_seconds > 0".into()));
        }
        Ok(p)
    }
}

/// Flags grid points where a fitted curve pair breaks `T_d^+ ≥ T_d^-` or `T_e^+ ≥ T_e^-`.
pub fn check_ordering(model: &BasicThroughputModel, p_big: f64, flags: &mut Vec<String>) {
    let steps = 64;
    let ratio = (p_big / model.p_sma).powf(1.0 / f64::from(steps));
    let mut worst: [Option<f64>; 2] = [None, None];
    for k in 0..=steps {
        let pw = model.p_sma * ratio.powi(k as i32);
        let t = |b| model.throughput(b, pw).unwrap_or(f64::NAN);
        if t(Basic::DequeueEmpty) < t(Basic::DequeueItem) && worst[0].is_none() {
            worst[0] = Some(pw);
        }
        if t(Basic::EnqueueFree) < t(Basic::EnqueueContended) && worst[1].is_none() {
            worst[1] = Some(pw);
        }
    }
    if let Some(pw) = worst[0] {
        flags.push(format!("fitted T_d^+ < T_d^- from pw = {pw:.3}"));
    }
    if let Some(pw) = worst[1] {
        flags.push(format!("fitted T_e^+ < T_e^- from pw = {pw:.3}"));
    }
}

/// Runs the whole calibration.
pub fn build_profile(
    inputs: &CalibrationInputs,
    platform: Option<&PlatformPowers>,
) -> Result<CalibrationProfile> {
    inputs.validate()?;
    let mut flags = Vec::new();
    for (p, m) in &inputs.measurements {
        for f in &m.flags {
            if f != "simulated" {
                flags.push(format!("measurement {p}: {f}"));
            }
        }
    }
    let cw = fit_low_contention(inputs, &mut flags)?;
    let anchors = fit_high_contention(inputs, &cw, &mut flags)?;
    let throughput = ThroughputParams::from_parts(cw, anchors);
    let model = throughput.model(inputs.n, inputs.f, inputs.points.p_sma);
    check_ordering(&model, inputs.points.p_big, &mut flags);
    let power = fit_power(inputs, platform, &mut flags)?;
    Ok(CalibrationProfile {
        algorithm: inputs.algorithm.clone(),
        n: inputs.n,
        f: inputs.f,
        lambda_seconds: platform.map_or(inputs.lambda_seconds, |p| p.lambda_seconds),
        points: inputs.points,
        throughput,
        power,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs_with(values: &[((f64, f64), (f64, f64))], n: u32, f: f64) -> CalibrationInputs {
        CalibrationInputs {
            algorithm: "test".into(),
            n,
            f,
            lambda_seconds: 1e-6,
            points: CalibrationPoints::default(),
            measurements: values
                .iter()
                .map(|&((d, e), (td, te))| (PwPoint::new(d, e), Measurement::throughputs(td, te)))
                .collect(),
        }
    }

    #[test]
    fn eight_distinct_points() {
        let pts = calibration_points();
        assert_eq!(pts.len(), 8);
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                assert_ne!(a, b);
            }
        }
        assert!(pts.contains(&PwPoint::new(1000.0, 1000.0)));
        assert!(pts.contains(&PwPoint::new(20.0, 1.0)));
    }

    fn filler() -> Vec<((f64, f64), (f64, f64))> {
        calibration_points().iter().map(|p| ((p.pw_d, p.pw_e), (0.05, 0.06))).collect()
    }

    #[test]
    fn cw_dm_from_growing_point() {
        let mut v = filler();
        v[0].1 = (0.08, 0.5);
        let inputs = inputs_with(&v, 2, 1.0);
        let mut flags = Vec::new();
        let fit = fit_low_contention(&inputs, &mut flags).unwrap();
        assert!((fit.cw_dm - 5.0).abs() < 1e-12);
    }

    #[test]
    fn cw_dp_round_trip() {
        let (n, f, cw_dm, cw_dp) = (2u32, 1.0, 5.0, 10.0);
        let d_minus = low_contention_throughput(2.0, f, 20.0, cw_dm);
        let d_plus = low_contention_throughput(2.0, f, 20.0, cw_dp);
        let t_e = 0.01;
        let t_d = t_e + (1.0 - t_e / d_minus) * d_plus;
        let mut v = filler();
        v[0].1 = (d_minus, 0.5);
        v[1].1 = (t_d, t_e);
        let inputs = inputs_with(&v, n, f);
        let fit = fit_low_contention(&inputs, &mut Vec::new()).unwrap();
        assert!((fit.cw_dp - cw_dp).abs() < 1e-9 * cw_dp);
    }

    #[test]
    fn negative_estimate_is_clamped_and_flagged() {
        let mut v = filler();
        v[0].1 = (0.2, 0.5); // 2/0.2 - 20 < 0
        let inputs = inputs_with(&v, 2, 1.0);
        let mut flags = Vec::new();
        let fit = fit_low_contention(&inputs, &mut flags).unwrap();
        assert_eq!(fit.cw_dm, CW_FLOOR);
        assert!(flags.iter().any(|f| f.contains("clamped")));
    }

    #[test]
    fn dequeue_bound_enqueue_anchor_defaults() {
        let mut v = filler();
        v[4].1 = (0.1, 0.3); // T_d(1,1) < T_e(1,1)
        v[0].1 = (0.08, 0.5);
        let inputs = inputs_with(&v, 2, 1.0);
        let mut flags = Vec::new();
        let cw = fit_low_contention(&inputs, &mut flags).unwrap();
        let a = fit_high_contention(&inputs, &cw, &mut flags).unwrap();
        assert_eq!(a.anchor_em, a.anchor_ep);
        assert_eq!(a.anchor_ep, 0.5);
        assert_eq!(a.anchor_dm, 0.1);
    }

    fn power_at(cpu: f64, mem: f64) -> ComponentWatts {
        ComponentWatts { cpu, memory: mem, uncore: 0.0 }
    }

    #[test]
    fn missing_points_are_listed() {
        let mut inputs = inputs_with(&filler(), 2, 1.0);
        inputs.measurements.remove(3);
        let err = build_profile(&inputs, None).unwrap_err().to_string();
        assert!(err.contains("(1000, 20)"), "{err}");
    }

    #[test]
    fn throughput_only_profile() {
        let inputs = inputs_with(&filler(), 2, 1.0);
        let p = build_profile(&inputs, None).unwrap();
        assert!(p.power.is_none());
        assert!(p.flags.iter().any(|f| f.contains("throughput-only")));
        let json = p.to_json().unwrap();
        assert!(json.contains("\"power\": null"));
        assert_eq!(CalibrationProfile::from_json(&json).unwrap(), p);
        assert_eq!(build_profile(&inputs, None).unwrap().to_json().unwrap(), json);
    }

    #[test]
    fn power_with_contention_free_ratio_zero() {
        // T_e·p_sma/(n·f) = 0.5 at (1000, 1), and the dequeuers never wait.
        let (n, f) = (3u32, 1.0);
        let nf = 3.0;
        let mut v = filler();
        let idx = |d: f64, e: f64| {
            calibration_points().iter().position(|p| p.pw_d == d && p.pw_e == e).unwrap()
        };
        v[idx(1000.0, 1.0)].1 = (nf / 1000.0, 1.5);
        v[idx(1.0, 1000.0)].1 = (1.5, nf / 1000.0);
        v[idx(1000.0, 1000.0)].1 = (nf / 1000.0, nf / 1000.0);
        let mut inputs = inputs_with(&v, n, f);
        for (p, m) in inputs.measurements.iter_mut() {
            m.power = Some(match (p.pw_d, p.pw_e) {
                (1000.0, 1.0) => power_at(7.5, 1.0),
                (1.0, 1000.0) => power_at(7.5, 1.0),
                (1000.0, 1000.0) => power_at(6.0, 0.0),
                _ => power_at(1.0, 1.0),
            });
        }
        let params = fit_power(&inputs, None, &mut Vec::new()).unwrap().unwrap();
        assert!((params.c_e_mem - 2.0).abs() < 1e-12);
        assert!((params.p_ps_cpu - 1.0).abs() < 1e-12);
        // 7.5 = 3·(0.5·P_rl + 1.5·1)
        assert!((params.p_rl_cpu_e - 2.0).abs() < 1e-12);
    }
}

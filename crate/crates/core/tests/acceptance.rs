//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits non-zero when a
//! gating criterion fails.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qwb_core::calibrate::{
    build_profile, CalibrationInputs, CalibrationPoints, CalibrationProfile, PwPoint,
    ThroughputParams,
};
use qwb_core::model::{
    cpu_dynamic_power, dynamic_power, passive_dynamic_power, ratio, solve_combined,
    BasicThroughputs, ComponentPlatform, ComponentWatts, DynamicPowerParams, PlatformComponents,
    PlatformPowers, Regime, Topology,
};

use qwb_core::predictor::mandelbrot::{mandelbrot_workload, IterationCost, ModeSummary};
use qwb_core::predictor::{predict_application, predict_point, WorkBin, WorkDistribution};
use qwb_core::queues::{new_queue, Algorithm};
use qwb_core::sim::{simulate, simulate_calibration_suite, SimParams, TryCosts};
use qwb_core::workload::{
    calibrate_pause_unit, run_benchmark, Measurement, RunConfig, FLAG_NON_STEADY,
};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::{Fail, Pass, Skip};

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Within `tol` relative, with `scale` as the floor of the denominator.
fn close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(scale)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

// ---------------------------------------------------------------------------------------
// 1. Combination theorems.

fn random_basics(rng: &mut ChaCha8Rng, k: f64) -> BasicThroughputs {
    // A thread cannot spend more than all of its time in the parallel section: k·T_d ≤ 1.
    let d_hi = (1.0 / k).min(10.0);
    let (mut d1, mut d2) = (log_uniform(rng, 1e-3, d_hi), log_uniform(rng, 1e-3, d_hi));
    let (mut e1, mut e2) = (log_uniform(rng, 1e-3, 10.0), log_uniform(rng, 1e-3, 10.0));
    if rng.gen_bool(0.05) {
        d2 = d1;
    }
    if rng.gen_bool(0.05) {
        e2 = e1;
    }
    if d1 < d2 {
        std::mem::swap(&mut d1, &mut d2);
    }
    if e1 < e2 {
        std::mem::swap(&mut e1, &mut e2);
    }
    BasicThroughputs { d_plus: d1, d_minus: d2, e_plus: e1, e_minus: e2 }
}

fn criterion_1() -> Verdict {
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut regimes = [0usize; 3];
    let (mut worst_deq, mut worst_enq) = (0.0f64, 0.0f64);
    for case in 0..100_000 {
        let n = rng.gen_range(1..=8u32);
        let f = rng.gen_range(0.5..4.0);
        let k = 2.0 * (1.0 - rng.gen::<f64>());
        let pw_d = k * f64::from(n) * f;
        let pw_e = log_uniform(&mut rng, 1.0, 1000.0);
        let b = random_basics(&mut rng, k);

        let grow = b.e_plus > b.d_minus;
        let lhs = b.e_minus / b.d_minus;
        let rhs = 1.0 - k * (b.e_plus - b.e_minus);
        let borderline = (lhs - rhs).abs() <= TOL * lhs.abs().max(rhs.abs()).max(1.0);
        let in_comp = lhs <= rhs;
        if !(grow || in_comp || borderline) {
            return Fail(format!("case {case}: no regime condition holds for {b:?}, k = {k}"));
        }

        // (a)
        let sol = match solve_combined(&b, pw_d, pw_e, n, f) {
            Ok(s) => s,
            Err(e) => return Fail(format!("case {case}: no solution: {e}")),
        };
        // (b)
        let growing_out = matches!(sol.regime, Regime::Growing | Regime::Averaged);
        if sol.growing.is_some() != grow || growing_out != grow {
            return Fail(format!("case {case}: growing branch {:?} with T_e+ > T_d- = {grow}", sol.regime));
        }
        if let Some(g) = sol.growing {
            if g.t_d != b.d_minus || g.t_e != b.e_plus || !(g.t_e > g.t_d) {
                return Fail(format!("case {case}: growing solution {g:?} for {b:?}"));
            }
        }
        // (c)
        if !borderline && sol.mostly_empty.is_some() != in_comp {
            return Fail(format!("case {case}: mostly-empty branch present = {}, in-comp = {in_comp}", sol.mostly_empty.is_some()));
        }
        if let Some(m) = sol.mostly_empty {
            let s = 1.0 - b.d_plus / b.d_minus;
            let deq = (m.t_e * s - (m.t_d - b.d_plus)).abs() / m.t_d.max(b.d_plus);
            let busy = k * m.t_d;
            let enq = (m.t_e - (busy * b.e_plus + (1.0 - busy) * b.e_minus)).abs() / m.t_e.max(b.e_plus);
            worst_deq = worst_deq.max(deq);
            worst_enq = worst_enq.max(enq);
            if deq > TOL || enq > TOL {
                return Fail(format!("case {case}: residuals deq {deq:e}, enq {enq:e} for {b:?}, k = {k}"));
            }
            // (d)
            let inside = |v: f64, lo: f64, hi: f64| v >= lo * (1.0 - TOL) && v <= hi * (1.0 + TOL);
            if !inside(m.t_d, b.d_minus, b.d_plus)
                || !inside(m.t_e, b.e_minus, b.e_plus)
                || m.t_e > m.t_d * (1.0 + TOL)
            {
                return Fail(format!("case {case}: box constraints violated by {m:?} for {b:?}, k = {k}"));
            }
        }
        let expected = match (sol.growing, sol.mostly_empty) {
            (Some(g), Some(m)) => (Regime::Averaged, 0.5 * (g.t_d + m.t_d), 0.5 * (g.t_e + m.t_e)),
            (Some(g), None) => (Regime::Growing, g.t_d, g.t_e),
            (None, Some(m)) => (Regime::MostlyEmpty, m.t_d, m.t_e),
            (None, None) => return Fail(format!("case {case}: no branch reported")),
        };
        if sol.regime != expected.0 || !close(sol.t_d, expected.1, 1e-12, 0.0) || !close(sol.t_e, expected.2, 1e-12, 0.0) {
            return Fail(format!("case {case}: combined output {sol:?} disagrees with its branches"));
        }
        if !(0.0..=1.0).contains(&sol.r_d) || !(0.0..=1.0).contains(&sol.r_e) {
            return Fail(format!("case {case}: ratios out of range {sol:?}"));
        }
        regimes[match sol.regime {
            Regime::Growing => 0,
            Regime::MostlyEmpty => 1,
            Regime::Averaged => 2,
        }] += 1;
    }
    Pass(format!(
        "1e5 cases (growing {}, mostly-empty {}, averaged {}); max residuals deq {worst_deq:.1e}, enq {worst_enq:.1e}",
        regimes[0], regimes[1], regimes[2]
    ))
}

// ---------------------------------------------------------------------------------------
// 2. Power algebra.

fn random_power(rng: &mut ChaCha8Rng) -> DynamicPowerParams {
    DynamicPowerParams {
        p_ps_cpu: rng.gen_range(0.0..20.0),
        p_rl_cpu_e: rng.gen_range(0.0..20.0),
        p_rl_cpu_d: rng.gen_range(0.0..20.0),
        c_e_mem: rng.gen_range(0.0..10.0),
        c_d_mem: rng.gen_range(0.0..10.0),
        c_e_unc: rng.gen_range(0.0..10.0),
        c_d_unc: rng.gen_range(0.0..10.0),
    }
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut worst = 0.0f64;
    for case in 0..10_000 {
        let n = rng.gen_range(1..=16u32);
        let f = rng.gen_range(0.5..4.0);
        let (pw_d, pw_e) = (log_uniform(&mut rng, 1.0, 1000.0), log_uniform(&mut rng, 1.0, 1000.0));
        let nf = f64::from(n) * f;
        let t_d = rng.gen::<f64>() * nf / pw_d;
        let t_e = rng.gen::<f64>() * nf / pw_e;
        let p = random_power(&mut rng);

        // Per-thread power is the time-weighted mix of retry-loop and parallel-section
        // power; threads add up without interference.
        let r_e = 1.0 - t_e * pw_e / nf;
        let r_d = 1.0 - t_d * pw_d / nf;
        let enqueuer = r_e * p.p_rl_cpu_e + (1.0 - r_e) * p.p_ps_cpu;
        let dequeuer = r_d * p.p_rl_cpu_d + (1.0 - r_d) * p.p_ps_cpu;
        let composed: f64 = (0..n).map(|_| enqueuer + dequeuer).sum();

        let lib = cpu_dynamic_power(&p, t_d, t_e, pw_d, pw_e, n, f);
        let via_ratio = f64::from(n)
            * (ratio(t_e, pw_e, n, f) * p.p_rl_cpu_e
                + (1.0 - ratio(t_e, pw_e, n, f)) * p.p_ps_cpu
                + ratio(t_d, pw_d, n, f) * p.p_rl_cpu_d
                + (1.0 - ratio(t_d, pw_d, n, f)) * p.p_ps_cpu);
        let err = rel(lib, composed).max(rel(lib, via_ratio));
        worst = worst.max(err);
        if err > 1e-12 {
            return Fail(format!("case {case}: cpu power {lib} vs composed {composed} ({err:e})"));
        }
    }

    for case in 0..10_000 {
        let (c_e, c_d) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
        let (re1, rd1) = (rng.gen::<f64>(), rng.gen::<f64>());
        let (re2, rd2) = (re1 + (1.0 - re1) * rng.gen::<f64>(), rd1 + (1.0 - rd1) * rng.gen::<f64>());
        if passive_dynamic_power(c_e, c_d, re1, rd1) > passive_dynamic_power(c_e, c_d, re2, rd2) {
            return Fail(format!("case {case}: passive power decreases with the retry-loop ratios"));
        }
        // Higher throughput at fixed work means less retry-loop time, so less passive power.
        let n = rng.gen_range(1..=16u32);
        let f = rng.gen_range(0.5..4.0);
        let pw = log_uniform(&mut rng, 1.0, 1000.0);
        let nf = f64::from(n) * f;
        let t1 = rng.gen::<f64>() * nf / pw;
        let t2 = t1 + rng.gen::<f64>() * (nf / pw - t1);
        let p = random_power(&mut rng);
        let a = dynamic_power(&p, t1, t1, pw, pw, n, f);
        let b = dynamic_power(&p, t2, t2, pw, pw, n, f);
        if b.memory > a.memory * (1.0 + 1e-12) || b.uncore > a.uncore * (1.0 + 1e-12) {
            return Fail(format!("case {case}: passive power grows with throughput"));
        }
    }
    Pass(format!("1e4 compositions (max rel err {worst:.1e}); 1e4 monotonicity cases"))
}

// ---------------------------------------------------------------------------------------
// 3. Exact inversion of the calibration.

#[derive(Clone, Copy)]
struct Truth {
    n: u32,
    f: f64,
    throughput: ThroughputParams,
    power: DynamicPowerParams,
}

fn oracle_curve(t: &Truth, p_sma: f64, cw: f64, anchor: f64, pw: f64) -> f64 {
    let n = f64::from(t.n);
    let star = (n - 1.0) * cw;
    if star > p_sma && pw <= star {
        anchor + (t.f / cw - anchor) * (pw - p_sma) / (star - p_sma)
    } else {
        n * t.f / (pw + cw)
    }
}

/// Forward evaluation, restricted to points where exactly one regime is consistent.
fn oracle_forward(
    t: &Truth,
    platform: &PlatformPowers,
    p_sma: f64,
    pw_d: f64,
    pw_e: f64,
) -> Result<(f64, f64, ComponentWatts), String> {
    let tp = &t.throughput;
    let d_minus = oracle_curve(t, p_sma, tp.cw_dm, tp.anchor_dm, pw_d);
    let d_plus = oracle_curve(t, p_sma, tp.cw_dp, tp.anchor_dp, pw_d);
    let e_plus = oracle_curve(t, p_sma, tp.cw_ep, tp.anchor_ep, pw_e);
    let e_minus = oracle_curve(t, p_sma, tp.cw_em, tp.anchor_em, pw_e);
    let nf = f64::from(t.n) * t.f;
    let k = pw_d / nf;
    let grow = e_plus > d_minus;
    let empty = e_minus / d_minus <= 1.0 - k * (e_plus - e_minus);
    let (t_d, t_e) = match (grow, empty) {
        (true, false) => (d_minus, e_plus),
        (false, true) => {
            // T_d - s·T_e = T_d+  and  -k·Δe·T_d + T_e = T_e-.
            let s = 1.0 - d_plus / d_minus;
            let spread = k * (e_plus - e_minus);
            let det = 1.0 - s * spread;
            ((d_plus + s * e_minus) / det, (e_minus + spread * d_plus) / det)
        }
        _ => return Err(format!("({pw_d}, {pw_e}) is not in a single regime")),
    };
    let r_e = 1.0 - t_e * pw_e / nf;
    let r_d = 1.0 - t_d * pw_d / nf;
    let p = &t.power;
    let n = f64::from(t.n);
    let dynamic = ComponentWatts {
        cpu: n * (r_e * p.p_rl_cpu_e + r_d * p.p_rl_cpu_d + (2.0 - r_e - r_d) * p.p_ps_cpu),
        memory: r_e * p.c_e_mem + r_d * p.c_d_mem,
        uncore: r_e * p.c_e_unc + r_d * p.c_d_unc,
    };
    let cores = 2 * t.n;
    let sockets = cores.div_ceil(platform.topology.cores_per_socket);
    let fixed = |c: &ComponentPlatform| {
        c.static_w + f64::from(sockets) * c.act_socket_w + f64::from(cores) * c.act_core_w
    };
    let c = &platform.components;
    let total = ComponentWatts {
        cpu: fixed(&c.cpu) + dynamic.cpu,
        memory: fixed(&c.memory) + dynamic.memory,
        uncore: fixed(&c.uncore) + dynamic.uncore,
    };
    Ok((t_d, t_e, total))
}

fn test_platform() -> PlatformPowers {
    let comp = |s: f64, a: f64, c: f64| ComponentPlatform { static_w: s, act_socket_w: a, act_core_w: c };
    PlatformPowers {
        components: PlatformComponents {
            cpu: comp(10.0, 5.0, 1.5),
            memory: comp(3.0, 1.0, 0.2),
            uncore: comp(2.0, 0.5, 0.1),
        },
        topology: Topology { sockets: 2, cores_per_socket: 4 },
        lambda_seconds: 1e-6,
    }
}

fn truth(anchor_dm: f64, anchor_dp: f64, anchor_ep: f64, anchor_em: f64) -> Truth {
    Truth {
        n: 2,
        f: 1.5,
        throughput: ThroughputParams {
            cw_dm: 2.0,
            cw_dp: 1.3,
            cw_ep: 1.5,
            cw_em: 3.0,
            anchor_dm,
            anchor_dp,
            anchor_ep,
            anchor_em,
        },
        power: DynamicPowerParams {
            p_ps_cpu: 2.0,
            p_rl_cpu_e: 5.0,
            p_rl_cpu_d: 3.5,
            c_e_mem: 1.2,
            c_d_mem: 0.9,
            c_e_unc: 0.4,
            c_d_unc: 0.3,
        },
    }
}

fn truth_profile(t: &Truth) -> CalibrationProfile {
    CalibrationProfile {
        algorithm: "model".into(),
        n: t.n,
        f: t.f,
        lambda_seconds: 1e-6,
        points: CalibrationPoints::default(),
        throughput: t.throughput,
        power: Some(t.power),
        flags: Vec::new(),
    }
}

fn invert(t: &Truth, platform: &PlatformPowers) -> Result<f64, String> {
    let points = CalibrationPoints::default();
    let profile = truth_profile(t);
    let mut measurements = Vec::new();
    for pt in points.all() {
        let (t_d, t_e, watts) = oracle_forward(t, platform, points.p_sma, pt.pw_d, pt.pw_e)?;
        let lib = predict_point(&profile, Some(platform), pt.pw_d, pt.pw_e).map_err(|e| e.to_string())?;
        let lib_w = lib.power.unwrap().totals();
        if rel(lib.t_d, t_d) > 1e-12 || rel(lib.t_e, t_e) > 1e-12 || rel(lib_w.total(), watts.total()) > 1e-12 {
            return Err(format!("forward model disagrees with the oracle at {pt}"));
        }
        measurements.push((PwPoint::new(pt.pw_d, pt.pw_e), Measurement::throughputs(t_d, t_e).with_power(watts)));
    }
    let inputs = CalibrationInputs {
        algorithm: "model".into(),
        n: t.n,
        f: t.f,
        lambda_seconds: 1e-6,
        points,
        measurements,
    };
    let fitted = build_profile(&inputs, Some(platform)).map_err(|e| e.to_string())?;
    let power = fitted.power.ok_or("power parameters missing")?;
    let (a, b) = (&fitted.throughput, &t.throughput);
    let (p, q) = (&power, &t.power);
    let pairs = [
        ("cw_d-", a.cw_dm, b.cw_dm),
        ("cw_d+", a.cw_dp, b.cw_dp),
        ("cw_e+", a.cw_ep, b.cw_ep),
        ("cw_e-", a.cw_em, b.cw_em),
        ("T_d-(p_sma)", a.anchor_dm, b.anchor_dm),
        ("T_d+(p_sma)", a.anchor_dp, b.anchor_dp),
        ("T_e+(p_sma)", a.anchor_ep, b.anchor_ep),
        ("T_e-(p_sma)", a.anchor_em, b.anchor_em),
        ("P_ps", p.p_ps_cpu, q.p_ps_cpu),
        ("P_rl_e", p.p_rl_cpu_e, q.p_rl_cpu_e),
        ("P_rl_d", p.p_rl_cpu_d, q.p_rl_cpu_d),
        ("c_e mem", p.c_e_mem, q.c_e_mem),
        ("c_d mem", p.c_d_mem, q.c_d_mem),
        ("c_e unc", p.c_e_unc, q.c_e_unc),
        ("c_d unc", p.c_d_unc, q.c_d_unc),
    ];
    let mut worst = 0.0f64;
    for (name, got, want) in pairs {
        let err = rel(got, want);
        if err > 1e-9 {
            return Err(format!("{name}: fitted {got} vs truth {want} ({err:e}); flags {:?}", fitted.flags));
        }
        worst = worst.max(err);
    }
    Ok(worst)
}

fn criterion_3() -> Verdict {
    let platform = test_platform();
    // Mostly empty at (p_sma, p_sma).
    let empty = truth(1.0, 1.2, 0.9, 0.6);
    // Growing at (p_sma, p_sma): T_e^-(p_sma) defaults to T_e^+(p_sma).
    let growing = truth(0.5, 0.7, 0.9, 0.9);
    match (invert(&empty, &platform), invert(&growing, &platform)) {
        (Ok(a), Ok(b)) => Pass(format!(
            "15 parameters recovered in both (p_sma, p_sma) branches; max rel err {:.1e}",
            a.max(b)
        )),
        (Err(e), _) => Fail(format!("mostly-empty branch: {e}")),
        (_, Err(e)) => Fail(format!("growing branch: {e}")),
    }
}

// ---------------------------------------------------------------------------------------
// 4. Simulator round trip.

fn criterion_4() -> Verdict {
    let base = SimParams::example();
    let suite = match simulate_calibration_suite(&base) {
        Ok(s) => s,
        Err(e) => return Fail(e.to_string()),
    };
    let profile = match build_profile(&suite.calibration, None) {
        Ok(p) => p,
        Err(e) => return Fail(e.to_string()),
    };
    let (mut within_15, mut within_25, mut worst) = (0, 0, (0.0f64, (0.0, 0.0)));
    for ((d, e), r) in &suite.validation {
        let pred = match predict_point(&profile, None, *d, *e) {
            Ok(m) => m.t,
            Err(err) => return Fail(format!("({d}, {e}): {err}")),
        };
        let sim = r.queue_throughput();
        let err = (pred - sim).abs() / sim;
        within_15 += usize::from(err <= 0.15);
        within_25 += usize::from(err <= 0.25);
        if err > worst.0 {
            worst = (err, (*d, *e));
        }
    }
    let detail = format!(
        "seed {}: {within_15}/25 within 15%, {within_25}/25 within 25%; worst {:.1}% at {:?}",
        base.seed,
        100.0 * worst.0,
        worst.1
    );
    if within_15 >= 20 && within_25 == 25 {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

// ---------------------------------------------------------------------------------------
// 5. Staggered frontier.

fn criterion_5() -> Verdict {
    let cw = 2.0;
    let mut notes = Vec::new();
    for n in 2..=4u32 {
        let pw = f64::from(n - 1) * cw;
        let p = SimParams {
            n,
            f: 1.0,
            pw_d: pw,
            pw_e: pw,
            cw: TryCosts::uniform(cw),
            commit_window: 0.5,
            horizon: 20_000.0,
            seed: 5,
            stagger: true,
            prefill: u64::from(n),
            isolate: None,
        };
        let r = match simulate(&p) {
            Ok(r) => r,
            Err(e) => return Fail(e.to_string()),
        };
        let expected = f64::from(n) * p.f / (pw + cw);
        // One operation per thread may straddle each end of the window.
        let quantum = f64::from(n) / r.window_lambda;
        let dev = (r.t_e - expected).abs().max((r.t_d - expected).abs());
        if r.failed_tries != 0 || dev > quantum {
            return Fail(format!(
                "n = {n}: {} failed tries, T_e {} / T_d {} vs {expected} (quantum {quantum:.2e})",
                r.failed_tries, r.t_e, r.t_d
            ));
        }
        notes.push(format!("n={n} dev {dev:.1e}≤{quantum:.1e}"));
    }
    Pass(format!("zero failed tries; {}", notes.join(", ")))
}

// ---------------------------------------------------------------------------------------
// 6. Queue correctness.

fn criterion_6() -> Verdict {
    let mut notes = Vec::new();
    for a in Algorithm::ALL {
        let q = match new_queue(a, 1 << 20) {
            Ok(q) => Arc::new(q),
            Err(e) => return Fail(e.to_string()),
        };
        let run = common::stress(q, 8, 8, 1_000_000);
        if let Err(e) = run.check_conservation().and_then(|_| run.check_order()) {
            return Fail(format!("{a}: {e}"));
        }
        notes.push(a.name().to_string());
    }
    let q = match new_queue(Algorithm::TsigasZhang, 4) {
        Ok(q) => Arc::new(q),
        Err(e) => return Fail(e.to_string()),
    };
    let run = common::stress(q, 8, 8, 100_000);
    if let Err(e) = run.check_conservation().and_then(|_| run.check_order()) {
        return Fail(format!("tsigas-zhang at capacity 4: {e}"));
    }
    Pass(format!("8×8 with 1e6 items for {}; capacity-4 ring with 1e5 items", notes.join(", ")))
}

// ---------------------------------------------------------------------------------------
// 7. Curve shapes.

fn shape_profile() -> CalibrationProfile {
    CalibrationProfile {
        algorithm: "model".into(),
        n: 4,
        f: 1.0,
        lambda_seconds: 1e-6,
        points: CalibrationPoints::default(),
        throughput: ThroughputParams {
            cw_dm: 2.0,
            cw_dp: 1.0,
            cw_ep: 3.0,
            cw_em: 5.0,
            anchor_dm: 0.2,
            anchor_dp: 0.3,
            anchor_ep: 0.1,
            anchor_em: 0.08,
        },
        power: None,
        flags: Vec::new(),
    }
}

fn criterion_7() -> Verdict {
    let profile = shape_profile();
    let model = profile.model();
    let frontier = f64::from(profile.n - 1) * profile.throughput.cw_ep;
    let mut axis: Vec<f64> = (0..=400).map(|i| 10f64.powf(3.0 * f64::from(i) / 400.0)).collect();
    axis.push(frontier);
    axis.sort_by(f64::total_cmp);
    axis.dedup();

    for pw_d in [5.0, 20.0, 100.0] {
        let mut rows = Vec::new();
        for &pw_e in &axis {
            match predict_point(&profile, None, pw_d, pw_e) {
                Ok(m) => rows.push(m),
                Err(e) => return Fail(e.to_string()),
            }
        }
        let peak = (0..rows.len()).max_by(|&a, &b| rows[a].t_e.total_cmp(&rows[b].t_e)).unwrap();
        if rows[peak].pw_e != frontier {
            return Fail(format!("pw_d = {pw_d}: T_e peaks at pw_e = {} not at {frontier}", rows[peak].pw_e));
        }
        let rising = rows[..=peak].windows(2).all(|w| w[1].t_e >= w[0].t_e * (1.0 - 1e-12));
        let falling = rows[peak..].windows(2).all(|w| w[1].t_e <= w[0].t_e * (1.0 + 1e-12));
        if !(rising && falling) {
            return Fail(format!("pw_d = {pw_d}: T_e is not single-peaked"));
        }

        // Weight of T_d^+ in T_d.
        let d_minus = model.throughput(qwb_core::model::Basic::DequeueItem, pw_d).unwrap();
        let d_plus = model.throughput(qwb_core::model::Basic::DequeueEmpty, pw_d).unwrap();
        let w: Vec<f64> = rows.iter().map(|m| (m.t_d - d_minus) / (d_plus - d_minus)).collect();
        if w.iter().any(|x| !(-1e-9..=1.0 + 1e-9).contains(x)) {
            return Fail(format!("pw_d = {pw_d}: T_d leaves [T_d-, T_d+]"));
        }
        for (m, x) in rows.iter().zip(&w) {
            if m.regime == Regime::MostlyEmpty && (x - (1.0 - m.t_e / d_minus)).abs() > 1e-9 {
                return Fail(format!("pw_d = {pw_d}, pw_e = {}: T_d is not the T_e-weighted mix", m.pw_e));
            }
        }
        let w_min = w.iter().copied().fold(f64::INFINITY, f64::min);
        if (w[peak] - w_min).abs() > 1e-12 {
            return Fail(format!("pw_d = {pw_d}: T_d is not closest to T_d- where enqueues peak"));
        }
        let far = predict_point(&profile, None, pw_d, 1e6).unwrap();
        let w_far = (far.t_d - d_minus) / (d_plus - d_minus);
        if *w.last().unwrap() <= 0.5 || w_far < 0.99 {
            return Fail(format!(
                "pw_d = {pw_d}: T_d+ weight {:.3} at pw_e = 1000, {w_far:.4} at 1e6",
                w.last().unwrap()
            ));
        }
        if w[1..=peak].windows(2).any(|p| p[1] > p[0] + 1e-12) || w[peak..].windows(2).any(|p| p[1] < p[0] - 1e-12)
        {
            return Fail(format!("pw_d = {pw_d}: T_d+ weight is not monotone on each side of the peak"));
        }
    }
    Pass(format!("3 sweeps of {} points; T_e peaks at the frontier pw_e = {frontier}", axis.len()))
}

// ---------------------------------------------------------------------------------------
// 8. Application predictor.

fn criterion_8() -> Verdict {
    let platform = test_platform();
    let profile = truth_profile(&truth(1.0, 1.2, 0.9, 0.6));
    let lambda = platform.lambda_seconds;
    let pw_d = 20.0;

    let single = WorkDistribution { bins: vec![WorkBin { size: 1e6, pw_e: 50.0 }], pw_d, app_p_ps_cpu: None };
    let app = match predict_application(&profile, Some(&platform), &single) {
        Ok(a) => a,
        Err(e) => return Fail(e.to_string()),
    };
    let point = predict_point(&profile, Some(&platform), pw_d, 50.0).unwrap();
    let avg = app.avg_power.unwrap();
    if rel(app.time_total_s, 1e6 * lambda / point.t) > 1e-12 || rel(avg.total, point.power.unwrap().total_w) > 1e-12 {
        return Fail("single-bin prediction differs from the point prediction".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    for case in 0..200 {
        let bins: Vec<WorkBin> = (0..rng.gen_range(1..8))
            .map(|_| WorkBin { size: log_uniform(&mut rng, 1.0, 1e6), pw_e: log_uniform(&mut rng, 1.0, 1000.0) })
            .collect();
        let split: Vec<WorkBin> = bins
            .iter()
            .flat_map(|b| {
                let part = rng.gen_range(0.05..0.95);
                [WorkBin { size: b.size * part, pw_e: b.pw_e }, WorkBin { size: b.size * (1.0 - part), pw_e: b.pw_e }]
            })
            .collect();
        let whole = predict_application(&profile, Some(&platform), &WorkDistribution { bins, pw_d, app_p_ps_cpu: None });
        let parts = predict_application(&profile, Some(&platform), &WorkDistribution { bins: split, pw_d, app_p_ps_cpu: None });
        let (whole, parts) = match (whole, parts) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Fail(format!("case {case}: prediction failed")),
        };
        if rel(whole.time_total_s, parts.time_total_s) > 1e-12 {
            return Fail(format!("case {case}: splitting bins changes Time_total"));
        }
        let avg = whole.avg_power.unwrap();
        let per_bin: Vec<ComponentWatts> = whole.bins.iter().map(|b| b.power.unwrap()).collect();
        for (name, v, get) in [
            ("cpu", avg.cpu, (|w: &ComponentWatts| w.cpu) as fn(&ComponentWatts) -> f64),
            ("memory", avg.memory, |w| w.memory),
            ("uncore", avg.uncore, |w| w.uncore),
            ("total", avg.total, |w| w.total()),
        ] {
            let lo = per_bin.iter().map(get).fold(f64::INFINITY, f64::min);
            let hi = per_bin.iter().map(get).fold(f64::NEG_INFINITY, f64::max);
            if v < lo * (1.0 - 1e-12) || v > hi * (1.0 + 1e-12) {
                return Fail(format!("case {case}: average {name} power {v} outside [{lo}, {hi}]"));
            }
        }
        if rel(whole.energy_total_j.unwrap(), avg.total * whole.time_total_s) > 1e-12 {
            return Fail(format!("case {case}: energy differs from power × time"));
        }
    }

    let wl = match mandelbrot_workload(512, 512, 2, 255) {
        Ok(w) => w,
        Err(e) => return Fail(e.to_string()),
    };
    let modes = ModeSummary::of(&wl.work_bunches(IterationCost::default()));
    let detail = format!(
        "identities hold over 200 random distributions; Mandelbrot 512×512 modes {:?} bunches, separation {:.1}×",
        modes.modes.iter().map(|m| (m * 100.0).round() / 100.0).collect::<Vec<_>>(),
        modes.separation
    );
    if modes.modes.len() >= 2 && modes.separation >= 5.0 {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

// ---------------------------------------------------------------------------------------
// 9. Benchmark smoke run.

fn criterion_9() -> Verdict {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if !cfg!(all(target_os = "linux", any(target_arch = "x86", target_arch = "x86_64"))) || cores < 4 {
        return Skip(format!("needs x86 Linux with ≥ 4 cores; this host has {cores}"));
    }
    let unit = match calibrate_pause_unit(3.0) {
        Ok(u) => u,
        Err(e) => return Fail(e.to_string()),
    };
    let cfg = RunConfig::new(Algorithm::MichaelScott, 1, 3.0, 1000.0, 1000.0);
    match run_benchmark(&cfg, &unit, None) {
        Ok(m) => {
            let steady = !m.flags.iter().any(|f| f.starts_with(FLAG_NON_STEADY));
            let detail = format!("null fraction {:.3}, flags {:?}", m.null_fraction, m.flags);
            if m.null_fraction < 0.3 && steady {
                Pass(detail)
            } else {
                Fail(detail)
            }
        }
        Err(e) => Fail(e.to_string()),
    }
}

fn main() -> ExitCode {
    type Criterion = (u32, &'static str, bool, Duration, fn() -> Verdict);
    let criteria: [Criterion; 9] = [
        (1, "theorem suite", true, Duration::from_secs(10), criterion_1),
        (2, "power algebra", true, Duration::from_secs(1), criterion_2),
        (3, "calibration exact inversion", true, Duration::from_secs(1), criterion_3),
        (4, "simulator round trip", true, Duration::from_secs(60), criterion_4),
        (5, "low-contention exactness", true, Duration::from_secs(5), criterion_5),
        (6, "queue correctness", true, Duration::from_secs(60), criterion_6),
        (7, "curve shape", true, Duration::from_secs(1), criterion_7),
        (8, "application predictor", true, Duration::from_secs(30), criterion_8),
        (9, "benchmark smoke (non-gating)", false, Duration::from_secs(60), criterion_9),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, gating, budget, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let verdict = run();
        let elapsed = t0.elapsed();
        let timing = format!("{:.2}s of {}s", elapsed.as_secs_f64(), budget.as_secs());
        let (label, detail) = match verdict {
            Pass(d) if elapsed <= budget => ("PASS", d),
            Pass(d) => ("FAIL", format!("over time budget; {d}")),
            Fail(d) => ("FAIL", d),
            Skip(d) => ("SKIP", d),
        };
        if label == "FAIL" && gating {
            failed += 1;
        }
        println!("{label} criterion {id} ({name}, {timing}): {detail}");
    }
    if failed > 0 {
        println!("{failed} gating criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

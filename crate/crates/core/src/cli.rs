//! Command-line front end. Machine-readable output goes to `--out` (or stdout), logs to
//! stderr.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::calibrate::{build_profile, CalibrationPoints, CalibrationProfile};
use crate::error::{Error, Result};
use crate::model::PlatformPowers;
use crate::predictor::mandelbrot::{
    bin_width, mandelbrot_workload, measure_region_work, IterationCost, ModeSummary,
    DEFAULT_MAX_ITER,
};
use crate::predictor::{
    grid, predict_application, predict_point, sweep, write_sweep_csv, WorkDistribution,
    DEFAULT_AXIS,
};
use crate::queues::Algorithm;
use crate::sim::{simulate, simulate_calibration_suite, SimParams};
use crate::workload::{
    calibrate_pause_unit, inputs_from_rows, measure_work_distribution, median_measurement,
    read_rows, run_benchmark, write_rows, FilePowerSource, Measurement, MeasurementRow,
    PowerSource, RaplReader, RunConfig, FLAG_PIN_DEGRADED, MEDIAN_FLAG,
};

#[derive(Debug, Parser)]
#[command(name = "qwb", version, about = "Lock-free queue benchmark and throughput/power model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the queue benchmark and append measurement rows to a CSV file.
    Bench(BenchArgs),
    /// Build a calibration profile from measurements or from the simulator.
    Calibrate(CalibrateArgs),
    /// Predict one (pw_d, pw_e) point.
    Predict(PredictArgs),
    /// Predict a grid of points as CSV.
    Sweep(SweepArgs),
    /// Run the discrete-event simulator.
    Simulate(SimulateArgs),
    /// Predict time, power and energy of an application work distribution.
    AppPredict(AppPredictArgs),
    /// Compare predictions against measured or simulated throughputs.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value = "michael-scott")]
    pub algo: Algorithm,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Declared clock frequency in GHz.
    #[arg(long, default_value_t = 3.4)]
    pub freq: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub pwd: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub pwe: f64,
    /// Measurement window in seconds.
    #[arg(long, default_value_t = 2.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 0.5)]
    pub warmup: f64,
    /// Repetitions per point; more than one adds a median summary row.
    #[arg(long, default_value_t = 1)]
    pub reps: u32,
    /// Run every calibration point instead of (--pwd, --pwe).
    #[arg(long)]
    pub calibration_points: bool,
    #[arg(long, default_value_t = 1 << 20)]
    pub size_cap: u64,
    /// Capacity of bounded queues.
    #[arg(long, default_value_t = 1 << 21)]
    pub capacity: usize,
    #[arg(long)]
    pub no_pin: bool,
    /// `rapl` or `file:PATH` (CSV with cpu,memory,uncore columns).
    #[arg(long)]
    pub power: Option<String>,
    /// Use a nominal 1000-cycle bunch instead of measuring the pause instruction.
    #[arg(long)]
    pub nominal_unit: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Measurement CSV for one (algorithm, n, f).
    #[arg(long, conflicts_with = "simulate", required_unless_present = "simulate")]
    pub measurements: Option<PathBuf>,
    /// Simulator parameter JSON.
    #[arg(long)]
    pub simulate: Option<PathBuf>,
    /// Platform JSON with static and activation powers.
    #[arg(long)]
    pub platform: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    pub lambda_seconds: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p_sma: f64,
    #[arg(long, default_value_t = 20.0)]
    pub p_mid: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub p_big: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub platform: Option<PathBuf>,
    #[arg(long)]
    pub pwd: f64,
    #[arg(long)]
    pub pwe: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub platform: Option<PathBuf>,
    /// Comma-separated pw_d values.
    #[arg(long, value_delimiter = ',')]
    pub pwd: Vec<f64>,
    /// Comma-separated pw_e values.
    #[arg(long, value_delimiter = ',')]
    pub pwe: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulator parameter JSON; built-in example parameters when absent.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub pwd: Option<f64>,
    #[arg(long)]
    pub pwe: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Simulate the calibration points and the validation grid and write measurement CSV.
    #[arg(long)]
    pub suite: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AppPredictArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub platform: Option<PathBuf>,
    /// Work distribution JSON.
    #[arg(long, conflicts_with = "mandelbrot", required_unless_present = "mandelbrot")]
    pub dist: Option<PathBuf>,
    /// Build the distribution from a Mandelbrot image, e.g. `512x512`.
    #[arg(long)]
    pub mandelbrot: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub region: u32,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: u32,
    /// Consumer parallel section, in bunches (Mandelbrot only).
    #[arg(long, default_value_t = 10.0)]
    pub pwd: f64,
    #[arg(long, default_value_t = 10.0)]
    pub cycles_per_iteration: f64,
    /// Time region computations on this many producer threads instead of counting iterations.
    #[arg(long)]
    pub measure_producers: Option<u32>,
    #[arg(long, default_value_t = 3.4)]
    pub freq: f64,
    /// Application-specific parallel-section CPU power, in watts.
    #[arg(long)]
    pub app_p_ps: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub profile: PathBuf,
    /// CSV with pw_d, pw_e, T_d and T_e columns (measurement or sweep format).
    #[arg(long)]
    pub against: PathBuf,
    #[arg(long)]
    pub platform: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// How a successful command ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Degraded,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::Degraded => 2,
        }
    }
}

fn output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Pretty JSON with sorted keys.
pub fn to_sorted_json<T: Serialize>(v: &T) -> Result<String> {
    let value = serde_json::to_value(v)?;
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

fn load_platform(path: Option<&PathBuf>) -> Result<Option<PlatformPowers>> {
    path.map(|p| {
        let pl: PlatformPowers = serde_json::from_str(&fs::read_to_string(p)?)?;
        pl.validate()?;
        Ok(pl)
    })
    .transpose()
}

fn load_profile(path: &Path) -> Result<CalibrationProfile> {
    CalibrationProfile::from_json(&fs::read_to_string(path)?)
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Bench(a) => bench(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Predict(a) => predict(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::AppPredict(a) => app_predict(a),
        Command::Compare(a) => compare(a),
    }
}

fn power_source(arg: Option<&str>) -> Result<Option<Box<dyn PowerSource>>> {
    let Some(arg) = arg else {
        return Ok(None);
    };
    if arg == "rapl" {
        match RaplReader::open() {
            Ok(r) => Ok(Some(Box::new(r))),
            Err(e) => {
                log::warn!("RAPL not available ({e}); power columns left empty");
                Ok(None)
            }
        }
    } else if let Some(path) = arg.strip_prefix("file:") {
        Ok(Some(Box::new(FilePowerSource::open(Path::new(path))?)))
    } else {
        Err(Error::Argument(format!("--power must be `rapl` or `file:PATH`, got {arg:?}")))
    }
}

fn bench(a: BenchArgs) -> Result<Outcome> {
    if a.reps == 0 {
        return Err(Error::Argument("--reps must be ≥ 1".into()));
    }
    let unit = if a.nominal_unit {
        crate::workload::LambdaUnit::nominal(a.freq)
    } else {
        let u = calibrate_pause_unit(a.freq)?;
        if !u.on_target() {
            log::warn!("bunch measured at {:.0} cycles (target 1000)", u.cycles_per_bunch);
        }
        u
    };
    let mut power = power_source(a.power.as_deref())?;
    let points: Vec<(f64, f64)> = if a.calibration_points {
        CalibrationPoints::default().all().iter().map(|p| (p.pw_d, p.pw_e)).collect()
    } else {
        vec![(a.pwd, a.pwe)]
    };

    let fresh = fs::metadata(&a.out).map_or(true, |m| m.len() == 0);
    let file = OpenOptions::new().create(true).append(true).open(&a.out)?;
    let mut degraded = false;
    let mut header = fresh;
    for (pw_d, pw_e) in points {
        let mut cfg = RunConfig::new(a.algo, a.n, a.freq, pw_d, pw_e);
        cfg.duration_s = a.duration;
        cfg.warmup_s = a.warmup;
        cfg.size_cap = a.size_cap;
        cfg.capacity = a.capacity;
        cfg.pin = !a.no_pin;
        let mut rows = Vec::new();
        let mut runs: Vec<Measurement> = Vec::new();
        for rep in 0..a.reps {
            log::info!("{} n={} ({pw_d}, {pw_e}) rep {}/{}", a.algo, a.n, rep + 1, a.reps);
            let m = run_benchmark(&cfg, &unit, power.as_mut().map(|p| p.as_mut() as &mut dyn PowerSource))?;
            degraded |= m.flags.iter().any(|f| f.starts_with(FLAG_PIN_DEGRADED));
            rows.push(MeasurementRow::new(a.algo.name(), a.n, a.freq, pw_d, pw_e, &m));
            runs.push(m);
        }
        if a.reps > 1 {
            let mut med = median_measurement(&runs)?;
            med.flags.push(MEDIAN_FLAG.into());
            rows.push(MeasurementRow::new(a.algo.name(), a.n, a.freq, pw_d, pw_e, &med));
        }
        write_rows(&rows, &file, header)?;
        header = false;
    }
    Ok(if degraded { Outcome::Degraded } else { Outcome::Ok })
}

fn calibrate(a: CalibrateArgs) -> Result<Outcome> {
    let platform = load_platform(a.platform.as_ref())?;
    let points = CalibrationPoints { p_sma: a.p_sma, p_mid: a.p_mid, p_big: a.p_big };
    points.validate()?;
    let (inputs, extra_flags) = if let Some(path) = &a.measurements {
        let rows = read_rows(File::open(path)?)?;
        (inputs_from_rows(&rows, points, a.lambda_seconds)?, vec![])
    } else {
        let path = a.simulate.as_ref().expect("clap enforces one source");
        let params: SimParams = serde_json::from_str(&fs::read_to_string(path)?)?;
        let mut inputs = simulate_calibration_suite(&params)?.calibration;
        inputs.points = points;
        (inputs, vec![format!("simulated with seed {}", params.seed)])
    };
    let mut profile = build_profile(&inputs, platform.as_ref())?;
    profile.flags.extend(extra_flags);
    output(a.out.as_deref(), &profile.to_json()?)?;
    Ok(Outcome::Ok)
}

fn predict(a: PredictArgs) -> Result<Outcome> {
    let profile = load_profile(&a.profile)?;
    let platform = load_platform(a.platform.as_ref())?;
    let m = predict_point(&profile, platform.as_ref(), a.pwd, a.pwe)?;
    output(a.out.as_deref(), &to_sorted_json(&m)?)?;
    Ok(Outcome::Ok)
}

fn sweep_cmd(a: SweepArgs) -> Result<Outcome> {
    let profile = load_profile(&a.profile)?;
    let platform = load_platform(a.platform.as_ref())?;
    let axis = |v: &[f64]| if v.is_empty() { DEFAULT_AXIS.to_vec() } else { v.to_vec() };
    let rows = sweep(&profile, platform.as_ref(), &grid(&axis(&a.pwd), &axis(&a.pwe)))?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    output(a.out.as_deref(), &String::from_utf8_lossy(&buf))?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct SimOutput<'a> {
    params: &'a SimParams,
    result: &'a crate::sim::SimResult,
}

fn simulate_cmd(a: SimulateArgs) -> Result<Outcome> {
    let mut p = match &a.params {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => SimParams::example(),
    };
    if let Some(v) = a.pwd {
        p.pw_d = v;
    }
    if let Some(v) = a.pwe {
        p.pw_e = v;
    }
    if let Some(v) = a.seed {
        p.seed = v;
    }
    if let Some(v) = a.horizon {
        p.horizon = v;
    }
    if a.suite {
        let suite = simulate_calibration_suite(&p)?;
        let name = format!("simulated-seed-{}", p.seed);
        let mut rows: Vec<MeasurementRow> = suite
            .calibration
            .measurements
            .iter()
            .map(|(pt, m)| MeasurementRow::new(&name, p.n, p.f, pt.pw_d, pt.pw_e, m))
            .collect();
        for ((d, e), r) in &suite.validation {
            if !rows.iter().any(|row| row.pw_d == *d && row.pw_e == *e) {
                rows.push(MeasurementRow::new(&name, p.n, p.f, *d, *e, &r.to_measurement()));
            }
        }
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf, true)?;
        output(a.out.as_deref(), &String::from_utf8_lossy(&buf))?;
    } else {
        let r = simulate(&p)?;
        output(a.out.as_deref(), &to_sorted_json(&SimOutput { params: &p, result: &r })?)?;
    }
    Ok(Outcome::Ok)
}

fn parse_dims(s: &str) -> Result<(u32, u32)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::Argument(format!("expected WIDTHxHEIGHT, got {s:?}")))?;
    let num = |v: &str| {
        v.trim().parse::<u32>().map_err(|_| Error::Argument(format!("bad dimension {v:?}")))
    };
    Ok((num(w)?, num(h)?))
}

#[derive(Serialize)]
struct AppOutput {
    #[serde(flatten)]
    prediction: crate::predictor::AppPrediction,
    #[serde(skip_serializing_if = "Option::is_none")]
    modes: Option<ModeSummary>,
}

fn app_predict(a: AppPredictArgs) -> Result<Outcome> {
    let profile = load_profile(&a.profile)?;
    let platform = load_platform(a.platform.as_ref())?;
    let (mut dist, modes) = if let Some(path) = &a.dist {
        let d: WorkDistribution = serde_json::from_str(&fs::read_to_string(path)?)?;
        (d, None)
    } else {
        let (w, h) = parse_dims(a.mandelbrot.as_deref().expect("clap enforces one source"))?;
        let wl = mandelbrot_workload(w, h, a.region, a.max_iter)?;
        let work = match a.measure_producers {
            Some(p) => measure_region_work(&wl, p, &calibrate_pause_unit(a.freq)?)?,
            None => wl.work_bunches(IterationCost {
                cycles_per_iteration: a.cycles_per_iteration,
                ..IterationCost::default()
            }),
        };
        let bins = measure_work_distribution(&work, bin_width(a.region))?;
        (WorkDistribution { bins, pw_d: a.pwd, app_p_ps_cpu: None }, Some(ModeSummary::of(&work)))
    };
    if a.app_p_ps.is_some() {
        dist.app_p_ps_cpu = a.app_p_ps;
    }
    let mut prediction = predict_application(&profile, platform.as_ref(), &dist)?;
    if a.measure_producers.is_some() && !cfg!(any(target_arch = "x86", target_arch = "x86_64")) {
        prediction.flags.push("region times taken with a portable timer".into());
    }
    output(a.out.as_deref(), &to_sorted_json(&AppOutput { prediction, modes })?)?;
    Ok(Outcome::Ok)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparePoint {
    pub pw_d: f64,
    pub pw_e: f64,
    pub observed_t: f64,
    pub predicted_t: f64,
    pub rel_err_t: f64,
    pub rel_err_t_d: f64,
    pub rel_err_t_e: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorSummary {
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

impl ErrorSummary {
    pub fn of(errors: &[f64]) -> Self {
        let mut v = errors.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            if v.is_empty() {
                return f64::NAN;
            }
            let idx = ((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
            v[idx]
        };
        ErrorSummary { p50: q(0.5), p95: q(0.95), max: v.last().copied().unwrap_or(f64::NAN) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub points: Vec<ComparePoint>,
    pub t: ErrorSummary,
    pub t_d: ErrorSummary,
    pub t_e: ErrorSummary,
}

fn rel(pred: f64, obs: f64) -> f64 {
    if obs == 0.0 {
        if pred == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (pred - obs).abs() / obs.abs()
    }
}

/// Joins observed `(pw_d, pw_e, T_d, T_e)` rows with the profile's predictions.
pub fn compare_rows(
    profile: &CalibrationProfile,
    platform: Option<&PlatformPowers>,
    observed: &[(f64, f64, f64, f64)],
) -> Result<CompareReport> {
    let mut points = Vec::with_capacity(observed.len());
    for &(pw_d, pw_e, t_d, t_e) in observed {
        let m = predict_point(profile, platform, pw_d, pw_e)?;
        let observed_t = t_d.min(t_e);
        points.push(ComparePoint {
            pw_d,
            pw_e,
            observed_t,
            predicted_t: m.t,
            rel_err_t: rel(m.t, observed_t),
            rel_err_t_d: rel(m.t_d, t_d),
            rel_err_t_e: rel(m.t_e, t_e),
        });
    }
    let col = |f: fn(&ComparePoint) -> f64| points.iter().map(f).collect::<Vec<_>>();
    Ok(CompareReport {
        t: ErrorSummary::of(&col(|p| p.rel_err_t)),
        t_d: ErrorSummary::of(&col(|p| p.rel_err_t_d)),
        t_e: ErrorSummary::of(&col(|p| p.rel_err_t_e)),
        points,
    })
}

/// Reads `(pw_d, pw_e, T_d, T_e)` from any CSV carrying those columns. Repeated points
/// keep their median-summary row when present, else their first row.
pub fn read_observations(path: &Path) -> Result<Vec<(f64, f64, f64, f64)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Argument(format!("{} has no {name} column", path.display())))
    };
    let (cd, ce, ctd, cte) = (col("pw_d")?, col("pw_e")?, col("T_d")?, col("T_e")?);
    let cflags = headers.iter().position(|h| h == "flags");
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    let mut out: Vec<(f64, f64, f64, f64)> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let num = |i: usize| {
            rec.get(i)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|_| Error::Argument(format!("bad number in row {:?}", rec.position())))
        };
        let row = (num(cd)?, num(ce)?, num(ctd)?, num(cte)?);
        let is_median =
            cflags.and_then(|i| rec.get(i)).is_some_and(|f| f.split(';').any(|x| x == MEDIAN_FLAG));
        match seen.get(&(row.0.to_bits(), row.1.to_bits())) {
            Some(&i) if is_median => out[i] = row,
            Some(_) => {}
            None => {
                seen.insert((row.0.to_bits(), row.1.to_bits()), out.len());
                out.push(row);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Argument(format!("{} has no rows", path.display())));
    }
    Ok(out)
}

fn compare(a: CompareArgs) -> Result<Outcome> {
    let profile = load_profile(&a.profile)?;
    let platform = load_platform(a.platform.as_ref())?;
    let observed = read_observations(&a.against)?;
    let report = compare_rows(&profile, platform.as_ref(), &observed)?;
    output(a.out.as_deref(), &to_sorted_json(&report)?)?;
    Ok(Outcome::Ok)
}

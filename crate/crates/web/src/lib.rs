//! WebAssembly bindings for the browser demo. Every entry point takes and returns JSON.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use qwb_core::calibrate::{
    build_profile, CalibrationInputs, CalibrationPoints, CalibrationProfile, PwPoint,
    ThroughputParams,
};
use qwb_core::model::{Basic, DynamicPowerParams, Regime};
use qwb_core::predictor::predict_point;
use qwb_core::sim::{simulate, SimParams, SimResult};

/// Log-spaced axis from 1 to 1000 with `points` values.
pub fn pw_axis(points: usize) -> Vec<f64> {
    let last = points.max(2) - 1;
    (0..=last).map(|i| 10f64.powf(3.0 * i as f64 / last as f64)).collect()
}

#[derive(Debug, Clone, Deserialize)]
pub struct CurveRequest {
    pub n: u32,
    pub f: f64,
    pub pw_d: f64,
    pub throughput: ThroughputParams,
    #[serde(default)]
    pub power: Option<DynamicPowerParams>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    80
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub pw_e: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    pub d_plus: f64,
    pub d_minus: f64,
    pub t_d: f64,
    pub t_e: f64,
    pub t: f64,
    pub regime: Regime,
    pub energy_per_op: Option<f64>,
}

fn profile(n: u32, f: f64, throughput: ThroughputParams, power: Option<DynamicPowerParams>) -> CalibrationProfile {
    CalibrationProfile {
        algorithm: "demo".into(),
        n,
        f,
        lambda_seconds: 1e-6,
        points: CalibrationPoints::default(),
        throughput,
        power,
        flags: Vec::new(),
    }
}

/// Basic and combined throughputs along `pw_e` at a fixed `pw_d`.
pub fn model_curves(req: &CurveRequest) -> qwb_core::Result<Vec<CurvePoint>> {
    let p = profile(req.n, req.f, req.throughput, req.power);
    let model = p.model();
    pw_axis(req.points)
        .into_iter()
        .map(|pw_e| {
            let m = predict_point(&p, None, req.pw_d, pw_e)?;
            Ok(CurvePoint {
                pw_e,
                e_plus: model.throughput(Basic::EnqueueFree, pw_e)?,
                e_minus: model.throughput(Basic::EnqueueContended, pw_e)?,
                d_plus: model.throughput(Basic::DequeueEmpty, req.pw_d)?,
                d_minus: model.throughput(Basic::DequeueItem, req.pw_d)?,
                t_d: m.t_d,
                t_e: m.t_e,
                t: m.t,
                regime: m.regime,
                energy_per_op: m.energy_per_op,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripPoint {
    pub pw_e: f64,
    pub simulated_t: f64,
    pub predicted_t: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTrip {
    pub profile: CalibrationProfile,
    pub points: Vec<RoundTripPoint>,
}

/// Calibrates from simulated runs at the eight calibration points, then compares the
/// prediction with the simulator along `pw_e` at the given `pw_d`.
pub fn oracle_round_trip(base: &SimParams, pw_d: f64, points: usize) -> qwb_core::Result<RoundTrip> {
    let cal = CalibrationPoints::default();
    let mut measurements = Vec::new();
    for pt in cal.all() {
        let r = simulate(&base.at(pt.pw_d, pt.pw_e))?;
        measurements.push((PwPoint::new(pt.pw_d, pt.pw_e), r.to_measurement()));
    }
    let inputs = CalibrationInputs {
        algorithm: "simulated".into(),
        n: base.n,
        f: base.f,
        lambda_seconds: 1e-6,
        points: cal,
        measurements,
    };
    let profile = build_profile(&inputs, None)?;
    let mut out = Vec::new();
    for pw_e in pw_axis(points) {
        let sim = simulate(&base.at(pw_d, pw_e))?;
        let pred = predict_point(&profile, None, pw_d, pw_e)?;
        out.push(RoundTripPoint {
            pw_e,
            simulated_t: sim.queue_throughput(),
            predicted_t: pred.t,
            regime: pred.regime,
        });
    }
    Ok(RoundTrip { profile, points: out })
}

fn to_js<T: Serialize>(v: qwb_core::Result<T>) -> Result<String, JsError> {
    let v = v.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

fn from_js<T: for<'de> Deserialize<'de>>(json: &str) -> Result<T, JsError> {
    serde_json::from_str(json).map_err(|e| JsError::new(&e.to_string()))
}

/// Built-in simulator parameters, as JSON.
#[wasm_bindgen(js_name = exampleSimParams)]
pub fn example_sim_params() -> String {
    serde_json::to_string(&SimParams::example()).unwrap_or_default()
}

#[wasm_bindgen(js_name = modelCurves)]
pub fn model_curves_js(request: &str) -> Result<String, JsError> {
    let req: CurveRequest = from_js(request)?;
    to_js(model_curves(&req))
}

#[wasm_bindgen(js_name = simulatePoint)]
pub fn simulate_point_js(params: &str) -> Result<String, JsError> {
    let p: SimParams = from_js(params)?;
    to_js::<SimResult>(simulate(&p))
}

#[wasm_bindgen(js_name = oracleRoundTrip)]
pub fn oracle_round_trip_js(params: &str, pw_d: f64, points: usize) -> Result<String, JsError> {
    let p: SimParams = from_js(params)?;
    to_js(oracle_round_trip(&p, pw_d, points))
}

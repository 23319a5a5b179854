use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::calibrate::{CalibrationInputs, CalibrationPoints, PwPoint};
use crate::error::{Error, Result};
use crate::model::ComponentWatts;
use crate::workload::{median_measurement, Measurement};

/// Flag marking a row that summarizes the repetitions before it.
pub const MEDIAN_FLAG: &str = "median";

/// One line of the measurement CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRow {
    pub algorithm: String,
    pub n: u32,
    pub f: f64,
    pub pw_d: f64,
    pub pw_e: f64,
    #[serde(rename = "T_d")]
    pub t_d: f64,
    #[serde(rename = "T_e")]
    pub t_e: f64,
    pub null_fraction: f64,
    #[serde(rename = "P_cpu")]
    pub p_cpu: Option<f64>,
    #[serde(rename = "P_mem")]
    pub p_mem: Option<f64>,
    #[serde(rename = "P_unc")]
    pub p_unc: Option<f64>,
    pub flags: String,
}

impl MeasurementRow {
    pub fn new(algorithm: &str, n: u32, f: f64, pw_d: f64, pw_e: f64, m: &Measurement) -> Self {
        MeasurementRow {
            algorithm: algorithm.to_string(),
            n,
            f,
            pw_d,
            pw_e,
            t_d: m.t_d,
            t_e: m.t_e,
            null_fraction: m.null_fraction,
            p_cpu: m.power.map(|p| p.cpu),
            p_mem: m.power.map(|p| p.memory),
            p_unc: m.power.map(|p| p.uncore),
            flags: m.flags.join(";"),
        }
    }

    pub fn flag_list(&self) -> Vec<String> {
        self.flags.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
    }

    pub fn measurement(&self) -> Measurement {
        let power = match (self.p_cpu, self.p_mem) {
            (Some(cpu), Some(memory)) => {
                Some(ComponentWatts { cpu, memory, uncore: self.p_unc.unwrap_or(0.0) })
            }
            _ => None,
        };
        Measurement {
            t_d: self.t_d,
            t_e: self.t_e,
            null_fraction: self.null_fraction,
            elapsed_s: 0.0,
            power,
            repetitions: 1,
            flags: self.flag_list().into_iter().filter(|f| f != MEDIAN_FLAG).collect(),
        }
    }
}

/// Writes rows, with a header when `header` is true.
pub fn write_rows<W: Write>(rows: &[MeasurementRow], out: W, header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<MeasurementRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for r in reader.deserialize() {
        rows.push(r?);
    }
    Ok(rows)
}

fn key(x: f64) -> u64 {
    x.to_bits()
}

/// Groups rows for one (algorithm, n, f) into calibration inputs. Repetitions of a point
/// are reduced to their median; summary rows are used only when a point has nothing else.
pub fn inputs_from_rows(
    rows: &[MeasurementRow],
    points: CalibrationPoints,
    lambda_seconds: f64,
) -> Result<CalibrationInputs> {
    let first = rows.first().ok_or_else(|| Error::Calibration("no measurement rows".into()))?;
    if let Some(other) =
        rows.iter().find(|r| r.algorithm != first.algorithm || r.n != first.n || r.f != first.f)
    {
        return Err(Error::Calibration(format!(
            "rows mix configurations: ({}, n={}, f={}) and ({}, n={}, f={})",
            first.algorithm, first.n, first.f, other.algorithm, other.n, other.f
        )));
    }
    let mut reps: BTreeMap<(u64, u64), (Vec<Measurement>, Vec<Measurement>)> = BTreeMap::new();
    for r in rows {
        let e = reps.entry((key(r.pw_d), key(r.pw_e))).or_default();
        if r.flag_list().iter().any(|f| f == MEDIAN_FLAG) {
            e.1.push(r.measurement());
        } else {
            e.0.push(r.measurement());
        }
    }
    let mut measurements = Vec::new();
    for ((d, e), (runs, summaries)) in reps {
        let pick = if runs.is_empty() { summaries } else { runs };
        let point = PwPoint::new(f64::from_bits(d), f64::from_bits(e));
        measurements.push((point, median_measurement(&pick)?));
    }
    Ok(CalibrationInputs {
        algorithm: first.algorithm.clone(),
        n: first.n,
        f: first.f,
        lambda_seconds,
        points,
        measurements,
    })
}

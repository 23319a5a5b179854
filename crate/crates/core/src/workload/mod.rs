//! The synthetic queue benchmark: pause-bunch parallel work, pinned enqueuer/dequeuer
//! pairs, throughput counting over a steady window, and optional RAPL power sampling.

mod bench;
mod distribution;
mod measurement;
mod pause;
mod pin;
mod power;
mod records;

pub use bench::{run_benchmark, FLAG_NON_STEADY, FLAG_PIN_DEGRADED};
pub use distribution::measure_work_distribution;
pub use measurement::{median_measurement, Measurement, RunConfig};
pub use pause::{calibrate_pause_unit, parallel_work, spin, LambdaUnit, PAUSES_PER_BUNCH};
pub use pin::{pair_layout, physical_core_order, pin_current, pinning_disabled_by_env};
pub use power::{energy_delta_uj, read_power, FilePowerSource, PowerSource, RaplReader};
pub use records::{inputs_from_rows, read_rows, write_rows, MeasurementRow, MEDIAN_FLAG};

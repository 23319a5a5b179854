//! The analytical throughput and power model.

pub mod power;
pub mod throughput;

pub use power::{
    cpu_dynamic_power, dynamic_power, energy_per_op, passive_dynamic_power, total_power,
    ComponentBreakdown, ComponentPlatform, ComponentWatts, DynamicPowerParams, PlatformComponents,
    PlatformPowers, PowerBreakdown, Topology,
};
pub use throughput::{
    frontier, low_contention_throughput, queue_throughput, ratio, solve_combined, Basic,
    BasicThroughputModel, BasicThroughputs, CombinedSolution, CurveParams, Regime,
};

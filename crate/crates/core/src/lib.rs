//! Lock-free FIFO queues, a synthetic queue benchmark, and a white-box model predicting
//! throughput, power and energy per operation from eight calibration measurements.

pub mod calibrate;
pub mod cli;
pub mod error;
pub mod model;
pub mod predictor;
pub mod queues;
pub mod sim;
pub mod workload;

pub use error::{Error, Result};

//! Experiment harness: scaling benchmarks, result balancing, goal-inference
//! accuracy curves, study-episode export and response-log aggregation.

pub mod balance;
pub mod config;
pub mod episodes;
pub mod error;
pub mod irl_curves;
pub mod records;
pub mod responses;
pub mod scaling;

pub use config::BenchConfig;
pub use error::BenchError;
pub use records::{ResultRow, RowSink};

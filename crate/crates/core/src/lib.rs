//! Deterministic discrete-event simulation and scoring of real-time
//! multi-model, multi-task (MMMT) inference workloads.
//!
//! The pipeline is: a [`workload::BenchmarkSuite`] describes sources, models
//! and usage scenarios; [`loadgen::generate_requests`] turns a scenario into
//! a jittered request stream; [`runtime::simulate`] schedules the stream on a
//! [`costmodel::HardwareSystem`] and records an [`runtime::EventLog`]; and
//! [`scoring`] folds the log into real-time, energy, accuracy and QoE scores.

pub mod costmodel;
pub mod error;
pub mod loadgen;
pub mod runtime;
pub mod scoring;
pub mod time;
pub mod workload;

pub use costmodel::{CostEntry, CostTable, HardwareSystem, HardwareUnit};
pub use error::{Error, Result};
pub use loadgen::{generate_requests, InferenceRequest, RequestStream};
pub use runtime::{simulate, validate_schedule, EventLog, SchedulerPolicy, Status, TimelineEntry};
pub use scoring::{ScoreReport, ScoringConfig};
pub use time::Ticks;
pub use workload::{builtin_suite, BenchmarkSuite, UsageScenario};

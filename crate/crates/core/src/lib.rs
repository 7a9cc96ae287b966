//! Simulator for a time-shared, single-node delay reservoir computer.
//!
//! One nonlinear node with a delay loop emulates `N` virtual nodes per task.
//! Several tasks share the loop through time-division multiplexing: each task
//! owns a contiguous block of slots in the delay period, and consecutive
//! blocks are separated by two empty guard slots.
//!
//! Module map:
//!
//! - [`reservoir`]: masked sinusoidal virtual-node dynamics.
//! - [`tdm`]: slot layout, capacity bound, (de)interleaving.
//! - [`readout`]: ridge-regression linear readout and winner-take-all.
//! - [`tasks`]: NARMA-10, channel equalization, Santa Fe and digit datasets.
//! - [`metrics`]: NMSE, NRMSE, SER, WER.
//! - [`harness`]: config-driven experiment runner, sweeps and reports.
//! - [`exec`]: rayon-backed data parallelism with a sequential fallback.

pub mod exec;
pub mod harness;
pub mod metrics;
pub mod readout;
pub mod reservoir;
pub mod tasks;
pub mod tdm;

pub use harness::{ExperimentConfig, HarnessError, ResultRecord};
pub use metrics::{MetricName, MetricReport};
pub use readout::ReadoutModel;
pub use reservoir::{Coupling, Mask, MaskMode, ReservoirParams, StateMatrix};
pub use tasks::{TaskDataset, TaskKind};
pub use tdm::{TaskId, TaskSlotSpec, TdmSchedule};

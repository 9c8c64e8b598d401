//! Deterministic single-cell downlink MAC scheduling simulator.
//!
//! A run drives a set of UEs (FTP download and live HD video flows) through
//! 1 ms slots. Each slot one UE is granted the whole air interface by one of
//! four policies: BCQQ (buffer, CQI, QoS and QoE aware), M-LWDF, proportional
//! fair, and round robin. Runs report throughput, delay, loss, Jain's index
//! and a QoE-oriented fairness index.

pub mod buffer;
pub mod channel;
pub mod compare;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod output;
pub mod qoe;
pub mod rng;
pub mod scenario;
pub mod scheduler;
pub mod traffic;

/// Slot length in seconds.
pub const TTI_SECONDS: f64 = 1e-3;

pub use engine::{run, run_sweep, Engine, RunOutput};
pub use error::{Result, SimError};
pub use scenario::{parse_scenario, Scenario};
pub use scheduler::Policy;

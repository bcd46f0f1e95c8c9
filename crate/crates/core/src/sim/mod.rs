//! Deterministic lock-step simulation of a robot team carrying one object.

pub mod agent;
pub mod bus;
pub mod events;
pub mod logs;
pub mod metrics;
pub mod runner;
pub mod scenario;
pub mod task;

pub use agent::{Action, Observation, RobotAgent};
pub use bus::{broadcast_round, payload_sum, BroadcastMessage, MessageBus};
pub use events::{Event, EventSchedule};
pub use logs::RunLogs;
pub use metrics::{metrics_report, RunMetrics};
pub use runner::{report_from_dir, run_scenario, write_metrics, write_outputs, RunOutput, Simulation};
pub use scenario::{ControllerKind, Overrides, ScenarioConfig};
pub use task::TaskProfile;

use crate::error::Error;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("numerical failure at tick {tick}: {what}")]
    Numerical { tick: usize, what: String },

    #[error("bad or missing logs: {0}")]
    Logs(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SimError {
    pub(crate) fn from_config(e: Error) -> Self {
        SimError::Validation(e.to_string())
    }

    /// Process exit code: 2 for numerical failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Numerical { .. } => 2,
            _ => 1,
        }
    }
}

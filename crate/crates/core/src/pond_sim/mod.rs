//! Deterministic 2-D pond surface simulation: geometry, differential-thrust
//! dynamics, the sonar, classifier and whisker channels with scheduled
//! faults, and the closed control loop with collision ground truth.

mod dynamics;
mod episode;
mod geometry;
mod scenario;
mod sensing;

use thiserror::Error;

pub use dynamics::{normalize_angle, step_dynamics, AsvState, Physics};
pub use episode::{
    episode_seed, run_episode, write_trace_csv, EpisodeResult, Outcome, TickRecord, STOPPED_SURGE, TRACE_HEADER,
};
pub use geometry::{raycast_distance, Obstacle, PondMap};
pub use scenario::{
    Channel, ControllerConfig, FaultKind, FaultWindow, Goal, Pose, ScenarioConfig, SensorParams, StartJitter,
};
pub use sensing::{sense, Senses, SonarReading};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    ConfigInvalid(String),
    #[error("pose ({x}, {y}) is outside the pond")]
    PoseOutsidePond { x: f64, y: f64 },
}

//! The simulated world: constellation, vehicle truth and event schedule.

pub mod config;
pub mod constellation;
pub mod events;
pub mod trajectory;

pub use config::{load_config, load_config_file, ConfigError, ScenarioConfig};
pub use constellation::{propagate_constellation, visible_satellites, ConstellationConfig, SatelliteState};
pub use events::{active_events, ActiveEvents, EventSchedule, FaultWindow, OutageWindow};
pub use trajectory::{truth_state, GeodeticDeg, TrajectoryConfig, TrajectoryMode};

//! Scenario files, the lockstep runner, telemetry, metrics and field grids.

pub mod config;
pub mod field;
pub mod metrics;
pub mod runner;
pub mod telemetry;

pub use config::{load_scenario, ConfigError, GuidanceConfig, Scenario, ScenarioConfig, TrajectoryConfig};
pub use field::{default_bbox, export_field_grid, write_field_grid, FieldError, FieldGrid, FieldSlice};
pub use metrics::{compute_metrics, write_metrics_json, Metrics, MetricsContext};
pub use runner::{run_scenario, RunError, RunOutput};
pub use telemetry::{format_sig9, write_telemetry, TelemetryRecord, TELEMETRY_COLUMNS};

//! Scenario files, influent generation, the sampled simulation loop, metrics
//! and output files.

mod influent;
mod output;
mod run;
mod scenario;

pub use influent::{
    generate_influent, InfluentGenerator, InfluentMode, InfluentReading, InfluentSpec,
};
pub use output::{
    write_metrics_json, write_plot_files, write_run_files, write_sweep_summary,
    write_trajectory_csv, MetricsSidecar, NitrogenBalance, RECORD_COLUMNS, RECORD_SCHEMA_VERSION,
};
pub use run::{
    compute_metrics, run_scenario, run_sweep, Metrics, MetricsError, RunReport, RunStatus,
    TrajectoryRecord, TrajectoryRow, BAND_FRACTION,
};
pub use scenario::{BackwashSchedule, Scenario, ScenarioError, SensorSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            context: context.into(),
            source,
        }
    }
}

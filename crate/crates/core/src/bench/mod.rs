//! Scenario files, experiment runs and their CSV output.

pub mod experiment;
pub mod scenario;
pub mod verify;

pub use experiment::{
    emit_timing_decomposition, run_experiment, summarize, summary_csv, timing_decomposition,
    trace_csv, ExperimentError, ExperimentResult, ExperimentSpec, SummaryRow, TimingRow,
    SUMMARY_HEADER, TIMING_HEADER, TRACE_HEADER,
};
pub use scenario::{load_scenario, Loaded, PoiSpec, Preset, Scenario, ScenarioError};
pub use verify::{verify_report, VERIFY_HEADER};

//! JSON configuration and report formats, CSV trace writers.

mod config;
mod csv;
mod report;

pub use config::{InputConfig, ProblemConfig, SystemConfig};
pub use csv::{sim_csv, sim_csv_columns, trace_csv};
pub use report::{
    cell, round4, sweep_csv, AnalysisJson, AnalysisRounded, ControllerJson, SynthesisJson,
    SynthesisRounded, TfJson,
};

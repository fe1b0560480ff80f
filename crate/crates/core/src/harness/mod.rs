//! Experiment orchestration: configuration, the selection-and-reconstruction
//! pipeline, and report generation.

mod config;
mod pipeline;
mod report;

pub use config::{
    ConstraintChoice, DataSource, ExperimentConfig, Method, SolverChoice, CONFIG_KEYS,
};
pub use pipeline::{
    build_solver, default_alpha, load_data, plan_qubo, run_methods, run_pipeline, select_mask,
    solve_plan, MiTables, QuboPlan, Selection, Splits,
};
pub use report::{
    format_milli, mean_std, parse_report_csv, reports_to_csv, strip_timing, MetricsReport,
    RunRecord, CSV_HEADER,
};

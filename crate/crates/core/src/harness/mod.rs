//! Scenario files, experiment orchestration, error norms and reports.

mod experiment;
mod norms;
mod report;
mod scenario;
pub mod verify;

pub use experiment::{
    compute_reference, qoi_weight, run_experiment, ExperimentFailure, ExperimentReport, Provenance, Reference,
    SweepPoint, WallTime,
};
pub use norms::{error_with_stderr, field_error_norm};
pub use report::{
    density_csv, emit_report, error_vs_m_csv, error_vs_t_csv, lorenz_csv, DENSITY_HEADER, ERROR_VS_M_HEADER,
    ERROR_VS_T_HEADER, LORENZ_HEADER,
};
pub use scenario::{
    parse_scenario, ModelSection, NormOrdering, OutputSection, ReferenceKind, ScenarioSpec, SolverSection, UqSection,
};

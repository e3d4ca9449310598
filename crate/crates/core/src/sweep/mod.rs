//! Noise grids, per-family optimization, phase diagrams and persisted results.

pub mod cache;
pub mod config;
pub mod record;
pub mod run;

pub use cache::{cache_key, parse_cache_line, CacheLine, ResultCache};
pub use config::{log_space, noise_grid, GridMode, GridSpec, SweepConfig, DEFAULT_MASTER_SEED};
pub use record::{floored_infidelity, read_records, write_records, SweepRecord, INFIDELITY_FLOOR, RECORD_HEADER};
pub use run::{
    build_tasks, evaluate_point, evaluate_point_with, optimize_family, phase_diagram, plan, relative_difference,
    run_sweep, select_best, summarize, trial_seeds, write_outputs, PhaseDiagram, Plan, PointSummary, RunOptions,
    SweepResult, Task,
};

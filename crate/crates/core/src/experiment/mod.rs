//! Grid expansion, execution, persistence and reporting.

pub mod grid;
pub mod records;
pub mod report;
pub mod runner;

pub use grid::{cell_seed, expand_grid, Arm, CellKey, ExperimentGrid, GaSettings, RunConfig};
pub use records::{read_records, write_records, RunRecord, RunResult};
pub use report::{render_table, report, Report, Scope, SummaryRow, VerdictRow, VerdictTable};
pub use runner::{run_grid, run_single, GridOutcome, RunFailure};

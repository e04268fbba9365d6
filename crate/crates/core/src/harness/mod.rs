//! Closed-loop scenario runs, error statistics, Monte Carlo batches and the
//! CSV/JSON/SVG artifacts.
//!
//! Each epoch runs in a fixed order: truth, constellation and visibility,
//! link and event update per visible satellite, filter prediction, tracking
//! against the predicted pseudoranges, RAIM/FDE gating, filter update,
//! record. Position errors are reported in the ENU frame of the trajectory's
//! start point.

pub mod monte_carlo;
pub mod output;
pub mod plot;
pub mod run;
pub mod summary;

pub use monte_carlo::{aggregate, monte_carlo, Aggregate, MonteCarloReport, RunFailure};
pub use output::{
    attach_cn0_csv, read_epoch_csv, summary_json, write_cn0_csv, write_epoch_csv, write_epoch_csv_to,
    write_summary_json, OutputError, EPOCH_COLUMNS,
};
pub use plot::{emit_svg_plot, render_svg, PlotSeries};
pub use run::{run_scenario, EpochFlags, EpochRecord, RunError, SvDiagnostic};
pub use summary::{compute_summary, RunSummary, TOOL_VERSION};

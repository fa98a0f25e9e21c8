//! Scenario runs, parameter sweeps and figure data, with TOML input and
//! CSV/JSON output.

mod config;
mod figures;
mod output;
mod scenario;
mod sweep;

pub use config::{
    AxisSpec, InitialPreset, OutputFormat, OutputSpec, ScenarioConfig, Spacing, SweepParam, SweepSpec,
};
pub use figures::{
    emit_figure_data, fig3_config, CurveEntry, Figure, FigureManifest, FigureOptions, GridEntry, ALPHAS,
    FIG1_KAPPAS, FIG1_PANELS, FIG2_KAPPAS, M0,
};
pub use output::{trajectory_header, write_json, write_scenario, write_sweep, write_sweep_csv, write_trajectory_csv};
pub use scenario::{
    concurrence_peak, concurrence_series, decay_time, run_scenario, time_below, Peak, RunMetadata, ScenarioOutput,
};
pub use sweep::{cell_params, run_cell, run_sweep, Axis, Cell, CellRecord, SweepResult};

//! Scenario runner, metrics, sweeps, calibration and artifact output.

mod calibrate;
mod metrics;
mod output;
mod reservoir;
mod scenario;
mod sweep;

pub use calibrate::{calibrate_demand, CalibrationOutcome, CalibrationTarget};
pub use metrics::{
    compare, compute_metrics, percent_change, trip_times, Comparison, FuelModel, Metrics,
    PercentChange,
};
pub use output::{
    read_nfd, read_setpoint, write_nfd, write_run_outputs, write_setpoint, write_summary,
    write_table, RunSummary,
};
pub use reservoir::{first_surface_crossing, run_reservoir, Reservoir, ReservoirStep};
pub use scenario::{
    run_scenario, ControllerSpec, CycleRecord, GatingSettings, LinkRecord, PicParams, ScenarioMeta,
    ScenarioResult, ScenarioSpec, SmcParams, DEFAULT_HORIZON_S,
};
pub use sweep::{
    alpha_sweep, beta_sweep, pic_point, smc_grid, sweep, sweep_results, sweep_seeds, SweepPoint,
    SweepTable, TableRow,
};

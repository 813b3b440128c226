//! Reference weak-coupling series, power-law fits, active-space counting
//! and parameter sweeps over the κ–χ(–b) plane.

mod active;
mod fit;
mod series;
mod spin;
mod sweep;

pub use active::{active_space_structure, classify_orders, ActiveSpace, NonOrder, DEVIATION_FLOOR, ORDER_TOLERANCE};
pub use fit::{fit_leading_exponent, log_log_fit, ExponentFit, SLOPE_SPREAD, SNAP_DISTANCE};
pub use series::{
    isotropic_plane_three_fermions, one_dim_three_fermions, series_eval, series_table, series_vs_numerics, SeriesEntry,
    SeriesResidual, SeriesTable,
};
pub use spin::{polarized_configuration, spin_scaling_study, MagnetizationFit, SpinScaling, SPIN_STUDY_ORBITALS};
pub use sweep::{
    configuration_boundaries, crossing_detector, mark_boundaries, monotonicity_violations, run_pipeline, run_point,
    sweep, ConfigBoundary, CrossingCurve, GridAxis, GridPoint, Pipeline, PointResult, Spacing, SweepGrid, SweepRecord,
    Track,
};

//! Frequency diverse array (FDA) beampattern simulation.
//!
//! The crate evaluates the array factor of a `2N+1`-element linear FDA under
//! three frequency-offset laws (constant, observation-time modulated and
//! emission-time modulated), renders normalized power grids over slices of
//! `(t, r, θ)`, and checks causality properties of the resulting fields.

pub mod analysis;
pub mod array_factor;
pub mod config;
pub mod grid;
pub mod grid_io;
pub mod model;

pub use analysis::{
    check_causality, check_naive_focus_constancy, check_retarded_invariance, compare_models,
    estimate_focus_velocity, CausalityReport, InvarianceReport, ModelComparison, SampleDomain,
    VelocityReport,
};
pub use array_factor::{array_factor, power_db, FieldSample, GatingMode, Scenario};
pub use config::{load_config, ConfigError, SimulationConfig};
pub use grid::{
    find_focus, sweep, sweep_range_angle, sweep_time_range, AxisKind, AxisSpec, Execution,
    FocusTrajectory, GridError, PowerGrid,
};
pub use grid_io::{read_grid, write_grid, GridIoError};
pub use model::{
    emission_time, offset_at, ArrayGeometry, ExcitationWindow, FocusSpec, ModelError, OffsetModel,
    SpaceTimePoint,
};

//! Longitudinal vehicle simulation and speed-control library for an electric
//! drivetrain: plant model, incremental PID, a genetic gain tuner with a
//! disturbance-indexed gain table, and an online neural gain adapter.
//!
//! The crate is `no_std`-compatible (with `alloc`); the `std` feature, on by
//! default, only switches error trait impls and float intrinsics.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod ga;
pub mod nn;
pub mod pid;
pub mod plant;
pub mod sim;

pub use error::SimError;
pub use ga::{
    build_gain_table, lookup_gains, tune, GaConfig, GaResult, GainTable, GenerationStats,
    GridSpec, TableBuild, TablePid,
};
pub use nn::{NnConfig, NnPid, NnWeights};
pub use pid::{pid_step, Gains, PidCoefficients, PidState, PERCENT_SCALE};
pub use plant::{plant_step, Disturbance, DrivenAxle, VehicleParams, VehicleState};
pub use sim::{
    compute_metrics, run_closed_loop, builtin_scenario, FixedPid, Interpolation, Metrics,
    Profile, RunRecord, RunRow, Scenario, SimConfig, SpeedController,
};

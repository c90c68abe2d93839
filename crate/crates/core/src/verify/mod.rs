//! Numerical harnesses for the surface-area bounds on parallel sets: random
//! sweeps, monotonicity of coupled volumes, and a grid certificate for the
//! `r`-parallel (opening) property.

mod certificate;
mod monotonicity;
mod sweep;

pub use certificate::{r_parallel_certificate, Certificate, Fixture, RegionOracle, MAX_GRID_NODES};
pub use monotonicity::{
    monotonicity_check, monotonicity_oracle_two_ball, monotonicity_run, MonotonicityConfig, MonotonicityRun, Direction, MonotonicityReport, OracleMonotonicityReport,
    Violation, ORACLE_TOL,
};
pub use sweep::{
    generate_scene, scene_seed, sweep_record, thm1_sweep, thm2_sweep, BodyKind, GeneratedScene, SweepConfig,
    SweepKind, SweepRecord, SweepReport, ALLOWED_FAILURE_RATE, SWEEP_CSV_HEADER, THM1_MENU, THM2_MENU,
};

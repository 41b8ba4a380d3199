//! Two-stage scalar LQG regulation where the first control also sets the
//! accuracy of the next measurement: `Var(v_1) = σ_v² / (1 + γ u_0²)`.
//!
//! The stage-1 policy is the usual certainty-equivalent law, but the stage-0
//! cost-to-go `Q_0(u_0)` becomes a ratio of a quartic and a quadratic in
//! `u_0`, generally non-convex once `γ` is large. [`optimal_u0`] finds its
//! stationary points as the real roots of a quintic, keeps those where the
//! second derivative is positive, and returns the one with the smallest
//! `Q_0`. Near-ties go to the root furthest from `m_{0|0}`, then to the
//! smallest root.

mod cost;
mod model;
mod q0;
mod solve;
mod tables;

pub use cost::{expected_total_cost, monte_carlo_dmc, simulate_dmc, DmcRollout};
pub use model::{
    scalar_filter, stage1_constants, ScalarFilter, ScalarTwoStageModel, Stage1Constants,
};
pub use q0::{q0_coefficients, q0_coefficients_with, q0_eval, Q0Coefficients, Q0Form};
pub use solve::{
    grid_search_coefficients, grid_search_oracle, optimal_u0, optimal_u0_with, solve_u0,
    stationary_points, Candidate, Q_TIE_TOL, REALNESS_TOL, SECOND_DERIVATIVE_TOL, TRIM_TOL,
};
pub use tables::{
    curves_csv, m00_cases, q0_curves, sensitivity_sweep_u0, sweep_csv, uniform_points, Q0Curve,
    SweepCell, SweepStatus, U0Target,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DmcError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("no minimizing control at m00 = {m00}")]
    NoMinimizer { m00: f64 },
    #[error("root finder failed: {0}")]
    RootFinderFailure(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, DmcError>;

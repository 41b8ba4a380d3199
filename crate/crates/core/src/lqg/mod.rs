//! Linear-quadratic-Gaussian regulation.
//!
//! The state evolves as `x_{k+1} = A_k x_k + B_k u_k + w_k` and is observed
//! through `z_k = C_k x_k + D_{k-1} u_{k-1} + v_k`. Stage cost is
//! `x_kᵀ T_k x_k + u_kᵀ R_k u_k`, plus `x_Kᵀ T_K x_K` at the end.
//!
//! The Kalman filter ([`kalman_init`], [`kalman_predict`], [`kalman_correct`])
//! carries the Gaussian belief; [`lqr_gains`] runs the backward Riccati
//! recursion and [`lqg_control`] applies the certainty-equivalent law
//! `u_k = -L_k m_{k|k}`. Every matrix inverse is a Cholesky solve and every
//! covariance is re-symmetrized after it is updated.

mod gains;
mod kalman;
mod model;
mod simulate;

pub use gains::{analytic_expected_cost, lqg_control, lqr_gains, GainSchedule};
pub use kalman::{
    correct_covariance, kalman_correct, kalman_init, kalman_predict, precompute_covariances,
    predict_covariance, CovariancePair, GaussianBelief,
};
pub use model::{LqgModel, LqgStage, PD_TOL, PSD_TOL, SYMMETRY_TOL};
pub use simulate::{monte_carlo_lqg, simulate_lqg, trajectory_csv, LqgTrajectory};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LqgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{name} at stage {stage} is not symmetric")]
    NotSymmetric { name: &'static str, stage: usize },
    #[error("{name} at stage {stage} is not {required} (smallest eigenvalue {eigenvalue:e})")]
    NotDefinite {
        name: &'static str,
        stage: usize,
        required: &'static str,
        eigenvalue: f64,
    },
    #[error("innovation covariance at stage {stage} is numerically singular")]
    SingularInnovation { stage: usize },
    #[error("control weight R + BᵀKB at stage {stage} is numerically singular")]
    SingularControlWeight { stage: usize },
    #[error("invalid belief: {0}")]
    InvalidBelief(String),
}

pub type Result<T> = std::result::Result<T, LqgError>;

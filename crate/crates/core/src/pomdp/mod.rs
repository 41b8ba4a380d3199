//! Exact finite-horizon PO-MDP machinery.
//!
//! A [`PomdpModel`] holds stage-indexed, control-dependent transition,
//! transition-cost and observation matrices. The probabilistic state is a
//! [`Belief`] vector updated by Bayes' rule ([`belief_init`],
//! [`belief_update`]). The control-dependent cost-to-go is computed by direct
//! recursion over the (control, measurement) tree ([`q_vector`]), and the
//! optimal policy picks its smallest minimizing component
//! ([`optimal_control`]).
//!
//! Controls, states and measurements are 0-based indices throughout this
//! module. Terminal costs are not modelled separately; fold them into the
//! last stage's transition costs.

mod belief;
mod model;
mod rollout;
mod value;

pub use belief::{belief_init, belief_update, Belief};
pub use model::{PomdpModel, PomdpStage, STOCHASTIC_TOL};
pub(crate) use rollout::summarize;
pub use rollout::{monte_carlo_cost, simulate_rollout, MonteCarloEstimate, Rollout};
pub use value::{
    argmin, cost_to_go, expected_total_cost, optimal_control, q_vector, Solver, TIE_TOL,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PomdpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(
        "non-stochastic row {row} in {matrix} at stage {stage}{}: {reason}",
        control.map(|u| format!(" for control {u}")).unwrap_or_default()
    )]
    NonStochasticRow {
        matrix: &'static str,
        stage: usize,
        control: Option<usize>,
        row: usize,
        reason: String,
    },
    #[error("measurement {measurement} has zero probability at stage {stage}")]
    ZeroProbabilityMeasurement { stage: usize, measurement: usize },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid belief: {0}")]
    InvalidBelief(String),
}

pub type Result<T> = std::result::Result<T, PomdpError>;

#[cfg(test)]
mod tests;

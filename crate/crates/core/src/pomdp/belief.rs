use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::check_distribution;
use super::{PomdpError, PomdpModel, Result};

/// Probability vector over the state space at one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub stage: usize,
    pub p: Vec<f64>,
}

impl Belief {
    pub fn new(stage: usize, p: Vec<f64>) -> Result<Self> {
        check_distribution(&p).map_err(PomdpError::InvalidBelief)?;
        Ok(Self { stage, p })
    }

    /// Two-state belief `[1 - rho, rho]`, where `rho` is the probability of
    /// the second state.
    pub fn two_state(stage: usize, rho: f64) -> Self {
        Self {
            stage,
            p: vec![1.0 - rho, rho],
        }
    }

    /// Probability of the second state of a two-state belief.
    pub fn rho(&self) -> f64 {
        self.p[1]
    }
}

/// Unnormalized Bayes step `h ⊙ (Fᵀ p)`; returns the vector and its sum.
pub(crate) fn predict_correct(
    transition: &DMatrix<f64>,
    observation: &DMatrix<f64>,
    z: usize,
    p: &[f64],
) -> (Vec<f64>, f64) {
    let n_next = transition.ncols();
    let mut out = vec![0.0; n_next];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut pred = 0.0;
        for (i, &pi) in p.iter().enumerate() {
            pred += transition[(i, j)] * pi;
        }
        *slot = observation[(j, z)] * pred;
    }
    let total = out.iter().sum();
    (out, total)
}

pub(crate) fn normalize(mut v: Vec<f64>, total: f64) -> Vec<f64> {
    v.iter_mut().for_each(|x| *x /= total);
    v
}

/// Posterior over `x_0` after observing `z0`.
pub fn belief_init(model: &PomdpModel, z0: usize) -> Result<Belief> {
    let h0 = &model.initial_observation;
    if z0 >= h0.ncols() {
        return Err(PomdpError::IndexOutOfRange(format!(
            "measurement {z0} at stage 0 (s_0 = {})",
            h0.ncols()
        )));
    }
    let lik: Vec<f64> = model
        .initial_distribution
        .iter()
        .enumerate()
        .map(|(i, &pi)| h0[(i, z0)] * pi)
        .collect();
    let total: f64 = lik.iter().sum();
    if total <= 0.0 {
        return Err(PomdpError::ZeroProbabilityMeasurement {
            stage: 0,
            measurement: z0,
        });
    }
    Ok(Belief {
        stage: 0,
        p: normalize(lik, total),
    })
}

/// One prediction/correction step from stage `k - 1` to stage `k` after
/// applying control `u` and observing `z`.
pub fn belief_update(model: &PomdpModel, belief: &Belief, u: usize, z: usize) -> Result<Belief> {
    let k = belief.stage + 1;
    if k >= model.horizon {
        return Err(PomdpError::IndexOutOfRange(format!(
            "no measurement at stage {k} (K = {})",
            model.horizon
        )));
    }
    let prev = &model.stages[belief.stage];
    let next = &model.stages[k];
    if belief.p.len() != prev.n {
        return Err(PomdpError::DimensionMismatch(format!(
            "belief has length {}, stage {} has {} states",
            belief.p.len(),
            belief.stage,
            prev.n
        )));
    }
    if u >= prev.m {
        return Err(PomdpError::IndexOutOfRange(format!(
            "control {u} at stage {} (m = {})",
            belief.stage, prev.m
        )));
    }
    if z >= next.s {
        return Err(PomdpError::IndexOutOfRange(format!(
            "measurement {z} at stage {k} (s = {})",
            next.s
        )));
    }
    let (lik, total) = predict_correct(&prev.transition[u], &next.observation[u], z, &belief.p);
    if total <= 0.0 {
        return Err(PomdpError::ZeroProbabilityMeasurement {
            stage: k,
            measurement: z,
        });
    }
    Ok(Belief {
        stage: k,
        p: normalize(lik, total),
    })
}

use serde::{Deserialize, Serialize};

use super::belief::{belief_init, belief_update};
use super::{PomdpModel, Solver};
use crate::rng::{child_seed, sample_index, seeded_rng};

/// One sampled trajectory under the optimal policy.
///
/// `states` has `K + 1` entries; `controls` and `measurements` have `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub seed: u64,
    pub states: Vec<usize>,
    pub controls: Vec<usize>,
    pub measurements: Vec<usize>,
    pub realized_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; 0 when `n = 1`.
    pub stderr: f64,
    pub n: usize,
}

impl<'a> Solver<'a> {
    /// Samples `x_0`, then alternates measurement, filtered optimal control
    /// and transition until stage `K`, accumulating transition costs.
    pub fn simulate_rollout(&self, seed: u64) -> Rollout {
        let model = self.model();
        let mut rng = seeded_rng(seed);
        let mut x = sample_index(&mut rng, &model.initial_distribution);
        let h0 = &model.initial_observation;
        let z0 = sample_index(&mut rng, &row(h0, x));
        let mut belief = belief_init(model, z0).expect("sampled measurement is possible");

        let mut rollout = Rollout {
            seed,
            states: vec![x],
            controls: Vec::with_capacity(model.horizon),
            measurements: vec![z0],
            realized_cost: 0.0,
        };
        for k in 0..model.horizon {
            let st = &model.stages[k];
            let u = self.optimal_control(&belief);
            let x_next = sample_index(&mut rng, &row(&st.transition[u], x));
            rollout.realized_cost += st.cost[u][(x, x_next)];
            rollout.controls.push(u);
            rollout.states.push(x_next);
            x = x_next;
            if k + 1 < model.horizon {
                let h = &model.stages[k + 1].observation[u];
                let z = sample_index(&mut rng, &row(h, x));
                rollout.measurements.push(z);
                belief =
                    belief_update(model, &belief, u, z).expect("sampled measurement is possible");
            }
        }
        rollout
    }

    /// Mean and standard error of `n` rollouts; rollout `i` uses
    /// [`child_seed`]`(seed, i)`.
    pub fn monte_carlo_cost(&self, n: usize, seed: u64) -> MonteCarloEstimate {
        assert!(n >= 1, "need at least one rollout");
        let costs: Vec<f64> = crate::par::map_collect((0..n as u64).collect(), |i| {
            self.simulate_rollout(child_seed(seed, i)).realized_cost
        });
        summarize(&costs)
    }
}

pub(crate) fn summarize(samples: &[f64]) -> MonteCarloEstimate {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = samples.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    MonteCarloEstimate { mean, stderr, n }
}

fn row(m: &nalgebra::DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}

/// Single rollout with an uncached solver.
pub fn simulate_rollout(model: &PomdpModel, seed: u64) -> Rollout {
    Solver::new(model).simulate_rollout(seed)
}

/// Monte Carlo estimate of the optimal expected total cost.
///
/// Uses a cached solver, since rollouts revisit the same beliefs.
pub fn monte_carlo_cost(model: &PomdpModel, n: usize, seed: u64) -> MonteCarloEstimate {
    Solver::with_cache(model).monte_carlo_cost(n, seed)
}

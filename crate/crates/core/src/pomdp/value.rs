use std::collections::HashMap;
use std::sync::RwLock;

use super::belief::{belief_init, normalize, predict_correct};
use super::{Belief, PomdpModel};

type CacheKey = (usize, Vec<i64>);

/// Scale used to round beliefs for the optional value cache (12 decimals).
const CACHE_SCALE: f64 = 1e12;

/// Recursive cost-to-go evaluator for one model.
///
/// The plain solver recomputes the full (control, measurement) tree on every
/// query. [`Solver::with_cache`] memoizes `J_k` on beliefs rounded to 12
/// decimal digits; a cached value is always computed at the rounded belief
/// itself, so results do not depend on query order.
pub struct Solver<'a> {
    model: &'a PomdpModel,
    /// `immediate[k][u][i] = Σ_j F_k(u)[i, j] G_k(u)[i, j]`.
    immediate: Vec<Vec<Vec<f64>>>,
    cache: Option<RwLock<HashMap<CacheKey, f64>>>,
}

impl<'a> Solver<'a> {
    /// The model must already be valid (see [`PomdpModel::validate`]).
    pub fn new(model: &'a PomdpModel) -> Self {
        let immediate = model
            .stages
            .iter()
            .map(|st| {
                (0..st.m)
                    .map(|u| {
                        let f = &st.transition[u];
                        let g = &st.cost[u];
                        (0..st.n)
                            .map(|i| (0..f.ncols()).map(|j| f[(i, j)] * g[(i, j)]).sum())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            model,
            immediate,
            cache: None,
        }
    }

    pub fn with_cache(model: &'a PomdpModel) -> Self {
        Self {
            cache: Some(RwLock::new(HashMap::new())),
            ..Self::new(model)
        }
    }

    pub fn model(&self) -> &'a PomdpModel {
        self.model
    }

    /// Number of memoized beliefs (0 for an uncached solver).
    pub fn cache_len(&self) -> usize {
        self.cache
            .as_ref()
            .map_or(0, |c| c.read().expect("cache lock").len())
    }

    /// Control-dependent cost-to-go `q_k(p)`; component `u` assumes control `u`
    /// now and optimal behaviour afterwards.
    ///
    /// # Panics
    ///
    /// If `belief.stage >= K` or the belief length does not match `n_k`.
    pub fn q_vector(&self, belief: &Belief) -> Vec<f64> {
        assert!(
            belief.stage < self.model.horizon,
            "belief stage past horizon"
        );
        assert_eq!(
            belief.p.len(),
            self.model.stages[belief.stage].n,
            "belief length"
        );
        self.q_values(belief.stage, &belief.p)
    }

    pub fn cost_to_go(&self, belief: &Belief) -> f64 {
        min_value(&self.q_vector(belief))
    }

    /// Smallest index minimizing [`Solver::q_vector`].
    pub fn optimal_control(&self, belief: &Belief) -> usize {
        argmin(&self.q_vector(belief))
    }

    /// `Σ_{z0} Pr(z0) J_0(p_0(z0))`, skipping impossible initial measurements.
    pub fn expected_total_cost(&self) -> f64 {
        let h0 = &self.model.initial_observation;
        let mut total = 0.0;
        for z0 in 0..h0.ncols() {
            let prob: f64 = self
                .model
                .initial_distribution
                .iter()
                .enumerate()
                .map(|(i, &pi)| h0[(i, z0)] * pi)
                .sum();
            if prob > 0.0 {
                let belief = belief_init(self.model, z0).expect("positive measurement probability");
                total += prob * self.cost_to_go(&belief);
            }
        }
        total
    }

    fn q_values(&self, k: usize, p: &[f64]) -> Vec<f64> {
        let st = &self.model.stages[k];
        let last = k + 1 == self.model.horizon;
        (0..st.m)
            .map(|u| {
                let mut q = dot(p, &self.immediate[k][u]);
                if !last {
                    let next = &self.model.stages[k + 1];
                    for z in 0..next.s {
                        let (lik, prob) =
                            predict_correct(&st.transition[u], &next.observation[u], z, p);
                        // impossible branches contribute nothing and are never normalized
                        if prob > 0.0 {
                            q += prob * self.value(k + 1, &normalize(lik, prob));
                        }
                    }
                }
                q
            })
            .collect()
    }

    fn value(&self, k: usize, p: &[f64]) -> f64 {
        let Some(cache) = &self.cache else {
            return min_value(&self.q_values(k, p));
        };
        let key: Vec<i64> = p.iter().map(|x| (x * CACHE_SCALE).round() as i64).collect();
        let key = (k, key);
        if let Some(v) = cache.read().expect("cache lock").get(&key) {
            return *v;
        }
        let rounded: Vec<f64> = key.1.iter().map(|&x| x as f64 / CACHE_SCALE).collect();
        let total: f64 = rounded.iter().sum();
        let v = min_value(&self.q_values(k, &normalize(rounded, total)));
        cache.write().expect("cache lock").insert(key, v);
        v
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn min_value(q: &[f64]) -> f64 {
    q.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Relative width within which two q-values count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Smallest index whose value is within [`TIE_TOL`] (relative, floored at 1)
/// of the minimum. Exact ties between piecewise-linear curves otherwise get
/// resolved by rounding noise.
pub fn argmin(q: &[f64]) -> usize {
    let min = min_value(q);
    let slack = TIE_TOL * min.abs().max(1.0);
    q.iter().position(|&v| v <= min + slack).unwrap_or(0)
}

pub fn q_vector(model: &PomdpModel, belief: &Belief) -> Vec<f64> {
    Solver::new(model).q_vector(belief)
}

pub fn cost_to_go(model: &PomdpModel, belief: &Belief) -> f64 {
    Solver::new(model).cost_to_go(belief)
}

pub fn optimal_control(model: &PomdpModel, belief: &Belief) -> usize {
    Solver::new(model).optimal_control(belief)
}

/// Optimal expected total cost of the closed-loop strategy.
pub fn expected_total_cost(model: &PomdpModel) -> f64 {
    Solver::new(model).expected_total_cost()
}

//! Off-line measurement scheduling for LQG regulation with a finite sensor
//! menu.
//!
//! At each stage `k` a sensor `y_k` is chosen at cost `c_k(y_k)`; it fixes the
//! noise covariance of the next measurement. Because the Kalman error
//! covariances depend on the schedule but not on the measurements, the best
//! schedule solves a deterministic dynamic program over covariances:
//!
//! ```text
//! H_{K-1}(Σ) = tr(P_{K-1} Σ) + min_y c_{K-1}(y)
//! H_k(Σ)     = tr(P_k Σ) + min_y [ c_k(y) + H_{k+1}(f̃_k(Σ, y)) ]
//! ```
//!
//! Starting from the known `Σ_{0|0}`, only finitely many covariances are
//! reachable, so [`optimal_schedule`] enumerates that tree (merging
//! covariances that agree entrywise to about `1e-12`) and runs the recursion
//! backwards over it. Sensor indices are 0-based.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{is_symmetric, min_eigenvalue, serde_rows, serde_rows_vec, trace_of_product};
use crate::lqg::{
    correct_covariance, predict_covariance, GainSchedule, LqgError, LqgModel, PD_TOL, SYMMETRY_TOL,
};
use crate::pomdp::argmin;

/// Largest schedule space the exhaustive oracle will walk.
pub const ORACLE_LIMIT: u64 = 1_000_000;
/// Grid on which covariance entries are compared when merging tree nodes.
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error(transparent)]
    Lqg(#[from] LqgError),
    #[error("invalid sensor menu: {0}")]
    InvalidMenu(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("search space of {size} schedules exceeds the oracle limit")]
    SearchSpaceTooLarge { size: u128 },
}

pub type Result<T> = std::result::Result<T, ScheduleError>;

/// One sensor choice at stage `k`: the noise covariance it gives measurement
/// `k + 1`, and its cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorOption {
    #[serde(with = "serde_rows")]
    pub cov: DMatrix<f64>,
    pub cost: f64,
}

/// A base model plus per-stage sensor options. `Sigma_v` of the base model is
/// used only for the initial measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorMenu {
    pub base: LqgModel,
    pub options: Vec<Vec<SensorOption>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageCost {
    /// `tr(P_k Σ^y_{k|k})`.
    pub estimation: f64,
    /// `c_k(y_k)`.
    pub measurement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleResult {
    pub schedule: Vec<usize>,
    pub total_measurement_cost: f64,
    pub stage_costs: Vec<StageCost>,
    /// `Σ^y_{k|k}` for `k = 0..K-1`.
    #[serde(with = "serde_rows_vec")]
    pub covariances: Vec<DMatrix<f64>>,
}

impl SensorMenu {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("menu serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let s = self.base.s;
        if self.options.len() != self.base.horizon {
            return Err(ScheduleError::InvalidMenu(format!(
                "{} option lists for K = {}",
                self.options.len(),
                self.base.horizon
            )));
        }
        for (k, opts) in self.options.iter().enumerate() {
            if opts.is_empty() {
                return Err(ScheduleError::InvalidMenu(format!(
                    "stage {k} has no sensors"
                )));
            }
            for (y, o) in opts.iter().enumerate() {
                let bad = |why: &str| {
                    Err(ScheduleError::InvalidMenu(format!(
                        "stage {k}, sensor {y}: {why}"
                    )))
                };
                if o.cov.shape() != (s, s) {
                    return bad(&format!("covariance must be {s}x{s}"));
                }
                if !o.cost.is_finite() || o.cov.iter().any(|v| !v.is_finite()) {
                    return bad("non-finite entries");
                }
                if !is_symmetric(&o.cov, SYMMETRY_TOL) {
                    return bad("covariance is not symmetric");
                }
                if min_eigenvalue(&o.cov) < PD_TOL {
                    return bad("covariance is not positive definite");
                }
            }
        }
        Ok(())
    }

    /// Number of distinct schedules, `Π s_k`.
    pub fn schedule_count(&self) -> u128 {
        self.options.iter().map(|o| o.len() as u128).product()
    }

    fn initial_covariance(&self) -> Result<DMatrix<f64>> {
        let st = &self.base.stages[0];
        Ok(correct_covariance(
            &self.base.sigma_x0,
            &st.c,
            &st.sigma_v,
            0,
        )?)
    }
}

/// `f̃_k(Σ, y)`: predict through stage `k`, then correct with `C_{k+1}` and the
/// noise covariance of sensor `y`. Defined for `k ≤ K - 2`.
pub fn covariance_step(
    menu: &SensorMenu,
    k: usize,
    sigma: &DMatrix<f64>,
    y: usize,
) -> Result<DMatrix<f64>> {
    if k + 1 >= menu.base.horizon {
        return Err(ScheduleError::IndexOutOfRange(format!(
            "no measurement follows stage {k}"
        )));
    }
    let opt = menu.options[k]
        .get(y)
        .ok_or_else(|| ScheduleError::IndexOutOfRange(format!("sensor {y} at stage {k}")))?;
    let st = &menu.base.stages[k];
    let predicted = predict_covariance(sigma, &st.a, &st.sigma_w);
    Ok(correct_covariance(
        &predicted,
        &menu.base.stages[k + 1].c,
        &opt.cov,
        k + 1,
    )?)
}

/// Covariance trajectory and cost breakdown of a fixed schedule.
pub fn evaluate_schedule(
    menu: &SensorMenu,
    gains: &GainSchedule,
    schedule: &[usize],
) -> Result<ScheduleResult> {
    let horizon = menu.base.horizon;
    if schedule.len() != horizon {
        return Err(ScheduleError::IndexOutOfRange(format!(
            "schedule length {} for K = {horizon}",
            schedule.len()
        )));
    }
    if gains.p.len() != horizon {
        return Err(ScheduleError::IndexOutOfRange(format!(
            "{} gain stages for K = {horizon}",
            gains.p.len()
        )));
    }
    let mut sigma = menu.initial_covariance()?;
    let mut covariances = Vec::with_capacity(horizon);
    let mut stage_costs = Vec::with_capacity(horizon);
    for (k, &y) in schedule.iter().enumerate() {
        let opt = menu.options[k]
            .get(y)
            .ok_or_else(|| ScheduleError::IndexOutOfRange(format!("sensor {y} at stage {k}")))?;
        stage_costs.push(StageCost {
            estimation: trace_of_product(&gains.p[k], &sigma),
            measurement: opt.cost,
        });
        let next = if k + 1 < horizon {
            Some(covariance_step(menu, k, &sigma, y)?)
        } else {
            None
        };
        covariances.push(std::mem::replace(&mut sigma, next.unwrap_or_default()));
    }
    let total = stage_costs
        .iter()
        .map(|c| c.estimation + c.measurement)
        .sum();
    Ok(ScheduleResult {
        schedule: schedule.to_vec(),
        total_measurement_cost: total,
        stage_costs,
        covariances,
    })
}

/// `Σ_k [tr(P_k Σ^y_{k|k}) + c_k(y_k)]` for a fixed schedule.
pub fn schedule_cost(menu: &SensorMenu, gains: &GainSchedule, schedule: &[usize]) -> Result<f64> {
    evaluate_schedule(menu, gains, schedule).map(|r| r.total_measurement_cost)
}

struct Node {
    sigma: DMatrix<f64>,
    children: Vec<usize>,
}

fn merge_key(m: &DMatrix<f64>) -> Vec<i64> {
    m.iter().map(|x| (x / MERGE_TOL).round() as i64).collect()
}

/// Expands the reachable covariance tree one stage at a time.
fn build_tree(menu: &SensorMenu, merge: bool) -> Result<Vec<Vec<Node>>> {
    let horizon = menu.base.horizon;
    let mut levels = vec![vec![Node {
        sigma: menu.initial_covariance()?,
        children: vec![],
    }]];
    for k in 0..horizon - 1 {
        let parents = &levels[k];
        let work: Vec<(usize, usize)> = (0..parents.len())
            .flat_map(|i| (0..menu.options[k].len()).map(move |y| (i, y)))
            .collect();
        let steps = crate::par::map_collect(work.clone(), |(i, y)| {
            covariance_step(menu, k, &parents[i].sigma, y)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let mut next: Vec<Node> = Vec::new();
        let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut links = vec![Vec::new(); parents.len()];
        for ((i, _), sigma) in work.into_iter().zip(steps) {
            let slot = if merge {
                *index.entry(merge_key(&sigma)).or_insert_with(|| {
                    next.push(Node {
                        sigma: sigma.clone(),
                        children: vec![],
                    });
                    next.len() - 1
                })
            } else {
                next.push(Node {
                    sigma,
                    children: vec![],
                });
                next.len() - 1
            };
            links[i].push(slot);
        }
        for (node, l) in levels[k].iter_mut().zip(links) {
            node.children = l;
        }
        levels.push(next);
    }
    Ok(levels)
}

fn solve(menu: &SensorMenu, gains: &GainSchedule, merge: bool) -> Result<ScheduleResult> {
    menu.validate()?;
    let horizon = menu.base.horizon;
    if gains.p.len() != horizon {
        return Err(ScheduleError::IndexOutOfRange(format!(
            "{} gain stages for K = {horizon}",
            gains.p.len()
        )));
    }
    let levels = build_tree(menu, merge)?;
    let costs = |k: usize| menu.options[k].iter().map(|o| o.cost).collect::<Vec<f64>>();
    // values[k][node] = H_k at that node; choice[k][node] = minimizing sensor
    let last = costs(horizon - 1);
    let y_last = argmin(&last);
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); horizon];
    let mut choice: Vec<Vec<usize>> = vec![Vec::new(); horizon];
    values[horizon - 1] = levels[horizon - 1]
        .iter()
        .map(|n| trace_of_product(&gains.p[horizon - 1], &n.sigma) + last[y_last])
        .collect();
    choice[horizon - 1] = vec![y_last; levels[horizon - 1].len()];
    for k in (0..horizon - 1).rev() {
        let c = costs(k);
        let (vals, picks): (Vec<f64>, Vec<usize>) = levels[k]
            .iter()
            .map(|n| {
                let q: Vec<f64> = n
                    .children
                    .iter()
                    .zip(&c)
                    .map(|(&child, ck)| ck + values[k + 1][child])
                    .collect();
                let y = argmin(&q);
                (trace_of_product(&gains.p[k], &n.sigma) + q[y], y)
            })
            .unzip();
        values[k] = vals;
        choice[k] = picks;
    }
    let mut schedule = Vec::with_capacity(horizon);
    let mut node = 0;
    for k in 0..horizon {
        let y = choice[k][node];
        schedule.push(y);
        if k + 1 < horizon {
            node = levels[k][node].children[y];
        }
    }
    let mut result = evaluate_schedule(menu, gains, &schedule)?;
    result.total_measurement_cost = values[0][0];
    Ok(result)
}

/// Optimal schedule by backward recursion over the merged covariance tree.
/// Near-ties (relative `1e-12`) go to the smaller sensor index, stage by stage
/// from the front, which yields the lexicographically smallest optimum.
pub fn optimal_schedule(menu: &SensorMenu, gains: &GainSchedule) -> Result<ScheduleResult> {
    solve(menu, gains, true)
}

/// [`optimal_schedule`] over the full tree, without merging.
pub fn optimal_schedule_unmerged(
    menu: &SensorMenu,
    gains: &GainSchedule,
) -> Result<ScheduleResult> {
    solve(menu, gains, false)
}

/// Brute force over all `Π s_k` schedules in lexicographic order, keeping the
/// first one whose cost is not beaten by more than the tie tolerance.
pub fn exhaustive_schedule_oracle(
    menu: &SensorMenu,
    gains: &GainSchedule,
) -> Result<ScheduleResult> {
    menu.validate()?;
    let size = menu.schedule_count();
    if size > ORACLE_LIMIT as u128 {
        return Err(ScheduleError::SearchSpaceTooLarge { size });
    }
    let radices: Vec<usize> = menu.options.iter().map(Vec::len).collect();
    let schedules: Vec<Vec<usize>> = (0..size as u64)
        .map(|mut code| {
            let mut s = vec![0; radices.len()];
            for (k, &r) in radices.iter().enumerate().rev() {
                s[k] = (code % r as u64) as usize;
                code /= r as u64;
            }
            s
        })
        .collect();
    let totals = crate::par::map_collect(schedules.clone(), |s| schedule_cost(menu, gains, &s))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let best = argmin(&totals);
    evaluate_schedule(menu, gains, &schedules[best])
}

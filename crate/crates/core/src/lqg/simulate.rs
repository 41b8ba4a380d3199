use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    kalman_correct, kalman_init, kalman_predict, lqg_control, GainSchedule, GaussianBelief,
    LqgModel, Result,
};
use crate::format::{csv_line, g17};
use crate::linalg::{psd_sqrt, serde_vectors};
use crate::pomdp::{summarize, MonteCarloEstimate};
use crate::rng::{child_seed, seeded_rng};

/// One closed-loop run. `states` has `K + 1` entries; `controls`,
/// `measurements` and `beliefs` (filtered) have `K`; `stage_costs` has
/// `K + 1`, the last being the terminal cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqgTrajectory {
    pub seed: u64,
    #[serde(with = "serde_vectors")]
    pub states: Vec<DVector<f64>>,
    #[serde(with = "serde_vectors")]
    pub controls: Vec<DVector<f64>>,
    #[serde(with = "serde_vectors")]
    pub measurements: Vec<DVector<f64>>,
    pub beliefs: Vec<GaussianBelief>,
    pub stage_costs: Vec<f64>,
    pub realized_cost: f64,
}

/// Symmetric square roots of every noise covariance, so a Gaussian draw is
/// `mean + S ξ` with `ξ` standard normal.
struct NoiseFactors {
    x0: DMatrix<f64>,
    w: Vec<DMatrix<f64>>,
    v: Vec<DMatrix<f64>>,
}

impl NoiseFactors {
    fn new(model: &LqgModel) -> Self {
        Self {
            x0: psd_sqrt(&model.sigma_x0),
            w: model.stages.iter().map(|s| psd_sqrt(&s.sigma_w)).collect(),
            v: model.stages.iter().map(|s| psd_sqrt(&s.sigma_v)).collect(),
        }
    }
}

fn draw<R: Rng>(rng: &mut R, factor: &DMatrix<f64>) -> DVector<f64> {
    let xi = DVector::from_fn(factor.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    factor * xi
}

fn quad(x: &DVector<f64>, m: &DMatrix<f64>) -> f64 {
    (x.transpose() * m * x)[(0, 0)]
}

fn run(
    model: &LqgModel,
    gains: &GainSchedule,
    factors: &NoiseFactors,
    seed: u64,
) -> Result<LqgTrajectory> {
    let mut rng = seeded_rng(seed);
    let horizon = model.horizon;
    let mut x = &model.m_x0 + draw(&mut rng, &factors.x0);
    let mut traj = LqgTrajectory {
        seed,
        states: Vec::with_capacity(horizon + 1),
        controls: Vec::with_capacity(horizon),
        measurements: Vec::with_capacity(horizon),
        beliefs: Vec::with_capacity(horizon),
        stage_costs: Vec::with_capacity(horizon + 1),
        realized_cost: 0.0,
    };
    let mut u_prev = DVector::zeros(model.m);
    let mut belief: Option<GaussianBelief> = None;
    for k in 0..horizon {
        let st = &model.stages[k];
        let mut z = &st.c * &x + draw(&mut rng, &factors.v[k]);
        let filtered = match belief {
            None => kalman_init(model, &z)?,
            Some(prev) => {
                z += st.d_or_zero(model.m) * &u_prev;
                let predicted = kalman_predict(model, &prev, &u_prev)?;
                kalman_correct(model, &predicted, &u_prev, &z)?
            }
        };
        let u = lqg_control(gains, &filtered)?;
        traj.stage_costs.push(quad(&x, &st.t) + quad(&u, &st.r));
        let next = &st.a * &x + &st.b * &u + draw(&mut rng, &factors.w[k]);
        traj.states.push(std::mem::replace(&mut x, next));
        traj.controls.push(u.clone());
        traj.measurements.push(z);
        traj.beliefs.push(filtered.clone());
        belief = Some(filtered);
        u_prev = u;
    }
    traj.stage_costs.push(quad(&x, &model.terminal_cost));
    traj.states.push(x);
    traj.realized_cost = traj.stage_costs.iter().sum();
    Ok(traj)
}

/// Samples `x_0`, `w_k` and `v_k` from a generator seeded with `seed` and
/// runs the filter with the certainty-equivalent controls.
pub fn simulate_lqg(model: &LqgModel, gains: &GainSchedule, seed: u64) -> Result<LqgTrajectory> {
    model.validate()?;
    run(model, gains, &NoiseFactors::new(model), seed)
}

/// Mean realized cost over `n` runs; run `i` uses [`child_seed`]`(seed, i)`.
pub fn monte_carlo_lqg(
    model: &LqgModel,
    gains: &GainSchedule,
    n: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    assert!(n >= 1, "need at least one run");
    model.validate()?;
    let factors = NoiseFactors::new(model);
    let costs = crate::par::map_collect((0..n as u64).collect(), |i| {
        run(model, gains, &factors, child_seed(seed, i)).map(|t| t.realized_cost)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(summarize(&costs))
}

/// CSV with header `stage,x1..xn,u1..um,z1..zs,cost`; the terminal row leaves
/// the control and measurement columns empty.
pub fn trajectory_csv(traj: &LqgTrajectory) -> String {
    let n = traj.states.first().map_or(0, |x| x.len());
    let m = traj.controls.first().map_or(0, |u| u.len());
    let s = traj.measurements.first().map_or(0, |z| z.len());
    let mut header = vec!["stage".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=m).map(|i| format!("u{i}")));
    header.extend((1..=s).map(|i| format!("z{i}")));
    header.push("cost".into());
    let mut out = csv_line(header);
    out.push('\n');
    for (k, x) in traj.states.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(x.iter().map(|&v| g17(v)));
        match (traj.controls.get(k), traj.measurements.get(k)) {
            (Some(u), Some(z)) => {
                row.extend(u.iter().map(|&v| g17(v)));
                row.extend(z.iter().map(|&v| g17(v)));
            }
            _ => row.extend(std::iter::repeat_n(String::new(), m + s)),
        }
        row.push(g17(traj.stage_costs[k]));
        out.push_str(&csv_line(row));
        out.push('\n');
    }
    out
}

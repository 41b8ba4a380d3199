//! Random model generators and brute-force oracles shared by the integration suites.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sensorctl_core::dmc::ScalarTwoStageModel;
use sensorctl_core::lqg::{
    kalman_correct, kalman_init, kalman_predict, GaussianBelief, LqgModel, LqgStage,
};
use sensorctl_core::pomdp::{Belief, PomdpModel, PomdpStage, Solver};
use sensorctl_core::schedule::{SensorMenu, SensorOption};

pub fn stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(rows, cols, |_, _| {
        // occasional exact zeros exercise the zero-probability branches
        if rng.random::<f64>() < 0.15 {
            0.0
        } else {
            rng.random::<f64>()
        }
    });
    for mut r in m.row_iter_mut() {
        if r.sum() == 0.0 {
            r[0] = 1.0;
        }
        let s = r.sum();
        r /= s;
    }
    m
}

pub fn random_pomdp(
    seed: u64,
    n_max: usize,
    horizon: usize,
    m_max: usize,
    s_max: usize,
) -> PomdpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns: Vec<usize> = (0..=horizon).map(|_| rng.random_range(2..=n_max)).collect();
    let ms: Vec<usize> = (0..horizon).map(|_| rng.random_range(1..=m_max)).collect();
    let ss: Vec<usize> = (0..horizon).map(|_| rng.random_range(1..=s_max)).collect();
    let stages = (0..horizon)
        .map(|k| PomdpStage {
            n: ns[k],
            m: ms[k],
            s: ss[k],
            transition: (0..ms[k])
                .map(|_| stochastic(&mut rng, ns[k], ns[k + 1]))
                .collect(),
            cost: (0..ms[k])
                .map(|_| DMatrix::from_fn(ns[k], ns[k + 1], |_, _| rng.random_range(-5.0..5.0)))
                .collect(),
            observation: if k == 0 {
                vec![]
            } else {
                (0..ms[k - 1])
                    .map(|_| stochastic(&mut rng, ns[k], ss[k]))
                    .collect()
            },
        })
        .collect();
    let h0 = stochastic(&mut rng, ns[0], ss[0]);
    let p0 = stochastic(&mut rng, 1, ns[0])
        .row(0)
        .iter()
        .copied()
        .collect();
    let model = PomdpModel {
        horizon,
        stages,
        initial_observation: h0,
        initial_distribution: p0,
    };
    model.validate().expect("generator builds valid models");
    model
}

pub fn two_state_model(seed: u64, horizon: usize) -> PomdpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(2..=3);
    let s = rng.random_range(2..=3);
    let stages = (0..horizon)
        .map(|k| PomdpStage {
            n: 2,
            m,
            s,
            transition: (0..m).map(|_| stochastic(&mut rng, 2, 2)).collect(),
            cost: (0..m)
                .map(|_| DMatrix::from_fn(2, 2, |_, _| rng.random_range(0.0..10.0)))
                .collect(),
            observation: if k == 0 {
                vec![]
            } else {
                (0..m).map(|_| stochastic(&mut rng, 2, s)).collect()
            },
        })
        .collect();
    PomdpModel {
        horizon,
        stages,
        initial_observation: stochastic(&mut rng, 2, s),
        initial_distribution: vec![0.5, 0.5],
    }
}

/// Exact expected cost of a fixed control sequence that ignores measurements.
pub fn open_loop_cost(model: &PomdpModel, controls: &[usize]) -> f64 {
    let mut dist = model.initial_distribution.clone();
    let mut total = 0.0;
    for (k, &u) in controls.iter().enumerate() {
        let f = &model.stages[k].transition[u];
        let g = &model.stages[k].cost[u];
        let mut next = vec![0.0; f.ncols()];
        for i in 0..f.nrows() {
            for j in 0..f.ncols() {
                total += dist[i] * f[(i, j)] * g[(i, j)];
                next[j] += dist[i] * f[(i, j)];
            }
        }
        dist = next;
    }
    total
}

pub fn all_sequences(model: &PomdpModel) -> Vec<Vec<usize>> {
    let mut seqs = vec![vec![]];
    for st in &model.stages {
        seqs = seqs
            .into_iter()
            .flat_map(|s| {
                (0..st.m).map(move |u| {
                    let mut t = s.clone();
                    t.push(u);
                    t
                })
            })
            .collect();
    }
    seqs
}

/// Splits a 401-point grid into maximal runs with vanishing second differences
/// and checks that `J` is affine on each run, including off-grid midpoints.
pub fn check_piecewise_linear(model: &PomdpModel, k: usize) -> Result<(), String> {
    let solver = Solver::new(model);
    let n = 401;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let j: Vec<f64> = grid
        .iter()
        .map(|&r| solver.cost_to_go(&Belief::two_state(k, r)))
        .collect();
    let scale = 1.0 + j.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let flat: Vec<bool> = (0..n)
        .map(|i| i == 0 || i == n - 1 || (j[i + 1] - 2.0 * j[i] + j[i - 1]).abs() <= 1e-10 * scale)
        .collect();
    let mut start = 0;
    let mut segments = 0;
    let mut kink_cells = 0;
    while start < n - 1 {
        let mut end = start + 1;
        while end < n - 1 && flat[end] {
            end += 1;
        }
        if end == start + 1 {
            // a single cell may contain a breakpoint: only the chord bound holds
            let mid = 0.5 * (grid[start] + grid[end]);
            let actual = solver.cost_to_go(&Belief::two_state(k, mid));
            if actual < 0.5 * (j[start] + j[end]) - 1e-9 {
                return Err(format!("stage {k}: chord violated at rho {mid}"));
            }
            kink_cells += 1;
            start = end;
            continue;
        }
        segments += 1;
        let slope = (j[end] - j[start]) / (grid[end] - grid[start]);
        for i in start..end {
            let mid = 0.5 * (grid[i] + grid[i + 1]);
            let line = j[start] + slope * (mid - grid[start]);
            let actual = solver.cost_to_go(&Belief::two_state(k, mid));
            let on_grid = j[start] + slope * (grid[i] - grid[start]);
            if (actual - line).abs() > 1e-7 || (j[i] - on_grid).abs() > 1e-7 {
                return Err(format!("stage {k}, rho {mid}: {actual} vs {line}"));
            }
        }
        start = end;
    }
    if segments == 0 || kink_cells >= n / 4 {
        return Err(format!(
            "stage {k}: {segments} segments, {kink_cells} kink cells"
        ));
    }
    Ok(())
}

pub fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-scale..scale))
}

/// `G Gᵀ + floor·I`.
pub fn rand_psd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let g = rand_mat(rng, n, n, 1.0);
    let m = &g * g.transpose() + DMatrix::identity(n, n) * floor;
    (&m + m.transpose()) * 0.5
}

pub fn random_lqg(seed: u64, n: usize, s: usize, horizon: usize) -> LqgModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 1;
    let stages = (0..horizon)
        .map(|_| LqgStage {
            a: rand_mat(&mut rng, n, n, 1.2),
            b: rand_mat(&mut rng, n, m, 1.0),
            c: rand_mat(&mut rng, s, n, 1.0),
            d: Some(rand_mat(&mut rng, s, m, 1.0)),
            t: rand_psd(&mut rng, n, 0.0),
            r: rand_psd(&mut rng, m, 0.1),
            sigma_w: rand_psd(&mut rng, n, 0.0),
            sigma_v: rand_psd(&mut rng, s, 0.2),
        })
        .collect();
    LqgModel {
        horizon,
        n,
        m,
        s,
        stages,
        terminal_cost: rand_psd(&mut rng, n, 0.0),
        m_x0: DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)),
        sigma_x0: rand_psd(&mut rng, n, 0.05),
    }
}

/// Conditions `x_k` on `z_0..z_k` by writing every quantity as an affine map
/// of the stacked primitive noise `(x_0 - m_x0, w_0, ..., v_0, ...)`.
pub fn batch_posterior(
    model: &LqgModel,
    controls: &[DVector<f64>],
    zs: &[DVector<f64>],
) -> (DVector<f64>, DMatrix<f64>) {
    let (n, s) = (model.n, model.s);
    let k = zs.len() - 1;
    let dim = n + k * n + (k + 1) * s;
    let mut xi_cov = DMatrix::zeros(dim, dim);
    xi_cov.view_mut((0, 0), (n, n)).copy_from(&model.sigma_x0);
    for j in 0..k {
        let o = n + j * n;
        xi_cov
            .view_mut((o, o), (n, n))
            .copy_from(&model.stages[j].sigma_w);
    }
    for j in 0..=k {
        let o = n + k * n + j * s;
        xi_cov
            .view_mut((o, o), (s, s))
            .copy_from(&model.stages[j].sigma_v);
    }
    let mut mean_x = model.m_x0.clone();
    let mut map_x = DMatrix::zeros(n, dim);
    map_x
        .view_mut((0, 0), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    let mut z_mean = DVector::zeros((k + 1) * s);
    let mut z_map = DMatrix::zeros((k + 1) * s, dim);
    for j in 0..=k {
        let st = &model.stages[j];
        let mut zm = &st.c * &mean_x;
        if j > 0 {
            zm += st.d.as_ref().unwrap() * &controls[j - 1];
        }
        z_mean.rows_mut(j * s, s).copy_from(&zm);
        let mut zmap = &st.c * &map_x;
        let o = n + k * n + j * s;
        for i in 0..s {
            zmap[(i, o + i)] += 1.0;
        }
        z_map.rows_mut(j * s, s).copy_from(&zmap);
        if j < k {
            mean_x = &st.a * &mean_x + &st.b * &controls[j];
            map_x = &st.a * &map_x;
            let o = n + j * n;
            for i in 0..n {
                map_x[(i, o + i)] += 1.0;
            }
        }
    }
    let z_all = DVector::from_iterator((k + 1) * s, zs.iter().flat_map(|z| z.iter().copied()));
    let cov_xz = &map_x * &xi_cov * z_map.transpose();
    let cov_zz = &z_map * &xi_cov * z_map.transpose();
    let inv = cov_zz
        .try_inverse()
        .expect("measurement covariance invertible");
    let mean = mean_x + &cov_xz * &inv * (z_all - z_mean);
    let cov = &map_x * &xi_cov * map_x.transpose() - &cov_xz * &inv * cov_xz.transpose();
    (mean, cov)
}

pub fn filter(model: &LqgModel, controls: &[DVector<f64>], zs: &[DVector<f64>]) -> GaussianBelief {
    let mut b = kalman_init(model, &zs[0]).unwrap();
    for j in 1..zs.len() {
        let p = kalman_predict(model, &b, &controls[j - 1]).unwrap();
        b = kalman_correct(model, &p, &controls[j - 1], &zs[j]).unwrap();
    }
    b
}

pub fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    (a - b)
        .iter()
        .zip(b.iter())
        .all(|(d, v)| d.abs() <= tol * v.abs().max(1.0))
}

pub fn random_menu(seed: u64, horizon: usize, n: usize, s_max: usize) -> SensorMenu {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = rng.random_range(1..=n);
    let stages = (0..horizon)
        .map(|_| LqgStage {
            a: rand_mat(&mut rng, n, n, 1.3),
            b: rand_mat(&mut rng, n, 1, 1.0),
            c: rand_mat(&mut rng, s, n, 1.0),
            d: None,
            t: rand_psd(&mut rng, n, 0.0),
            r: rand_psd(&mut rng, 1, 0.1),
            sigma_w: rand_psd(&mut rng, n, 0.0),
            sigma_v: rand_psd(&mut rng, s, 0.1),
        })
        .collect();
    let base = LqgModel {
        horizon,
        n,
        m: 1,
        s,
        stages,
        terminal_cost: rand_psd(&mut rng, n, 0.0),
        m_x0: DVector::zeros(n),
        sigma_x0: rand_psd(&mut rng, n, 0.05),
    };
    let options = (0..horizon)
        .map(|_| {
            let count = rng.random_range(1..=s_max);
            (0..count)
                .map(|_| SensorOption {
                    cov: rand_psd(&mut rng, s, 0.01),
                    cost: rng.random_range(0.0..2.0),
                })
                .collect()
        })
        .collect();
    SensorMenu { base, options }
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

pub fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let v = log_uniform(rng, lo, hi);
    if rng.random_bool(0.5) {
        v
    } else {
        -v
    }
}

pub fn random_dmc(rng: &mut ChaCha8Rng) -> ScalarTwoStageModel {
    ScalarTwoStageModel {
        m_x: rng.random_range(-1.0..1.0),
        sigma_x2: log_uniform(rng, 0.1, 10.0),
        a: signed(rng, 0.1, 3.0),
        b: signed(rng, 0.1, 3.0),
        sigma_w2: log_uniform(rng, 0.1, 10.0),
        c: signed(rng, 0.1, 3.0),
        d: rng.random_range(-1.0..1.0),
        sigma_v2: log_uniform(rng, 0.1, 10.0),
        gamma: log_uniform(rng, 0.01, 100.0),
        t: log_uniform(rng, 0.1, 10.0),
        r: log_uniform(rng, 0.1, 10.0),
    }
}

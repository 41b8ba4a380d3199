use std::cell::Cell;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    optimal_u0_with, q0_coefficients_with, q0_eval, scalar_filter, stage1_constants, DmcError,
    Q0Form, Result, ScalarTwoStageModel,
};
use crate::pomdp::{summarize, MonteCarloEstimate};
use crate::rng::{child_seed, seeded_rng};

const QUAD_TOL: f64 = 1e-6;
const QUAD_WIDTH_SD: f64 = 8.0;
const QUAD_PANELS: usize = 64;
const QUAD_MAX_DEPTH: u32 = 40;

/// `E[min_u Q_0(u; m00(z_0))]` over the prior predictive law of `z_0`,
/// integrated by adaptive Simpson over `±8` standard deviations.
pub fn expected_total_cost(model: &ScalarTwoStageModel, form: Q0Form) -> Result<f64> {
    model.validate()?;
    let mean = model.c * model.m_x;
    let var = model.c * model.c * model.sigma_x2 + model.sigma_v2;
    let sd = var.sqrt();
    let failure: Cell<Option<DmcError>> = Cell::new(None);
    let integrand = |z: f64| {
        let m00 = scalar_filter(model, z).m00;
        let coeffs = q0_coefficients_with(model, m00, form);
        let q = match super::solve_u0(&coeffs) {
            Ok(u) => q0_eval(&coeffs, u),
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        };
        let s = (z - mean) / sd;
        q * (-0.5 * s * s).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    };
    let lo = mean - QUAD_WIDTH_SD * sd;
    let width = 2.0 * QUAD_WIDTH_SD * sd / QUAD_PANELS as f64;
    let tol = QUAD_TOL / QUAD_PANELS as f64;
    let total = (0..QUAD_PANELS)
        .map(|i| {
            let a = lo + i as f64 * width;
            simpson(&integrand, a, a + width, tol)
        })
        .sum();
    match failure.take() {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, QUAD_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// One closed-loop realization: `u_0` from [`optimal_u0_with`], `u_1` the
/// certainty-equivalent law on the stage-1 filtered mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmcRollout {
    pub seed: u64,
    pub x: [f64; 3],
    pub z: [f64; 2],
    pub u: [f64; 2],
    pub realized_cost: f64,
}

pub fn simulate_dmc(model: &ScalarTwoStageModel, form: Q0Form, seed: u64) -> Result<DmcRollout> {
    model.validate()?;
    let ScalarTwoStageModel {
        m_x,
        sigma_x2,
        a,
        b,
        sigma_w2,
        c,
        d,
        sigma_v2,
        gamma,
        t,
        r,
    } = *model;
    let mut rng = seeded_rng(seed);
    let mut normal = || rng.sample::<f64, _>(StandardNormal);
    let x0 = m_x + sigma_x2.sqrt() * normal();
    let z0 = c * x0 + sigma_v2.sqrt() * normal();
    let f = scalar_filter(model, z0);
    let u0 = optimal_u0_with(model, f.m00, form)?;
    let x1 = a * x0 + b * u0 + sigma_w2.sqrt() * normal();
    let sigma_v1 = sigma_v2 / (1.0 + gamma * u0 * u0);
    let z1 = c * x1 + d * u0 + sigma_v1.sqrt() * normal();
    let m10 = a * f.m00 + b * u0;
    let s11 = f.s10 - f.s10 * c * c * f.s10 / (c * c * f.s10 + sigma_v1);
    let m11 = m10 + s11 * c / sigma_v1 * (z1 - c * m10 - d * u0);
    let u1 = -stage1_constants(model).ell1 * m11;
    let x2 = a * x1 + b * u1 + sigma_w2.sqrt() * normal();
    let realized_cost = t * (x0 * x0 + x1 * x1 + x2 * x2) + r * (u0 * u0 + u1 * u1);
    Ok(DmcRollout {
        seed,
        x: [x0, x1, x2],
        z: [z0, z1],
        u: [u0, u1],
        realized_cost,
    })
}

pub fn monte_carlo_dmc(
    model: &ScalarTwoStageModel,
    form: Q0Form,
    n: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if n == 0 {
        return Err(DmcError::InvalidModel("need at least one rollout".into()));
    }
    let costs = crate::par::map_collect((0..n as u64).collect(), |i| {
        simulate_dmc(model, form, child_seed(seed, i)).map(|r| r.realized_cost)
    });
    let costs: Result<Vec<f64>> = costs.into_iter().collect();
    Ok(summarize(&costs?))
}

use nalgebra::{Complex, DMatrix, Schur};
use serde::{Deserialize, Serialize};

use super::q0::horner;
use super::{
    q0_coefficients_with, q0_eval, DmcError, Q0Coefficients, Q0Form, Result, ScalarTwoStageModel,
};

/// Leading derivative coefficients below this fraction of the largest are dropped.
pub const TRIM_TOL: f64 = 1e-12;
/// An eigenvalue is real when `|im| <= REALNESS_TOL * (1 + |re|)`.
pub const REALNESS_TOL: f64 = 1e-8;
/// A stationary point is kept when `ε(ω) >= -SECOND_DERIVATIVE_TOL * max(1, Σ|ε_i ωⁱ|)`.
pub const SECOND_DERIVATIVE_TOL: f64 = 1e-10;
/// Candidate values of `Q_0` within this relative distance are tied.
pub const Q_TIE_TOL: f64 = 1e-9;

const NEWTON_STEPS: usize = 8;
const SCHUR_MAX_ITER: usize = 1000;
/// Origin shifts tried in turn; symmetric root sets can stall unshifted QR.
const SHIFTS: [f64; 4] = [0.0, 0.3711, -0.6180, 1.2345];

/// Eigenvalues of the balanced companion matrix of `p(v + shift)`, shifted back.
fn shifted_eigenvalues(p: &[f64], shift: f64) -> Option<Vec<Complex<f64>>> {
    let mut q = p.to_vec();
    let n = q.len() - 1;
    for i in 0..n {
        for j in (i..n).rev() {
            q[j] += shift * q[j + 1];
        }
    }
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        companion[(i, n - 1)] = -q[i] / q[n];
    }
    nalgebra::linalg::balancing::balance_parlett_reinsch(&mut companion);
    let eigen = Schur::try_new(companion, f64::EPSILON, SCHUR_MAX_ITER)?.complex_eigenvalues();
    eigen
        .iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
        .then(|| {
            eigen
                .iter()
                .map(|z| Complex::new(z.re + shift, z.im))
                .collect()
        })
}

/// A real stationary point of `Q_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub u0: f64,
    pub q: f64,
    /// Numerator of `Q_0''`; its sign is the sign of the curvature.
    pub curvature: f64,
    pub is_minimum: bool,
}

/// Real roots of `Σ δ_i uⁱ`, polished against the untrimmed polynomial.
fn real_roots(delta: &[f64]) -> Result<Vec<f64>> {
    let scale = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if !scale.is_finite() {
        return Err(DmcError::RootFinderFailure(
            "non-finite derivative coefficients".into(),
        ));
    }
    if scale == 0.0 {
        return Err(DmcError::RootFinderFailure(
            "derivative vanishes identically".into(),
        ));
    }
    let degree = (0..delta.len())
        .rev()
        .find(|&i| delta[i].abs() >= TRIM_TOL * scale)
        .unwrap_or(0);
    if degree == 0 {
        return Ok(Vec::new());
    }
    let eigen = SHIFTS
        .iter()
        .find_map(|&shift| shifted_eigenvalues(&delta[..=degree], shift))
        .ok_or_else(|| {
            DmcError::RootFinderFailure("companion eigenvalues did not converge".into())
        })?;
    let derivative: Vec<f64> = (1..delta.len()).map(|i| i as f64 * delta[i]).collect();
    let mut roots: Vec<f64> = eigen
        .iter()
        .filter(|z| z.im.abs() <= REALNESS_TOL * (1.0 + z.re.abs()))
        .map(|z| polish(delta, &derivative, z.re))
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
    Ok(roots)
}

fn polish(p: &[f64], dp: &[f64], mut x: f64) -> f64 {
    let mut best = horner(p, x).abs();
    for _ in 0..NEWTON_STEPS {
        let slope = horner(dp, x);
        if slope == 0.0 || best == 0.0 {
            break;
        }
        let next = x - horner(p, x) / slope;
        let residual = horner(p, next).abs();
        if !(residual < best) {
            break;
        }
        x = next;
        best = residual;
    }
    x
}

/// Every real stationary point of `Q_0`, sorted by `u0`.
pub fn stationary_points(coeffs: &Q0Coefficients) -> Result<Vec<Candidate>> {
    Ok(real_roots(&coeffs.delta)?
        .into_iter()
        .map(|u0| {
            let curvature = horner(&coeffs.epsilon, u0);
            let magnitude: f64 = coeffs
                .epsilon
                .iter()
                .enumerate()
                .map(|(i, e)| (e * u0.powi(i as i32)).abs())
                .sum();
            Candidate {
                u0,
                q: q0_eval(coeffs, u0),
                curvature,
                is_minimum: curvature >= -SECOND_DERIVATIVE_TOL * magnitude.max(1.0),
            }
        })
        .collect())
}

/// Global minimizer of `Q_0` given its coefficients.
pub fn solve_u0(coeffs: &Q0Coefficients) -> Result<f64> {
    let minima: Vec<Candidate> = stationary_points(coeffs)?
        .into_iter()
        .filter(|c| c.is_minimum)
        .collect();
    let best = minima.iter().map(|c| c.q).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(DmcError::NoMinimizer { m00: coeffs.m00 });
    }
    let slack = Q_TIE_TOL * best.abs().max(1.0);
    let tied: Vec<&Candidate> = minima.iter().filter(|c| c.q <= best + slack).collect();
    let far = tied
        .iter()
        .map(|c| (c.u0 - coeffs.m00).abs())
        .fold(0.0f64, f64::max);
    let dist_slack = Q_TIE_TOL * far.max(1.0);
    Ok(tied
        .iter()
        .filter(|c| (c.u0 - coeffs.m00).abs() >= far - dist_slack)
        .map(|c| c.u0)
        .fold(f64::INFINITY, f64::min))
}

/// `u_0^*` at filtered mean `m00`, with the default [`Q0Form`].
pub fn optimal_u0(model: &ScalarTwoStageModel, m00: f64) -> Result<f64> {
    optimal_u0_with(model, m00, Q0Form::default())
}

pub fn optimal_u0_with(model: &ScalarTwoStageModel, m00: f64, form: Q0Form) -> Result<f64> {
    model.validate()?;
    if !m00.is_finite() {
        return Err(DmcError::InvalidModel(format!("m00 = {m00} is not finite")));
    }
    solve_u0(&q0_coefficients_with(model, m00, form))
}

/// Brute-force minimizer: a grid scan followed by golden-section refinement
/// around the best grid point. The first grid point wins exact ties.
pub fn grid_search_coefficients(
    coeffs: &Q0Coefficients,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && step > 0.0 && lo < hi) {
        return Err(DmcError::InvalidGrid(format!(
            "[{lo}, {hi}] with step {step}"
        )));
    }
    let n = ((hi - lo) / step).round() as usize;
    let point = |i: usize| if i == n { hi } else { lo + i as f64 * step };
    let (mut best_i, mut best_q) = (0, f64::INFINITY);
    for i in 0..=n {
        let q = q0_eval(coeffs, point(i));
        if q < best_q {
            best_i = i;
            best_q = q;
        }
    }
    let (mut a, mut b) = (point(best_i.saturating_sub(1)), point((best_i + 1).min(n)));
    let f = |u: f64| q0_eval(coeffs, u);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        }
    }
    let refined = 0.5 * (a + b);
    let grid_u = point(best_i);
    Ok(if f(refined) <= best_q {
        refined
    } else {
        grid_u
    })
}

pub fn grid_search_oracle(
    model: &ScalarTwoStageModel,
    m00: f64,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<f64> {
    model.validate()?;
    grid_search_coefficients(
        &q0_coefficients_with(model, m00, Q0Form::default()),
        lo,
        hi,
        step,
    )
}

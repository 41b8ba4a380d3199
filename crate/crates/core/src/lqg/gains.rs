use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{precompute_covariances, GaussianBelief, LqgError, LqgModel, Result};
use crate::linalg::{serde_rows_vec, spd_solve, symmetrize, trace_of_product};

/// Output of the backward Riccati recursion. `l` and `p` have `K` entries;
/// `k` has `K + 1`, ending with `K_K = T_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSchedule {
    #[serde(rename = "L", with = "serde_rows_vec")]
    pub l: Vec<DMatrix<f64>>,
    #[serde(rename = "P", with = "serde_rows_vec")]
    pub p: Vec<DMatrix<f64>>,
    #[serde(rename = "K", with = "serde_rows_vec")]
    pub k: Vec<DMatrix<f64>>,
}

/// `K_K = T_K`, then for `k = K-1, ..., 0`:
/// `L_k = (R_k + B_kᵀ K_{k+1} B_k)⁻¹ B_kᵀ K_{k+1} A_k`,
/// `P_k = A_kᵀ K_{k+1} B_k L_k`,
/// `K_k = A_kᵀ K_{k+1} A_k - P_k + T_k`.
pub fn lqr_gains(model: &LqgModel) -> Result<GainSchedule> {
    model.validate()?;
    let horizon = model.horizon;
    let mut l = vec![DMatrix::zeros(0, 0); horizon];
    let mut p = vec![DMatrix::zeros(0, 0); horizon];
    let mut k_mats = vec![DMatrix::zeros(0, 0); horizon + 1];
    k_mats[horizon] = model.terminal_cost.clone();
    for k in (0..horizon).rev() {
        let st = &model.stages[k];
        let next = &k_mats[k + 1];
        let bt_k = st.b.transpose() * next;
        let weight = symmetrize(&(&st.r + &bt_k * &st.b));
        let lk = spd_solve(&weight, &(&bt_k * &st.a))
            .ok_or(LqgError::SingularControlWeight { stage: k })?;
        let at_k = st.a.transpose() * next;
        let pk = symmetrize(&(&at_k * &st.b * &lk));
        k_mats[k] = symmetrize(&(&at_k * &st.a - &pk + &st.t));
        l[k] = lk;
        p[k] = pk;
    }
    Ok(GainSchedule { l, p, k: k_mats })
}

/// Certainty-equivalent control `-L_k m_{k|k}`.
pub fn lqg_control(gains: &GainSchedule, belief: &GaussianBelief) -> Result<DVector<f64>> {
    let lk = gains
        .l
        .get(belief.stage)
        .ok_or_else(|| LqgError::InvalidBelief(format!("no gain for stage {}", belief.stage)))?;
    if lk.ncols() != belief.mean.len() {
        return Err(LqgError::DimensionMismatch(format!(
            "gain has {} columns, mean has length {}",
            lk.ncols(),
            belief.mean.len()
        )));
    }
    Ok(-(lk * &belief.mean))
}

/// Optimal expected total cost of the closed loop:
/// `m_x0ᵀ K_0 m_x0 + tr(K_0 Σ_x0) + Σ_k tr(K_{k+1} Σ_w_k) + Σ_k tr(P_k Σ_{k|k})`.
///
/// The first three terms are the perfect-information cost; the last sum is
/// the price of estimating the state.
pub fn analytic_expected_cost(model: &LqgModel, gains: &GainSchedule) -> Result<f64> {
    let covs = precompute_covariances(model)?;
    let k0 = &gains.k[0];
    let mut total =
        (model.m_x0.transpose() * k0 * &model.m_x0)[(0, 0)] + trace_of_product(k0, &model.sigma_x0);
    for (k, st) in model.stages.iter().enumerate() {
        total += trace_of_product(&gains.k[k + 1], &st.sigma_w);
        total += trace_of_product(&gains.p[k], &covs[k].filtered);
    }
    Ok(total)
}

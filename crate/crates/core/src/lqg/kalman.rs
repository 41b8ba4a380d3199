use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{LqgError, LqgModel, Result};
use crate::linalg::{serde_rows, serde_vector, spd_solve, symmetrize};

/// Gaussian probabilistic state at `stage`: either a filtered `(m_{k|k},
/// Σ_{k|k})` or a predicted `(m_{k|k-1}, Σ_{k|k-1})` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBelief {
    pub stage: usize,
    #[serde(with = "serde_vector")]
    pub mean: DVector<f64>,
    #[serde(with = "serde_rows")]
    pub cov: DMatrix<f64>,
}

/// `(Σ_{k|k-1}, Σ_{k|k})` for one stage; at stage 0 the prediction is `Σ_x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariancePair {
    #[serde(with = "serde_rows")]
    pub predicted: DMatrix<f64>,
    #[serde(with = "serde_rows")]
    pub filtered: DMatrix<f64>,
}

/// Measurement update of a covariance: returns `Σ - Σ Cᵀ S⁻¹ C Σ` and the
/// gain `Σ Cᵀ S⁻¹`, where `S = C Σ Cᵀ + Σ_v`.
fn correct_parts(
    sigma: &DMatrix<f64>,
    c: &DMatrix<f64>,
    sigma_v: &DMatrix<f64>,
    stage: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let innovation = symmetrize(&(c * sigma * c.transpose() + sigma_v));
    let cs = c * sigma;
    let x = spd_solve(&innovation, &cs).ok_or(LqgError::SingularInnovation { stage })?;
    let gain = x.transpose();
    let filtered = symmetrize(&(sigma - cs.transpose() * &x));
    Ok((filtered, gain))
}

/// Covariance half of the correction step at `stage`.
pub fn correct_covariance(
    predicted: &DMatrix<f64>,
    c: &DMatrix<f64>,
    sigma_v: &DMatrix<f64>,
    stage: usize,
) -> Result<DMatrix<f64>> {
    correct_parts(predicted, c, sigma_v, stage).map(|(f, _)| f)
}

/// `A Σ Aᵀ + Σ_w`.
pub fn predict_covariance(
    filtered: &DMatrix<f64>,
    a: &DMatrix<f64>,
    sigma_w: &DMatrix<f64>,
) -> DMatrix<f64> {
    symmetrize(&(a * filtered * a.transpose() + sigma_w))
}

fn check_vec(name: &str, v: &DVector<f64>, len: usize) -> Result<()> {
    if v.len() != len {
        return Err(LqgError::DimensionMismatch(format!(
            "{name} has length {}, expected {len}",
            v.len()
        )));
    }
    Ok(())
}

/// Conditions the prior `N(m_x0, Σ_x0)` on the first measurement `z0`.
pub fn kalman_init(model: &LqgModel, z0: &DVector<f64>) -> Result<GaussianBelief> {
    check_vec("z0", z0, model.s)?;
    let st = &model.stages[0];
    let (cov, gain) = correct_parts(&model.sigma_x0, &st.c, &st.sigma_v, 0)?;
    let mean = &model.m_x0 + gain * (z0 - &st.c * &model.m_x0);
    Ok(GaussianBelief {
        stage: 0,
        mean,
        cov,
    })
}

/// Propagates a stage-`k-1` filtered belief through the dynamics with
/// control `u`, giving the stage-`k` prediction.
pub fn kalman_predict(
    model: &LqgModel,
    belief: &GaussianBelief,
    u: &DVector<f64>,
) -> Result<GaussianBelief> {
    if belief.stage >= model.horizon {
        return Err(LqgError::InvalidBelief(format!(
            "stage {} is past the last control stage",
            belief.stage
        )));
    }
    check_vec("u", u, model.m)?;
    let st = &model.stages[belief.stage];
    Ok(GaussianBelief {
        stage: belief.stage + 1,
        mean: &st.a * &belief.mean + &st.b * u,
        cov: predict_covariance(&belief.cov, &st.a, &st.sigma_w),
    })
}

/// Corrects a stage-`k` prediction with measurement `z`, where `u_prev` is the
/// control applied at stage `k-1`.
pub fn kalman_correct(
    model: &LqgModel,
    predicted: &GaussianBelief,
    u_prev: &DVector<f64>,
    z: &DVector<f64>,
) -> Result<GaussianBelief> {
    let k = predicted.stage;
    if k == 0 || k >= model.horizon {
        return Err(LqgError::InvalidBelief(format!(
            "no measurement update at stage {k}"
        )));
    }
    check_vec("u_prev", u_prev, model.m)?;
    check_vec("z", z, model.s)?;
    let st = &model.stages[k];
    let (cov, gain) = correct_parts(&predicted.cov, &st.c, &st.sigma_v, k)?;
    let innovation = z - &st.c * &predicted.mean - st.d_or_zero(model.m) * u_prev;
    Ok(GaussianBelief {
        stage: k,
        mean: &predicted.mean + gain * innovation,
        cov,
    })
}

/// Covariance trajectory of the filter, which depends on neither the controls
/// nor the measurements. Entry `k` holds `(Σ_{k|k-1}, Σ_{k|k})` for
/// `k = 0..K-1`.
pub fn precompute_covariances(model: &LqgModel) -> Result<Vec<CovariancePair>> {
    let mut out = Vec::with_capacity(model.horizon);
    let mut predicted = model.sigma_x0.clone();
    for k in 0..model.horizon {
        let st = &model.stages[k];
        let filtered = correct_covariance(&predicted, &st.c, &st.sigma_v, k)?;
        out.push(CovariancePair {
            predicted,
            filtered: filtered.clone(),
        });
        predicted = predict_covariance(&filtered, &st.a, &st.sigma_w);
    }
    Ok(out)
}

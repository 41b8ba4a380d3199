use serde::{Deserialize, Serialize};

use super::{DmcError, Result};
use crate::lqg::{LqgModel, LqgStage};

/// Scalar two-stage model. Variances are given directly (`sigma_x2 = σ_x²`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarTwoStageModel {
    pub m_x: f64,
    pub sigma_x2: f64,
    pub a: f64,
    pub b: f64,
    pub sigma_w2: f64,
    pub c: f64,
    pub d: f64,
    pub sigma_v2: f64,
    /// Sensor influence: `Var(v_1) = σ_v² / (1 + γ u_0²)`.
    pub gamma: f64,
    pub t: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage1Constants {
    pub ell1: f64,
    pub rho1: f64,
    pub kappa1: f64,
}

/// Stage-0 filter output: `m_{0|0}`, `σ²_{0|0}` and `σ²_{1|0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarFilter {
    pub m00: f64,
    pub s00: f64,
    pub s10: f64,
}

impl ScalarTwoStageModel {
    /// All-ones parameters with `m_x = d = 0` and the given `γ`.
    pub fn nominal(gamma: f64) -> Self {
        Self {
            m_x: 0.0,
            sigma_x2: 1.0,
            a: 1.0,
            b: 1.0,
            sigma_w2: 1.0,
            c: 1.0,
            d: 0.0,
            sigma_v2: 1.0,
            gamma,
            t: 1.0,
            r: 1.0,
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("m_x", self.m_x),
            ("sigma_x2", self.sigma_x2),
            ("a", self.a),
            ("b", self.b),
            ("sigma_w2", self.sigma_w2),
            ("c", self.c),
            ("d", self.d),
            ("sigma_v2", self.sigma_v2),
            ("gamma", self.gamma),
            ("t", self.t),
            ("r", self.r),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(DmcError::InvalidModel(format!(
                "{name} = {v} is not finite"
            )));
        }
        let positive = [
            ("sigma_x2", self.sigma_x2),
            ("sigma_w2", self.sigma_w2),
            ("sigma_v2", self.sigma_v2),
            ("gamma", self.gamma),
            ("r", self.r),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(DmcError::InvalidModel(format!(
                "{name} = {v} must be positive"
            )));
        }
        if self.t < 0.0 {
            return Err(DmcError::InvalidModel(format!(
                "t = {} must be nonnegative",
                self.t
            )));
        }
        Ok(())
    }

    /// The same problem as a 1-dimensional [`LqgModel`] with `γ = 0`.
    pub fn to_lqg(&self) -> LqgModel {
        let stage = LqgStage::scalar(
            self.a,
            self.b,
            self.c,
            self.d,
            self.t,
            self.r,
            self.sigma_w2,
            self.sigma_v2,
        );
        LqgModel {
            horizon: 2,
            n: 1,
            m: 1,
            s: 1,
            stages: vec![stage; 2],
            terminal_cost: nalgebra::DMatrix::from_element(1, 1, self.t),
            m_x0: nalgebra::DVector::from_element(1, self.m_x),
            sigma_x0: nalgebra::DMatrix::from_element(1, 1, self.sigma_x2),
        }
    }

    /// `γ → 0` limit of the stage-0 gain, `ℓ_0 = abκ_1 / (r + b²κ_1)`.
    pub fn lqg_gain0(&self) -> f64 {
        let k1 = stage1_constants(self).kappa1;
        self.a * self.b * k1 / (self.r + self.b * self.b * k1)
    }
}

/// `ℓ_1 = bta/(r+b²t)`, `ρ_1 = (bta)²/(r+b²t)`, `κ_1 = t(a²r+b²t+r)/(r+b²t)`.
pub fn stage1_constants(model: &ScalarTwoStageModel) -> Stage1Constants {
    let ScalarTwoStageModel { a, b, t, r, .. } = *model;
    let den = r + b * b * t;
    let bta = b * t * a;
    Stage1Constants {
        ell1: bta / den,
        rho1: bta * bta / den,
        kappa1: t * (a * a * r + b * b * t + r) / den,
    }
}

pub fn scalar_filter(model: &ScalarTwoStageModel, z0: f64) -> ScalarFilter {
    let ScalarTwoStageModel {
        m_x,
        sigma_x2,
        a,
        c,
        sigma_v2,
        sigma_w2,
        ..
    } = *model;
    let s00 = sigma_x2 * sigma_v2 / (c * c * sigma_x2 + sigma_v2);
    let m00 = m_x + c * (s00 / sigma_v2) * (z0 - c * m_x);
    ScalarFilter {
        m00,
        s00,
        s10: a * a * s00 + sigma_w2,
    }
}

use serde::{Deserialize, Serialize};

use super::{scalar_filter, stage1_constants, ScalarTwoStageModel};

/// Weight on the `c²σ⁴_{1|0}` information terms of `α_2` and `α_0`.
///
/// `Unit` is the commonly quoted closed form, which weights them by 1.
/// `Exact` weights them by `κ_1`, which is what the conditional expectation
/// of the stage-1 cost-to-go actually produces; the two agree when `κ_1 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Q0Form {
    #[default]
    Unit,
    Exact,
}

impl Q0Form {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unit" => Some(Q0Form::Unit),
            "exact" => Some(Q0Form::Exact),
            _ => None,
        }
    }
}

/// `Q_0(u) = Σ α_i uⁱ / (β_2 u² + β_0)`, with the numerators of its first
/// derivative (`Σ δ_i uⁱ / den²`) and second derivative (`Σ ε_i uⁱ / den⁴`).
/// Index `i` is the power of `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Q0Coefficients {
    pub m00: f64,
    pub alpha: [f64; 5],
    pub beta0: f64,
    pub beta2: f64,
    pub delta: [f64; 6],
    pub epsilon: [f64; 9],
}

impl Q0Coefficients {
    /// Builds the derivative coefficients from `α` and `β`.
    pub fn from_alpha_beta(m00: f64, alpha: [f64; 5], beta0: f64, beta2: f64) -> Self {
        let [a0, a1, a2, a3, a4] = alpha;
        let (b0, b2) = (beta0, beta2);
        let delta = [
            a1 * b0,
            2.0 * (a2 * b0 - a0 * b2),
            3.0 * a3 * b0 - a1 * b2,
            4.0 * a4 * b0,
            a3 * b2,
            2.0 * a4 * b2,
        ];
        let [d0, d1, d2, d3, d4, d5] = delta;
        let epsilon = [
            d1 * b0 * b0,
            2.0 * d2 * b0 * b0 - 4.0 * d0 * b2 * b0,
            3.0 * d3 * b0 * b0 - 2.0 * d1 * b2 * b0,
            4.0 * (d4 * b0 * b0 - d0 * b2 * b2),
            5.0 * d5 * b0 * b0 + 2.0 * d3 * b2 * b0 - 3.0 * d1 * b2 * b2,
            4.0 * d4 * b2 * b0 - 2.0 * d2 * b2 * b2,
            6.0 * d5 * b2 * b0 - d3 * b2 * b2,
            0.0,
            d5 * b2 * b2,
        ];
        Self {
            m00,
            alpha,
            beta0,
            beta2,
            delta,
            epsilon,
        }
    }

    pub fn denominator(&self, u: f64) -> f64 {
        self.beta2 * u * u + self.beta0
    }

    pub fn first_derivative(&self, u: f64) -> f64 {
        horner(&self.delta, u) / self.denominator(u).powi(2)
    }

    pub fn second_derivative(&self, u: f64) -> f64 {
        horner(&self.epsilon, u) / self.denominator(u).powi(4)
    }
}

pub(crate) fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Coefficients of `Q_0` at filtered mean `m00` in the [`Q0Form::Unit`] form.
pub fn q0_coefficients(model: &ScalarTwoStageModel, m00: f64) -> Q0Coefficients {
    q0_coefficients_with(model, m00, Q0Form::Unit)
}

pub fn q0_coefficients_with(model: &ScalarTwoStageModel, m00: f64, form: Q0Form) -> Q0Coefficients {
    let ScalarTwoStageModel {
        a,
        b,
        c,
        sigma_v2,
        sigma_w2,
        gamma,
        t,
        r,
        ..
    } = *model;
    let f = scalar_filter(model, model.m_x);
    let k = stage1_constants(model);
    let (s00, s10) = (f.s00, f.s10);
    let info_weight = match form {
        Q0Form::Unit => 1.0,
        Q0Form::Exact => k.kappa1,
    };
    let beta2 = c * c * s10 * gamma;
    let beta0 = c * c * s10 + sigma_v2;
    let state = t * (m00 * m00 + s00 + sigma_w2) + k.kappa1 * a * a * m00 * m00;
    let info = info_weight * c * c * s10 * s10;
    let control = r + b * b * k.kappa1;
    let alpha = [
        state * beta0 + (k.kappa1 + k.rho1) * s10 * sigma_v2 + info,
        2.0 * a * b * k.kappa1 * m00 * beta0,
        control * beta0 + state * beta2 + info * gamma,
        2.0 * a * b * k.kappa1 * m00 * beta2,
        control * beta2,
    ];
    Q0Coefficients::from_alpha_beta(m00, alpha, beta0, beta2)
}

pub fn q0_eval(coeffs: &Q0Coefficients, u0: f64) -> f64 {
    horner(&coeffs.alpha, u0) / coeffs.denominator(u0)
}

use serde::{Deserialize, Serialize};

use super::{
    optimal_u0_with, q0_coefficients_with, q0_eval, scalar_filter, solve_u0, DmcError, Q0Form,
    Result, ScalarTwoStageModel,
};
use crate::format::{csv_line, g17};

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn uniform_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Filtered means `m_x + f σ_{0|0}` for `f` in `0, 1/3, 2/3, 1`.
pub fn m00_cases(model: &ScalarTwoStageModel) -> Vec<f64> {
    let sd = scalar_filter(model, model.m_x).s00.sqrt();
    [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]
        .iter()
        .map(|f| model.m_x + f * sd)
        .collect()
}

/// `Q_0` sampled along a control grid for one `(m00, γ)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q0Curve {
    pub case: usize,
    pub m00: f64,
    pub gamma: f64,
    pub u0: Vec<f64>,
    pub q: Vec<f64>,
    pub u_star: Option<f64>,
    pub q_star: Option<f64>,
}

/// One curve per `(γ, m00)` pair, in γ-major order.
pub fn q0_curves(
    model: &ScalarTwoStageModel,
    m00_cases: &[f64],
    gammas: &[f64],
    u_grid: &[f64],
    form: Q0Form,
) -> Result<Vec<Q0Curve>> {
    let mut curves = Vec::with_capacity(m00_cases.len() * gammas.len());
    for &gamma in gammas {
        let m = ScalarTwoStageModel { gamma, ..*model };
        m.validate()?;
        for (case, &m00) in m00_cases.iter().enumerate() {
            let coeffs = q0_coefficients_with(&m, m00, form);
            let u_star = match solve_u0(&coeffs) {
                Ok(u) => Some(u),
                Err(DmcError::NoMinimizer { .. }) => None,
                Err(e) => return Err(e),
            };
            curves.push(Q0Curve {
                case,
                m00,
                gamma,
                u0: u_grid.to_vec(),
                q: u_grid.iter().map(|&u| q0_eval(&coeffs, u)).collect(),
                u_star,
                q_star: u_star.map(|u| q0_eval(&coeffs, u)),
            });
        }
    }
    Ok(curves)
}

/// CSV with columns `case,m00,gamma,u0,Q,minimizer`. Each curve's exact
/// minimizer is inserted in order as an extra row with `minimizer = 1`.
pub fn curves_csv(curves: &[Q0Curve]) -> String {
    let mut out = String::from("case,m00,gamma,u0,Q,minimizer\n");
    for c in curves {
        let mut rows: Vec<(f64, f64, bool)> =
            c.u0.iter()
                .zip(&c.q)
                .map(|(&u, &q)| (u, q, false))
                .collect();
        if let (Some(u), Some(q)) = (c.u_star, c.q_star) {
            let at = rows.partition_point(|r| r.0 <= u);
            rows.insert(at, (u, q, true));
        }
        for (u, q, star) in rows {
            let fields = [
                c.case.to_string(),
                g17(c.m00),
                g17(c.gamma),
                g17(u),
                g17(q),
                (star as u8).to_string(),
            ];
            out.push_str(&csv_line(fields));
            out.push('\n');
        }
    }
    out
}

/// Parameter varied by [`sensitivity_sweep_u0`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum U0Target {
    SigmaW2,
    SigmaV2,
    Gamma,
    /// Sets `t = value * r`, keeping `r`.
    TOverR,
}

impl U0Target {
    pub const ALL: [U0Target; 4] = [
        U0Target::SigmaW2,
        U0Target::SigmaV2,
        U0Target::Gamma,
        U0Target::TOverR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            U0Target::SigmaW2 => "sigma_w2",
            U0Target::SigmaV2 => "sigma_v2",
            U0Target::Gamma => "gamma",
            U0Target::TOverR => "t_over_r",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn apply(self, model: &ScalarTwoStageModel, value: f64) -> ScalarTwoStageModel {
        let mut m = *model;
        match self {
            U0Target::SigmaW2 => m.sigma_w2 = value,
            U0Target::SigmaV2 => m.sigma_v2 = value,
            U0Target::Gamma => m.gamma = value,
            U0Target::TOverR => m.t = value * m.r,
        }
        m
    }

    /// A few representative values spanning two decades around 1; the first
    /// `γ` stands in for the `γ = 0` baseline.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            U0Target::Gamma => vec![1e-12, 1.0, 10.0, 100.0],
            _ => vec![0.1, 1.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepStatus {
    Ok,
    NoMinimizer,
    RootFinderFailure,
    InvalidModel,
}

impl SweepStatus {
    pub fn name(self) -> &'static str {
        match self {
            SweepStatus::Ok => "ok",
            SweepStatus::NoMinimizer => "no_minimizer",
            SweepStatus::RootFinderFailure => "root_finder_failure",
            SweepStatus::InvalidModel => "invalid_model",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub target: U0Target,
    pub value: f64,
    /// Offset of `m00` from `m_x` in units of `σ_{0|0}`.
    pub offset: f64,
    pub m00: f64,
    pub u0_star: Option<f64>,
    pub status: SweepStatus,
}

/// `u_0^*` over `values × offsets`, with `m00 = m_x + offset σ_{0|0}` and
/// `σ_{0|0}` taken from the modified model. Failures are reported per cell.
pub fn sensitivity_sweep_u0(
    model: &ScalarTwoStageModel,
    target: U0Target,
    values: &[f64],
    offsets: &[f64],
    form: Q0Form,
) -> Vec<SweepCell> {
    let jobs: Vec<(f64, f64)> = values
        .iter()
        .flat_map(|&v| offsets.iter().map(move |&o| (v, o)))
        .collect();
    crate::par::map_collect(jobs, |(value, offset)| {
        let m = target.apply(model, value);
        let m00 = m.m_x + offset * scalar_filter(&m, m.m_x).s00.sqrt();
        let (u0_star, status) = match optimal_u0_with(&m, m00, form) {
            Ok(u) => (Some(u), SweepStatus::Ok),
            Err(DmcError::NoMinimizer { .. }) => (None, SweepStatus::NoMinimizer),
            Err(DmcError::RootFinderFailure(_)) => (None, SweepStatus::RootFinderFailure),
            Err(_) => (None, SweepStatus::InvalidModel),
        };
        SweepCell {
            target,
            value,
            offset,
            m00,
            u0_star,
            status,
        }
    })
}

/// CSV with columns `param,value,offset,m00,u0_star,status`; failed cells
/// leave `u0_star` empty.
pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("param,value,offset,m00,u0_star,status\n");
    for c in cells {
        let fields = [
            c.target.name().to_string(),
            g17(c.value),
            g17(c.offset),
            g17(c.m00),
            c.u0_star.map(g17).unwrap_or_default(),
            c.status.name().to_string(),
        ];
        out.push_str(&csv_line(fields));
        out.push('\n');
    }
    out
}

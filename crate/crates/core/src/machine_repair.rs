//! Machine repair with an optional diagnostic test.
//!
//! Two states (good, bad), three controls (default, diagnose, repair) and two
//! measurements (probably good, probably bad). The diagnostic test is
//! requested one stage ahead and sharpens the next measurement from
//! `(eta_f, eta_d)` to `(gamma_f, gamma_d)` at cost `c_D`.
//!
//! Index conventions follow [`crate::pomdp`]: control 0 is default, 1 is
//! diagnose and 2 is repair. CSV tables number controls from 1.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::{csv_line, g17};
use crate::pomdp::{Belief, PomdpModel, PomdpStage, Solver};

pub const DEFAULT: usize = 0;
pub const DIAGNOSE: usize = 1;
pub const REPAIR: usize = 2;

/// Slack on the accuracy orderings, so `1 - x` roundoff at sweep endpoints passes.
const ORDER_TOL: f64 = 1e-12;

/// Default number of points on the ρ grid of a policy-curve table.
pub const DEFAULT_GRID_POINTS: usize = 401;
/// Default number of points per sensitivity sweep.
pub const DEFAULT_SWEEP_POINTS: usize = 25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MachineRepairError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("sweep constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("measurement has zero probability")]
    ZeroProbabilityMeasurement,
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
}

pub type Result<T> = std::result::Result<T, MachineRepairError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineRepairParams {
    /// Single-stage failure probability.
    pub alpha: f64,
    pub eta_f: f64,
    pub eta_d: f64,
    pub gamma_f: f64,
    pub gamma_d: f64,
    #[serde(rename = "c_R")]
    pub c_r: f64,
    #[serde(rename = "c_B")]
    pub c_b: f64,
    #[serde(rename = "c_D")]
    pub c_d: f64,
    #[serde(rename = "K")]
    pub horizon: usize,
}

impl MachineRepairParams {
    /// `(α, η_f, η_d, γ_f, γ_d) = (0.2, 0.3, 0.7, 0.1, 0.9)`,
    /// `(c_R, c_B, c_D) = (5, 10, 1)`, `K = 6`.
    pub fn nominal() -> Self {
        Self {
            alpha: 0.2,
            eta_f: 0.3,
            eta_d: 0.7,
            gamma_f: 0.1,
            gamma_d: 0.9,
            c_r: 5.0,
            c_b: 10.0,
            c_d: 1.0,
            horizon: 6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("alpha", self.alpha),
            ("eta_f", self.eta_f),
            ("eta_d", self.eta_d),
            ("gamma_f", self.gamma_f),
            ("gamma_d", self.gamma_d),
        ];
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) {
                return Err(MachineRepairError::InvalidParameters(format!(
                    "{name} = {v} is not in [0, 1]"
                )));
            }
        }
        let bad = |msg: String| Err(MachineRepairError::InvalidParameters(msg));
        if !(self.c_r > 0.0) {
            return bad(format!("c_R = {} must be positive", self.c_r));
        }
        if !(self.c_b > self.c_r) {
            return bad(format!("c_B = {} must exceed c_R = {}", self.c_b, self.c_r));
        }
        if !(self.c_d >= 0.0) {
            return bad(format!("c_D = {} must be nonnegative", self.c_d));
        }
        if self.gamma_f > self.eta_f + ORDER_TOL {
            return bad(format!(
                "gamma_f = {} exceeds eta_f = {}",
                self.gamma_f, self.eta_f
            ));
        }
        if self.gamma_d < self.eta_d - ORDER_TOL {
            return bad(format!(
                "gamma_d = {} is below eta_d = {}",
                self.gamma_d, self.eta_d
            ));
        }
        if self.horizon == 0 {
            return bad("K must be at least 1".into());
        }
        Ok(())
    }

    fn transition(&self, u: usize) -> DMatrix<f64> {
        let a = self.alpha;
        match u {
            REPAIR => DMatrix::from_row_slice(2, 2, &[1.0 - a, a, 1.0 - a, a]),
            _ => DMatrix::from_row_slice(2, 2, &[1.0 - a, a, 0.0, 1.0]),
        }
    }

    fn cost(&self, u: usize) -> DMatrix<f64> {
        let (cr, cb, cd) = (self.c_r, self.c_b, self.c_d);
        match u {
            DEFAULT => DMatrix::from_row_slice(2, 2, &[0.0, 0.0, cb, cb]),
            DIAGNOSE => DMatrix::from_row_slice(2, 2, &[cd, cd, cd + cb, cd + cb]),
            _ => DMatrix::from_element(2, 2, cr),
        }
    }

    /// Observation matrix at the next stage given the control just applied.
    fn observation(&self, u_prev: usize) -> DMatrix<f64> {
        let (f, d) = if u_prev == DIAGNOSE {
            (self.gamma_f, self.gamma_d)
        } else {
            (self.eta_f, self.eta_d)
        };
        DMatrix::from_row_slice(2, 2, &[1.0 - f, f, 1.0 - d, d])
    }
}

/// Stationary two-state, three-control, two-measurement PO-MDP.
pub fn build_model(params: &MachineRepairParams) -> Result<PomdpModel> {
    build_with_controls(params, &[DEFAULT, DIAGNOSE, REPAIR])
}

/// The same model with the diagnose control removed; its controls are
/// (default, repair). Its expected total cost is the never-diagnose baseline.
pub fn build_model_without_diagnosis(params: &MachineRepairParams) -> Result<PomdpModel> {
    build_with_controls(params, &[DEFAULT, REPAIR])
}

fn build_with_controls(params: &MachineRepairParams, controls: &[usize]) -> Result<PomdpModel> {
    params.validate()?;
    let stage = |k: usize| PomdpStage {
        n: 2,
        m: controls.len(),
        s: 2,
        transition: controls.iter().map(|&u| params.transition(u)).collect(),
        cost: controls.iter().map(|&u| params.cost(u)).collect(),
        observation: if k == 0 {
            vec![]
        } else {
            controls.iter().map(|&u| params.observation(u)).collect()
        },
    };
    Ok(PomdpModel {
        horizon: params.horizon,
        stages: (0..params.horizon).map(stage).collect(),
        initial_observation: params.observation(DEFAULT),
        initial_distribution: vec![1.0 - params.alpha, params.alpha],
    })
}

/// Closed-form filter on `ρ = Pr(bad)`: one step from `rho_prev` after
/// control `u` and measurement `z` (both 0-based).
pub fn rho_update_closed_form(
    params: &MachineRepairParams,
    rho_prev: f64,
    u: usize,
    z: usize,
) -> Result<f64> {
    if u > REPAIR || z > 1 {
        return Err(MachineRepairError::IndexOutOfRange(format!(
            "(u, z) = ({u}, {z})"
        )));
    }
    let a = params.alpha;
    let (f, d) = if u == DIAGNOSE {
        (params.gamma_f, params.gamma_d)
    } else {
        (params.eta_f, params.eta_d)
    };
    // predicted probabilities of (good, bad)
    let (good, bad) = if u == REPAIR {
        (1.0 - a, a)
    } else {
        ((1.0 - a) * (1.0 - rho_prev), a + (1.0 - a) * rho_prev)
    };
    let (lg, lb) = if z == 0 { (1.0 - f, 1.0 - d) } else { (f, d) };
    let den = lg * good + lb * bad;
    if den <= 0.0 {
        return Err(MachineRepairError::ZeroProbabilityMeasurement);
    }
    Ok(lb * bad / den)
}

/// Closed-form initial belief `ρ_0` after measurement `z0`.
pub fn rho_init_closed_form(params: &MachineRepairParams, z0: usize) -> Result<f64> {
    // the stage-0 belief is a repair-style reset to the prior [1 - α, α]
    rho_update_closed_form(params, 0.0, REPAIR, z0)
}

/// Control-dependent cost-to-go over a ρ grid at one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCurveTable {
    pub stage: usize,
    pub grid: Vec<f64>,
    /// `q[i][u]` at `grid[i]`.
    pub q: Vec<Vec<f64>>,
    /// 0-based optimal control at each grid point.
    pub argmin: Vec<usize>,
}

impl PolicyCurveTable {
    pub fn value(&self, i: usize) -> f64 {
        self.q[i][self.argmin[i]]
    }
}

pub fn uniform_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2, "grid needs at least two points");
    let last = (points - 1) as f64;
    (0..points).map(|i| i as f64 / last).collect()
}

/// Tabulates `q_k(ρ)` on a uniform grid of `grid_points` over `[0, 1]` for
/// every stage.
pub fn policy_curves(
    params: &MachineRepairParams,
    grid_points: usize,
) -> Result<Vec<PolicyCurveTable>> {
    if grid_points < 2 {
        return Err(MachineRepairError::InvalidParameters(
            "grid needs at least two points".into(),
        ));
    }
    let model = build_model(params)?;
    let grid = uniform_grid(grid_points);
    let cells: Vec<(usize, f64)> = (0..params.horizon)
        .flat_map(|k| grid.iter().map(move |&rho| (k, rho)))
        .collect();
    let solver = Solver::new(&model);
    let qs = crate::par::map_collect(cells, |(k, rho)| {
        solver.q_vector(&Belief::two_state(k, rho))
    });
    Ok(qs
        .chunks(grid_points)
        .enumerate()
        .map(|(k, rows)| PolicyCurveTable {
            stage: k,
            grid: grid.clone(),
            q: rows.to_vec(),
            argmin: rows.iter().map(|q| crate::pomdp::argmin(q)).collect(),
        })
        .collect())
}

/// CSV with header `stage,rho,q1,q2,q3,argmin`; controls are 1-based.
pub fn curves_csv(tables: &[PolicyCurveTable]) -> String {
    let mut out = String::from("stage,rho,q1,q2,q3,argmin\n");
    for t in tables {
        for (i, rho) in t.grid.iter().enumerate() {
            let mut fields = vec![t.stage.to_string(), g17(*rho)];
            fields.extend(t.q[i].iter().map(|&v| g17(v)));
            fields.push((t.argmin[i] + 1).to_string());
            out.push_str(&csv_line(fields));
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTarget {
    Alpha,
    /// Sets `eta_d` to the value and `eta_f = 1 - eta_d`.
    SensorAccuracy,
    /// Sets `gamma_d` to the value and `gamma_f = 1 - gamma_d`.
    DiagnosedAccuracy,
    #[serde(rename = "c_D")]
    CD,
}

impl SweepTarget {
    pub const ALL: [SweepTarget; 4] = [
        SweepTarget::Alpha,
        SweepTarget::SensorAccuracy,
        SweepTarget::DiagnosedAccuracy,
        SweepTarget::CD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepTarget::Alpha => "alpha",
            SweepTarget::SensorAccuracy => "sensor_accuracy",
            SweepTarget::DiagnosedAccuracy => "diagnosed_accuracy",
            SweepTarget::CD => "c_D",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Default sweep range for this target around `params`.
    pub fn default_range(self, params: &MachineRepairParams) -> (f64, f64) {
        match self {
            SweepTarget::Alpha => (0.0, 1.0),
            SweepTarget::SensorAccuracy => (0.5, params.gamma_d),
            SweepTarget::DiagnosedAccuracy => (params.eta_d, 1.0),
            SweepTarget::CD => (0.0, params.c_r),
        }
    }

    pub fn default_values(self, params: &MachineRepairParams, points: usize) -> Vec<f64> {
        let (lo, hi) = self.default_range(params);
        uniform_grid(points)
            .into_iter()
            .map(|s| lo + s * (hi - lo))
            .collect()
    }

    /// `params` with this target set to `value`, checking the sweep constraints.
    pub fn apply(self, params: &MachineRepairParams, value: f64) -> Result<MachineRepairParams> {
        let mut p = *params;
        let violated = |msg: String| Err(MachineRepairError::ConstraintViolation(msg));
        match self {
            SweepTarget::Alpha => p.alpha = value,
            SweepTarget::SensorAccuracy => {
                if value > p.gamma_d {
                    return violated(format!("eta_d = {value} exceeds gamma_d = {}", p.gamma_d));
                }
                p.eta_d = value;
                p.eta_f = 1.0 - value;
            }
            SweepTarget::DiagnosedAccuracy => {
                if value < p.eta_d {
                    return violated(format!("gamma_d = {value} is below eta_d = {}", p.eta_d));
                }
                p.gamma_d = value;
                p.gamma_f = 1.0 - value;
            }
            SweepTarget::CD => {
                if value > p.c_r {
                    return violated(format!("c_D = {value} exceeds c_R = {}", p.c_r));
                }
                p.c_d = value;
            }
        }
        p.validate()
            .map_err(|e| MachineRepairError::ConstraintViolation(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub target: SweepTarget,
    pub value: f64,
    pub expected_cost: f64,
}

/// Optimal expected total cost of the built model.
pub fn expected_total_cost(params: &MachineRepairParams) -> Result<f64> {
    Ok(Solver::new(&build_model(params)?).expected_total_cost())
}

/// Expected total cost when the diagnostic test is unavailable.
pub fn never_diagnose_cost(params: &MachineRepairParams) -> Result<f64> {
    Ok(Solver::new(&build_model_without_diagnosis(params)?).expected_total_cost())
}

/// Recomputes the optimal expected total cost at each value of `target`,
/// other parameters held at `params`.
pub fn sensitivity_sweep(
    params: &MachineRepairParams,
    target: SweepTarget,
    values: &[f64],
) -> Result<Vec<SweepRow>> {
    let swept = values
        .iter()
        .map(|&v| target.apply(params, v).map(|p| (v, p)))
        .collect::<Result<Vec<_>>>()?;
    crate::par::map_collect(swept, |(value, p)| {
        expected_total_cost(&p).map(|expected_cost| SweepRow {
            target,
            value,
            expected_cost,
        })
    })
    .into_iter()
    .collect()
}

/// CSV with header `param,value,expected_cost`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param,value,expected_cost\n");
    for r in rows {
        out.push_str(&csv_line([
            r.target.name().to_string(),
            g17(r.value),
            g17(r.expected_cost),
        ]));
        out.push('\n');
    }
    out
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{PomdpError, Result};
use crate::linalg::{serde_rows, serde_rows_vec};

/// Tolerance on row sums of stochastic matrices and on belief sums.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// One stage of a finite PO-MDP.
///
/// `transition[u]` and `cost[u]` are `n × n_next`. `observation[u]` is the
/// `n × s` matrix of measurement probabilities at this stage given that
/// control `u` was applied at the previous stage; it is empty at stage 0,
/// whose measurement model lives in [`PomdpModel::initial_observation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PomdpStage {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    #[serde(rename = "F", with = "serde_rows_vec")]
    pub transition: Vec<DMatrix<f64>>,
    #[serde(rename = "G", with = "serde_rows_vec")]
    pub cost: Vec<DMatrix<f64>>,
    #[serde(rename = "H", with = "serde_rows_vec", default)]
    pub observation: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PomdpModel {
    #[serde(rename = "K")]
    pub horizon: usize,
    pub stages: Vec<PomdpStage>,
    #[serde(rename = "H0", with = "serde_rows")]
    pub initial_observation: DMatrix<f64>,
    #[serde(rename = "p0")]
    pub initial_distribution: Vec<f64>,
}

impl PomdpModel {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    /// Cardinality of the state space at stage `k`, including `k = K`.
    pub fn state_count(&self, k: usize) -> usize {
        if k < self.horizon {
            self.stages[k].n
        } else {
            self.stages[self.horizon - 1].transition[0].ncols()
        }
    }

    /// Checks dimensions and that every probability row is stochastic.
    pub fn validate(&self) -> Result<()> {
        let k_count = self.horizon;
        if k_count == 0 {
            return Err(PomdpError::DimensionMismatch("K must be positive".into()));
        }
        if self.stages.len() != k_count {
            return Err(PomdpError::DimensionMismatch(format!(
                "K = {k_count} but {} stages given",
                self.stages.len()
            )));
        }
        for (k, st) in self.stages.iter().enumerate() {
            if st.n == 0 || st.m == 0 || st.s == 0 {
                return Err(PomdpError::DimensionMismatch(format!(
                    "stage {k}: n, m and s must be positive"
                )));
            }
            if st.transition.len() != st.m || st.cost.len() != st.m {
                return Err(PomdpError::DimensionMismatch(format!(
                    "stage {k}: expected {} transition and cost matrices, got {} and {}",
                    st.m,
                    st.transition.len(),
                    st.cost.len()
                )));
            }
            let n_next = if k + 1 < k_count {
                self.stages[k + 1].n
            } else {
                st.transition[0].ncols()
            };
            for u in 0..st.m {
                for (name, mat) in [("F", &st.transition[u]), ("G", &st.cost[u])] {
                    if mat.shape() != (st.n, n_next) {
                        return Err(PomdpError::DimensionMismatch(format!(
                            "stage {k}: {name}({u}) is {}x{}, expected {}x{}",
                            mat.nrows(),
                            mat.ncols(),
                            st.n,
                            n_next
                        )));
                    }
                }
                check_rows("F", k, Some(u), &st.transition[u])?;
                if st.cost[u].iter().any(|c| !c.is_finite()) {
                    return Err(PomdpError::DimensionMismatch(format!(
                        "stage {k}: G({u}) has non-finite entries"
                    )));
                }
            }
            if k == 0 {
                if !st.observation.is_empty() {
                    return Err(PomdpError::DimensionMismatch(
                        "stage 0 observations belong in H0; H must be empty".into(),
                    ));
                }
            } else {
                let m_prev = self.stages[k - 1].m;
                if st.observation.len() != m_prev {
                    return Err(PomdpError::DimensionMismatch(format!(
                        "stage {k}: expected {m_prev} observation matrices, got {}",
                        st.observation.len()
                    )));
                }
                for (u, h) in st.observation.iter().enumerate() {
                    if h.shape() != (st.n, st.s) {
                        return Err(PomdpError::DimensionMismatch(format!(
                            "stage {k}: H({u}) is {}x{}, expected {}x{}",
                            h.nrows(),
                            h.ncols(),
                            st.n,
                            st.s
                        )));
                    }
                    check_rows("H", k, Some(u), h)?;
                }
            }
        }
        let st0 = &self.stages[0];
        if self.initial_observation.shape() != (st0.n, st0.s) {
            return Err(PomdpError::DimensionMismatch(format!(
                "H0 is {}x{}, expected {}x{}",
                self.initial_observation.nrows(),
                self.initial_observation.ncols(),
                st0.n,
                st0.s
            )));
        }
        check_rows("H0", 0, None, &self.initial_observation)?;
        if self.initial_distribution.len() != st0.n {
            return Err(PomdpError::DimensionMismatch(format!(
                "p0 has length {}, expected {}",
                self.initial_distribution.len(),
                st0.n
            )));
        }
        check_distribution(&self.initial_distribution).map_err(|reason| {
            PomdpError::NonStochasticRow {
                matrix: "p0",
                stage: 0,
                control: None,
                row: 0,
                reason,
            }
        })
    }
}

fn check_rows(
    matrix: &'static str,
    stage: usize,
    control: Option<usize>,
    m: &DMatrix<f64>,
) -> Result<()> {
    for (row, r) in m.row_iter().enumerate() {
        let values: Vec<f64> = r.iter().copied().collect();
        check_distribution(&values).map_err(|reason| PomdpError::NonStochasticRow {
            matrix,
            stage,
            control,
            row,
            reason,
        })?;
    }
    Ok(())
}

pub(crate) fn check_distribution(p: &[f64]) -> std::result::Result<(), String> {
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(format!("entry {v} is not a nonnegative number"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(format!("sums to {sum}"));
    }
    Ok(())
}

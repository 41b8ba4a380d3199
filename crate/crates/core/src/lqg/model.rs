use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{LqgError, Result};
use crate::linalg::{is_symmetric, min_eigenvalue, serde_rows, serde_vector};

pub const SYMMETRY_TOL: f64 = 1e-10;
/// Lower bound on the smallest eigenvalue of a PSD matrix.
pub const PSD_TOL: f64 = -1e-10;
/// Lower bound on the smallest eigenvalue of a PD matrix.
pub const PD_TOL: f64 = 1e-12;

/// Matrices of stage `k`. `d` multiplies the previous control in the stage-`k`
/// measurement (`D_{k-1}`); it is ignored at stage 0 and defaults to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqgStage {
    #[serde(rename = "A", with = "serde_rows")]
    pub a: DMatrix<f64>,
    #[serde(rename = "B", with = "serde_rows")]
    pub b: DMatrix<f64>,
    #[serde(rename = "C", with = "serde_rows")]
    pub c: DMatrix<f64>,
    #[serde(
        rename = "D",
        with = "opt_rows",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub d: Option<DMatrix<f64>>,
    #[serde(rename = "T", with = "serde_rows")]
    pub t: DMatrix<f64>,
    #[serde(rename = "R", with = "serde_rows")]
    pub r: DMatrix<f64>,
    #[serde(rename = "Sigma_w", with = "serde_rows")]
    pub sigma_w: DMatrix<f64>,
    #[serde(rename = "Sigma_v", with = "serde_rows")]
    pub sigma_v: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqgModel {
    #[serde(rename = "K")]
    pub horizon: usize,
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub stages: Vec<LqgStage>,
    #[serde(rename = "T_K", with = "serde_rows")]
    pub terminal_cost: DMatrix<f64>,
    #[serde(with = "serde_vector")]
    pub m_x0: DVector<f64>,
    #[serde(rename = "Sigma_x0", with = "serde_rows")]
    pub sigma_x0: DMatrix<f64>,
}

mod opt_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
        match m {
            Some(m) => crate::linalg::serde_rows::serialize(m, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DMatrix<f64>>, D::Error> {
        let rows = Option::<Vec<Vec<f64>>>::deserialize(d)?;
        rows.map(|r| {
            crate::linalg::from_rows(&r)
                .ok_or_else(|| serde::de::Error::custom("ragged matrix rows"))
        })
        .transpose()
    }
}

impl LqgStage {
    /// Scalar stage `(a, b, c, d, t, r, σ_w², σ_v²)`.
    #[allow(clippy::too_many_arguments)]
    pub fn scalar(
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        t: f64,
        r: f64,
        sigma_w2: f64,
        sigma_v2: f64,
    ) -> Self {
        let one = |x: f64| DMatrix::from_element(1, 1, x);
        Self {
            a: one(a),
            b: one(b),
            c: one(c),
            d: Some(one(d)),
            t: one(t),
            r: one(r),
            sigma_w: one(sigma_w2),
            sigma_v: one(sigma_v2),
        }
    }

    /// `D_{k-1}` as an `s × m` matrix, zero when absent.
    pub fn d_or_zero(&self, m: usize) -> DMatrix<f64> {
        self.d
            .clone()
            .unwrap_or_else(|| DMatrix::zeros(self.c.nrows(), m))
    }
}

impl LqgModel {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m, s) = (self.n, self.m, self.s);
        let dim = |msg: String| Err(LqgError::DimensionMismatch(msg));
        if self.horizon == 0 {
            return dim("K must be at least 1".into());
        }
        if self.stages.len() != self.horizon {
            return dim(format!(
                "{} stages for K = {}",
                self.stages.len(),
                self.horizon
            ));
        }
        let shape = |name: &str, k: usize, mat: &DMatrix<f64>, r: usize, c: usize| -> Result<()> {
            if mat.shape() != (r, c) {
                return Err(LqgError::DimensionMismatch(format!(
                    "{name} at stage {k} is {}x{}, expected {r}x{c}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(LqgError::DimensionMismatch(format!(
                    "{name} at stage {k} has non-finite entries"
                )));
            }
            Ok(())
        };
        for (k, st) in self.stages.iter().enumerate() {
            shape("A", k, &st.a, n, n)?;
            shape("B", k, &st.b, n, m)?;
            shape("C", k, &st.c, s, n)?;
            if let Some(d) = &st.d {
                shape("D", k, d, s, m)?;
            }
            shape("T", k, &st.t, n, n)?;
            shape("R", k, &st.r, m, m)?;
            shape("Sigma_w", k, &st.sigma_w, n, n)?;
            shape("Sigma_v", k, &st.sigma_v, s, s)?;
            check_definite("T", k, &st.t, false)?;
            check_definite("R", k, &st.r, true)?;
            check_definite("Sigma_w", k, &st.sigma_w, false)?;
            check_definite("Sigma_v", k, &st.sigma_v, true)?;
        }
        shape("T_K", self.horizon, &self.terminal_cost, n, n)?;
        check_definite("T_K", self.horizon, &self.terminal_cost, false)?;
        shape("Sigma_x0", 0, &self.sigma_x0, n, n)?;
        check_definite("Sigma_x0", 0, &self.sigma_x0, false)?;
        if self.m_x0.len() != n || self.m_x0.iter().any(|v| !v.is_finite()) {
            return dim(format!("m_x0 must be a finite vector of length {n}"));
        }
        Ok(())
    }
}

fn check_definite(
    name: &'static str,
    stage: usize,
    mat: &DMatrix<f64>,
    strict: bool,
) -> Result<()> {
    if !is_symmetric(mat, SYMMETRY_TOL) {
        return Err(LqgError::NotSymmetric { name, stage });
    }
    let eigenvalue = min_eigenvalue(mat);
    let (bound, required) = if strict {
        (PD_TOL, "positive definite")
    } else {
        (PSD_TOL, "positive semidefinite")
    };
    if eigenvalue < bound && mat.nrows() > 0 {
        return Err(LqgError::NotDefinite {
            name,
            stage,
            required,
            eigenvalue,
        });
    }
    Ok(())
}

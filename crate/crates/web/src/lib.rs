//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes model JSON plus a few numbers and returns JSON text for
//! the page to plot. The `*_json` functions hold the logic and are plain Rust
//! so they can be tested natively.

use sensorctl_core::dmc::{
    m00_cases, q0_curves, sensitivity_sweep_u0, uniform_points, Q0Form, ScalarTwoStageModel,
    U0Target,
};
use sensorctl_core::machine_repair::{never_diagnose_cost, policy_curves, MachineRepairParams};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest grid any export accepts; keeps the page responsive.
pub const MAX_POINTS: usize = 4001;

fn check_points(points: usize, min: usize) -> Result<(), String> {
    if (min..=MAX_POINTS).contains(&points) {
        Ok(())
    } else {
        Err(format!(
            "grid size {points} is outside {min}..={MAX_POINTS}"
        ))
    }
}

fn form(exact: bool) -> Q0Form {
    if exact {
        Q0Form::Exact
    } else {
        Q0Form::Unit
    }
}

fn dmc_model(model_json: &str) -> Result<ScalarTwoStageModel, String> {
    let model = ScalarTwoStageModel::from_json(model_json).map_err(|e| e.to_string())?;
    model.validate().map_err(|e| e.to_string())?;
    Ok(model)
}

/// Machine-repair `q_k(ρ)` tables for every stage plus the never-diagnose cost.
pub fn policy_curves_json(params_json: &str, points: usize) -> Result<String, String> {
    check_points(points, 2)?;
    let params: MachineRepairParams =
        serde_json::from_str(params_json).map_err(|e| e.to_string())?;
    let tables = policy_curves(&params, points).map_err(|e| e.to_string())?;
    let baseline = never_diagnose_cost(&params).map_err(|e| e.to_string())?;
    Ok(json!({ "tables": tables, "never_diagnose_cost": baseline }).to_string())
}

/// `Q_0(u_0)` on `[u_lo, u_hi]` for each `γ` and each standard filtered-mean case.
pub fn q0_curves_json(
    model_json: &str,
    gammas: &[f64],
    u_lo: f64,
    u_hi: f64,
    points: usize,
    exact: bool,
) -> Result<String, String> {
    check_points(points, 2)?;
    if !(u_lo.is_finite() && u_hi.is_finite() && u_lo < u_hi) {
        return Err(format!("bad control range [{u_lo}, {u_hi}]"));
    }
    if gammas.is_empty() {
        return Err("need at least one gamma".into());
    }
    let model = dmc_model(model_json)?;
    let curves = q0_curves(
        &model,
        &m00_cases(&model),
        gammas,
        &uniform_points(u_lo, u_hi, points),
        form(exact),
    )
    .map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&curves).expect("curves serialize"))
}

/// `u_0^*` against `m00 ∈ m_x ± σ_{0|0}` for each value of `target`.
pub fn u0_sweep_json(
    model_json: &str,
    target: &str,
    values: &[f64],
    points: usize,
    exact: bool,
) -> Result<String, String> {
    check_points(points, 1)?;
    let target = U0Target::parse(target).ok_or_else(|| format!("unknown target {target:?}"))?;
    let model = dmc_model(model_json)?;
    let values = if values.is_empty() {
        target.default_values()
    } else {
        values.to_vec()
    };
    let cells = sensitivity_sweep_u0(
        &model,
        target,
        &values,
        &uniform_points(-1.0, 1.0, points),
        form(exact),
    );
    Ok(serde_json::to_string(&cells).expect("cells serialize"))
}

#[wasm_bindgen(js_name = policyCurves)]
pub fn policy_curves_js(params_json: &str, points: usize) -> Result<String, JsError> {
    policy_curves_json(params_json, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = q0Curves)]
pub fn q0_curves_js(
    model_json: &str,
    gammas: &[f64],
    u_lo: f64,
    u_hi: f64,
    points: usize,
    exact: bool,
) -> Result<String, JsError> {
    q0_curves_json(model_json, gammas, u_lo, u_hi, points, exact).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = u0Sweep)]
pub fn u0_sweep_js(
    model_json: &str,
    target: &str,
    values: &[f64],
    points: usize,
    exact: bool,
) -> Result<String, JsError> {
    u0_sweep_json(model_json, target, values, points, exact).map_err(|e| JsError::new(&e))
}

use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use sensorctl_core::dmc::{
    self, expected_total_cost as dmc_expected_cost, m00_cases, monte_carlo_dmc,
    q0_coefficients_with, q0_curves, q0_eval, sensitivity_sweep_u0, stationary_points,
    uniform_points, Q0Form, ScalarTwoStageModel, U0Target,
};
use sensorctl_core::format::{csv_line, g17};
use sensorctl_core::lqg::{
    analytic_expected_cost, lqr_gains, monte_carlo_lqg, precompute_covariances, simulate_lqg,
    trajectory_csv, LqgModel,
};
use sensorctl_core::machine_repair::{self as mr, MachineRepairParams, SweepTarget};
use sensorctl_core::pomdp::{belief_init, MonteCarloEstimate, PomdpModel, Solver};
use sensorctl_core::schedule::{optimal_schedule, SensorMenu};

use crate::output::{flat_csv, json_text};
use crate::{CliError, Command, FormArg, Format, Options};

const MR_GRID: usize = 401;
const MR_SWEEP_POINTS: usize = 25;
const MR_ROLLOUTS: usize = 10_000;
const DMC_U_GRID: usize = 601;
const DMC_U_RANGE: (f64, f64) = (-3.0, 3.0);
const DMC_OFFSETS: usize = 101;
const DMC_OFFSET_RANGE: (f64, f64) = (-1.0, 1.0);
const DMC_GAMMAS: [f64; 4] = [1e-12, 1.0, 10.0, 100.0];

pub(crate) fn dispatch(command: Command, opts: &Options) -> Result<String, CliError> {
    match command {
        Command::MrCurves => mr_curves(opts),
        Command::MrSensitivity => mr_sensitivity(opts),
        Command::MrCost => mr_cost(opts),
        Command::PomdpSolve => pomdp_solve(opts),
        Command::LqgGains => lqg_gains(opts),
        Command::LqgSimulate => lqg_simulate(opts),
        Command::Schedule => schedule(opts),
        Command::DmcCurves => dmc_curves(opts),
        Command::DmcSweep => dmc_sweep(opts),
        Command::DmcSolve => dmc_solve(opts),
    }
}

fn read_input<T: DeserializeOwned>(opts: &Options) -> Result<T, CliError> {
    let path = opts
        .input
        .as_ref()
        .ok_or_else(|| CliError::Parse("--input is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn format_or(opts: &Options, default: Format) -> Format {
    opts.format.unwrap_or(default)
}

fn summary(opts: &Options, value: Value) -> String {
    match format_or(opts, Format::Json) {
        Format::Json => json_text(&value),
        Format::Csv => flat_csv(&value),
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result serializes")
}

fn rollouts(opts: &Options, default: usize) -> Result<usize, CliError> {
    match opts.rollouts.unwrap_or(default) {
        0 => Err(CliError::Parse("--rollouts must be at least 1".into())),
        n => Ok(n),
    }
}

fn grid(opts: &Options, default: usize, min: usize) -> Result<usize, CliError> {
    let n = opts.grid.unwrap_or(default);
    if n < min {
        return Err(CliError::Parse(format!("--grid must be at least {min}")));
    }
    Ok(n)
}

fn range(opts: &Options, default: (f64, f64)) -> Result<(f64, f64), CliError> {
    match opts.range.as_deref() {
        None => Ok(default),
        Some(&[lo, hi]) if lo.is_finite() && hi.is_finite() && lo < hi => Ok((lo, hi)),
        Some(r) => Err(CliError::Parse(format!(
            "--range needs LO,HI with LO < HI, got {r:?}"
        ))),
    }
}

fn monte_carlo_value(mc: &MonteCarloEstimate, seed: u64, reference: f64) -> Value {
    json!({
        "mean": mc.mean,
        "stderr": mc.stderr,
        "rollouts": mc.n,
        "seed": seed,
        "within_3_stderr": (mc.mean - reference).abs() <= 3.0 * mc.stderr,
    })
}

fn mr_params(opts: &Options) -> Result<MachineRepairParams, CliError> {
    let params: MachineRepairParams = read_input(opts)?;
    params.validate()?;
    Ok(params)
}

fn mr_curves(opts: &Options) -> Result<String, CliError> {
    let tables = mr::policy_curves(&mr_params(opts)?, grid(opts, MR_GRID, 2)?)?;
    Ok(match format_or(opts, Format::Csv) {
        Format::Csv => mr::curves_csv(&tables),
        Format::Json => json_text(&to_value(&tables)),
    })
}

fn mr_targets(opts: &Options) -> Result<Vec<SweepTarget>, CliError> {
    match opts.target.as_deref() {
        None => Ok(SweepTarget::ALL.to_vec()),
        Some(name) => SweepTarget::parse(name)
            .map(|t| vec![t])
            .ok_or_else(|| CliError::Parse(format!("unknown machine-repair target {name:?}"))),
    }
}

fn mr_sensitivity(opts: &Options) -> Result<String, CliError> {
    let params = mr_params(opts)?;
    let targets = mr_targets(opts)?;
    if opts.values.is_some() && targets.len() != 1 {
        return Err(CliError::Parse("--values needs a single --target".into()));
    }
    let points = grid(opts, MR_SWEEP_POINTS, 2)?;
    let mut rows = Vec::new();
    for target in targets {
        let values = opts
            .values
            .clone()
            .unwrap_or_else(|| target.default_values(&params, points));
        rows.extend(mr::sensitivity_sweep(&params, target, &values)?);
    }
    let baseline = mr::never_diagnose_cost(&params)?;
    Ok(match format_or(opts, Format::Csv) {
        Format::Csv => {
            let mut out = mr::sweep_csv(&rows);
            out.push_str(&csv_line([
                "never_diagnose".to_string(),
                String::new(),
                g17(baseline),
            ]));
            out.push('\n');
            out
        }
        Format::Json => json_text(&json!({ "rows": rows, "never_diagnose_cost": baseline })),
    })
}

fn mr_cost(opts: &Options) -> Result<String, CliError> {
    let params = mr_params(opts)?;
    let model = mr::build_model(&params)?;
    let solver = Solver::with_cache(&model);
    let expected = solver.expected_total_cost();
    let mc = solver.monte_carlo_cost(rollouts(opts, MR_ROLLOUTS)?, opts.seed);
    Ok(summary(
        opts,
        json!({
            "expected_total_cost": expected,
            "never_diagnose_cost": mr::never_diagnose_cost(&params)?,
            "monte_carlo": monte_carlo_value(&mc, opts.seed, expected),
        }),
    ))
}

fn pomdp_solve(opts: &Options) -> Result<String, CliError> {
    let model: PomdpModel = read_input(opts)?;
    model.validate()?;
    let solver = Solver::with_cache(&model);
    let expected = solver.expected_total_cost();
    let mut initial = Vec::new();
    for z0 in 0..model.initial_observation.ncols() {
        let probability: f64 = model
            .initial_distribution
            .iter()
            .enumerate()
            .map(|(x, p)| p * model.initial_observation[(x, z0)])
            .sum();
        if probability <= 0.0 {
            continue;
        }
        let belief = belief_init(&model, z0)?;
        let q = solver.q_vector(&belief);
        initial.push(json!({
            "z0": z0,
            "probability": probability,
            "belief": belief.p,
            "q": q,
            "optimal_control": sensorctl_core::pomdp::argmin(&q),
        }));
    }
    let mut value = json!({ "expected_total_cost": expected, "initial": initial });
    if let Some(n) = opts.rollouts {
        let mc = solver.monte_carlo_cost(rollouts(opts, n)?, opts.seed);
        value["monte_carlo"] = monte_carlo_value(&mc, opts.seed, expected);
    }
    Ok(summary(opts, value))
}

fn lqg_model(opts: &Options) -> Result<LqgModel, CliError> {
    let model: LqgModel = read_input(opts)?;
    model.validate()?;
    Ok(model)
}

fn lqg_gains(opts: &Options) -> Result<String, CliError> {
    let model = lqg_model(opts)?;
    let gains = lqr_gains(&model)?;
    Ok(summary(
        opts,
        json!({
            "gains": gains,
            "covariances": precompute_covariances(&model)?,
            "analytic_expected_cost": analytic_expected_cost(&model, &gains)?,
        }),
    ))
}

fn lqg_simulate(opts: &Options) -> Result<String, CliError> {
    let model = lqg_model(opts)?;
    let gains = lqr_gains(&model)?;
    match opts.rollouts {
        None => {
            let traj = simulate_lqg(&model, &gains, opts.seed)?;
            Ok(match format_or(opts, Format::Csv) {
                Format::Csv => trajectory_csv(&traj),
                Format::Json => json_text(&to_value(&traj)),
            })
        }
        Some(n) => {
            let analytic = analytic_expected_cost(&model, &gains)?;
            let mc = monte_carlo_lqg(&model, &gains, rollouts(opts, n)?, opts.seed)?;
            Ok(summary(
                opts,
                json!({ "analytic_expected_cost": analytic, "monte_carlo": monte_carlo_value(&mc, opts.seed, analytic) }),
            ))
        }
    }
}

fn schedule(opts: &Options) -> Result<String, CliError> {
    let menu: SensorMenu = read_input(opts)?;
    menu.validate()?;
    let gains = lqr_gains(&menu.base)?;
    let result = optimal_schedule(&menu, &gains)?;
    let one_based: Vec<usize> = result.schedule.iter().map(|y| y + 1).collect();
    Ok(match format_or(opts, Format::Json) {
        Format::Json => {
            let mut value = to_value(&result);
            value["schedule"] = json!(one_based);
            value["total_cost"] = json!(result
                .stage_costs
                .iter()
                .map(|c| c.estimation + c.measurement)
                .sum::<f64>());
            json_text(&value)
        }
        Format::Csv => {
            let mut out = String::from("stage,option,estimation_cost,measurement_cost\n");
            for (k, (y, c)) in one_based.iter().zip(&result.stage_costs).enumerate() {
                out.push_str(&csv_line([
                    k.to_string(),
                    y.to_string(),
                    g17(c.estimation),
                    g17(c.measurement),
                ]));
                out.push('\n');
            }
            out
        }
    })
}

fn q0_form(opts: &Options) -> Q0Form {
    match opts.form {
        FormArg::Unit => Q0Form::Unit,
        FormArg::Exact => Q0Form::Exact,
    }
}

fn dmc_model(opts: &Options) -> Result<ScalarTwoStageModel, CliError> {
    let mut model: ScalarTwoStageModel = read_input(opts)?;
    if let Some(gamma) = opts.gamma {
        model.gamma = gamma;
    }
    model.validate()?;
    Ok(model)
}

fn dmc_curves(opts: &Options) -> Result<String, CliError> {
    let model = dmc_model(opts)?;
    let gammas = opts.gammas.clone().unwrap_or_else(|| DMC_GAMMAS.to_vec());
    let (lo, hi) = range(opts, DMC_U_RANGE)?;
    let u_grid = uniform_points(lo, hi, grid(opts, DMC_U_GRID, 2)?);
    let curves = q0_curves(&model, &m00_cases(&model), &gammas, &u_grid, q0_form(opts))?;
    Ok(match format_or(opts, Format::Csv) {
        Format::Csv => dmc::curves_csv(&curves),
        Format::Json => json_text(&to_value(&curves)),
    })
}

fn dmc_targets(opts: &Options) -> Result<Vec<U0Target>, CliError> {
    match opts.target.as_deref() {
        None => Ok(U0Target::ALL.to_vec()),
        Some(name) => U0Target::parse(name)
            .map(|t| vec![t])
            .ok_or_else(|| CliError::Parse(format!("unknown direct-control target {name:?}"))),
    }
}

fn dmc_sweep(opts: &Options) -> Result<String, CliError> {
    let model = dmc_model(opts)?;
    let targets = dmc_targets(opts)?;
    if opts.values.is_some() && targets.len() != 1 {
        return Err(CliError::Parse("--values needs a single --target".into()));
    }
    let (lo, hi) = range(opts, DMC_OFFSET_RANGE)?;
    let offsets = uniform_points(lo, hi, grid(opts, DMC_OFFSETS, 1)?);
    let mut cells = Vec::new();
    for target in targets {
        let values = opts
            .values
            .clone()
            .unwrap_or_else(|| target.default_values());
        cells.extend(sensitivity_sweep_u0(
            &model,
            target,
            &values,
            &offsets,
            q0_form(opts),
        ));
    }
    Ok(match format_or(opts, Format::Csv) {
        Format::Csv => dmc::sweep_csv(&cells),
        Format::Json => json_text(&to_value(&cells)),
    })
}

fn dmc_solve(opts: &Options) -> Result<String, CliError> {
    let model = dmc_model(opts)?;
    let form = q0_form(opts);
    let m00 = opts.m00.unwrap_or(model.m_x);
    let u0 = dmc::optimal_u0_with(&model, m00, form)?;
    let coeffs = q0_coefficients_with(&model, m00, form);
    let mut value = json!({
        "m00": m00,
        "gamma": model.gamma,
        "form": form,
        "u0_star": u0,
        "q_star": q0_eval(&coeffs, u0),
        "lqg_limit_u0": 0.0 - model.lqg_gain0() * m00,
        "stationary_points": stationary_points(&coeffs)?,
    });
    if let Some(n) = opts.rollouts {
        let expected = dmc_expected_cost(&model, form)?;
        let mc = monte_carlo_dmc(&model, form, rollouts(opts, n)?, opts.seed)?;
        value["expected_total_cost"] = json!(expected);
        value["monte_carlo"] = monte_carlo_value(&mc, opts.seed, expected);
    }
    Ok(summary(opts, value))
}

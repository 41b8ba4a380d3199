use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;

use super::*;
use crate::machine_repair::{build_model, MachineRepairParams, DEFAULT, DIAGNOSE, REPAIR};

fn nominal() -> PomdpModel {
    build_model(&MachineRepairParams::nominal()).unwrap()
}

fn zero_cost(mut model: PomdpModel) -> PomdpModel {
    for st in &mut model.stages {
        for g in &mut st.cost {
            g.fill(0.0);
        }
    }
    model
}

#[test]
fn machine_repair_model_validates() {
    nominal().validate().unwrap();
}

#[test]
fn row_summing_to_point_nine_is_rejected() {
    let mut m = nominal();
    m.stages[0].transition[DIAGNOSE] = DMatrix::from_row_slice(2, 2, &[0.7, 0.2, 0.0, 1.0]);
    assert!(matches!(
        m.validate(),
        Err(PomdpError::NonStochasticRow {
            matrix: "F",
            stage: 0,
            control: Some(1),
            row: 0,
            ..
        })
    ));
}

#[test]
fn wide_transition_is_a_dimension_mismatch() {
    let mut m = nominal();
    m.stages[0].transition[0] = DMatrix::from_row_slice(2, 3, &[0.8, 0.2, 0.0, 0.0, 1.0, 0.0]);
    assert!(matches!(
        m.validate(),
        Err(PomdpError::DimensionMismatch(_))
    ));
}

#[test]
fn belief_init_examples() {
    let m = nominal();
    assert_abs_diff_eq!(
        belief_init(&m, 1).unwrap().rho(),
        0.14 / 0.38,
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(
        belief_init(&m, 0).unwrap().rho(),
        0.06 / 0.62,
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(belief_init(&m, 1).unwrap().rho(), 0.368421, epsilon = 1e-6);
    assert_abs_diff_eq!(belief_init(&m, 0).unwrap().rho(), 0.096774, epsilon = 1e-6);
}

#[test]
fn uninformative_initial_sensor_keeps_prior() {
    let mut m = nominal();
    m.initial_observation = DMatrix::from_row_slice(2, 2, &[0.4, 0.6, 0.4, 0.6]);
    for z in 0..2 {
        let b = belief_init(&m, z).unwrap();
        assert_abs_diff_eq!(b.p[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(b.p[1], 0.2, epsilon = 1e-15);
    }
}

#[test]
fn impossible_initial_measurement() {
    let mut m = nominal();
    m.initial_observation = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
    assert_eq!(
        belief_init(&m, 1),
        Err(PomdpError::ZeroProbabilityMeasurement {
            stage: 0,
            measurement: 1
        })
    );
}

#[test]
fn repair_resets_the_prior() {
    let m = nominal();
    let b = belief_update(&m, &Belief::two_state(0, 0.3), REPAIR, 1).unwrap();
    assert_eq!(b.stage, 1);
    assert_abs_diff_eq!(b.rho(), 0.14 / 0.38, epsilon = 1e-15);
}

#[test]
fn static_uninformative_step_is_identity() {
    let mut m = nominal();
    m.stages[0].transition[DEFAULT] = DMatrix::identity(2, 2);
    m.stages[1].observation[DEFAULT] = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
    let b = Belief::two_state(0, 0.37);
    let next = belief_update(&m, &b, DEFAULT, 0).unwrap();
    assert_abs_diff_eq!(next.p[0], 0.63, epsilon = 1e-15);
    assert_abs_diff_eq!(next.p[1], 0.37, epsilon = 1e-15);
}

#[test]
fn deterministic_transition_moves_all_mass() {
    let mut m = nominal();
    m.stages[0].transition[DEFAULT] = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
    let b = Belief::two_state(0, 0.0);
    // the bad state reads "bad" with probability eta_d, so either reading lands on state 1
    for z in 0..2 {
        let next = belief_update(&m, &b, DEFAULT, z).unwrap();
        assert_eq!(next.p, vec![0.0, 1.0]);
    }
}

#[test]
fn belief_update_rejects_bad_indices() {
    let m = nominal();
    let b = Belief::two_state(0, 0.5);
    assert!(matches!(
        belief_update(&m, &b, 3, 0),
        Err(PomdpError::IndexOutOfRange(_))
    ));
    assert!(matches!(
        belief_update(&m, &b, 0, 2),
        Err(PomdpError::IndexOutOfRange(_))
    ));
    let last = Belief::two_state(5, 0.5);
    assert!(matches!(
        belief_update(&m, &last, 0, 0),
        Err(PomdpError::IndexOutOfRange(_))
    ));
}

#[test]
fn final_stage_q_vector() {
    let m = nominal();
    for i in 0..=20 {
        let rho = i as f64 / 20.0;
        let q = q_vector(&m, &Belief::two_state(5, rho));
        assert_abs_diff_eq!(q[0], rho * 10.0, epsilon = 1e-12);
        // diagnosis is charged in both states: c_D + ρ c_B
        assert_abs_diff_eq!(q[1], 1.0 + rho * 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q[2], 5.0, epsilon = 1e-12);
    }
    let q = q_vector(&m, &Belief::two_state(5, 0.5));
    assert_eq!(q, vec![5.0, 6.0, 5.0]);
}

#[test]
fn zero_costs_give_zero_q_everywhere() {
    let m = zero_cost(nominal());
    for k in 0..6 {
        assert_eq!(q_vector(&m, &Belief::two_state(k, 0.4)), vec![0.0; 3]);
    }
    assert_eq!(expected_total_cost(&m), 0.0);
}

#[test]
fn final_stage_cost_to_go() {
    let m = nominal();
    assert_eq!(cost_to_go(&m, &Belief::two_state(5, 0.0)), 0.0);
    assert_eq!(cost_to_go(&m, &Belief::two_state(5, 1.0)), 5.0);
    assert_abs_diff_eq!(
        cost_to_go(&m, &Belief::two_state(5, 0.3)),
        3.0,
        epsilon = 1e-12
    );
}

#[test]
fn final_stage_policy_threshold_and_tie() {
    let m = nominal();
    assert_eq!(optimal_control(&m, &Belief::two_state(5, 0.5)), DEFAULT);
    assert_eq!(
        optimal_control(&m, &Belief::two_state(5, 0.5000001)),
        REPAIR
    );
    for i in 0..=100 {
        let u = optimal_control(&m, &Belief::two_state(5, i as f64 / 100.0));
        assert_ne!(u, DIAGNOSE);
    }
}

#[test]
fn one_stage_expected_cost() {
    let p = MachineRepairParams {
        horizon: 1,
        ..MachineRepairParams::nominal()
    };
    let m = build_model(&p).unwrap();
    let hand = 0.62 * (0.06_f64 / 0.62 * 10.0).min(5.0) + 0.38 * (0.14_f64 / 0.38 * 10.0).min(5.0);
    assert_abs_diff_eq!(expected_total_cost(&m), hand, epsilon = 1e-12);
    assert_abs_diff_eq!(hand, 2.0, epsilon = 1e-12);
}

#[test]
fn cached_solver_agrees_with_plain() {
    let m = nominal();
    let plain = Solver::new(&m);
    let cached = Solver::with_cache(&m);
    for i in 0..=10 {
        let b = Belief::two_state(1, i as f64 / 10.0);
        let a = plain.q_vector(&b);
        let c = cached.q_vector(&b);
        for u in 0..3 {
            assert_abs_diff_eq!(a[u], c[u], epsilon = 1e-9);
        }
    }
    assert!(cached.cache_len() > 0);
    assert_abs_diff_eq!(
        plain.expected_total_cost(),
        cached.expected_total_cost(),
        epsilon = 1e-9
    );
}

#[test]
fn rollout_shape_and_determinism() {
    let m = nominal();
    let a = simulate_rollout(&m, 17);
    let b = simulate_rollout(&m, 17);
    assert_eq!(a, b);
    assert_eq!(a.states.len(), 7);
    assert_eq!(a.controls.len(), 6);
    assert_eq!(a.measurements.len(), 6);
    let mut total = 0.0;
    for k in 0..6 {
        total += m.stages[k].cost[a.controls[k]][(a.states[k], a.states[k + 1])];
    }
    assert_eq!(total, a.realized_cost);
}

#[test]
fn zero_cost_rollouts() {
    let m = zero_cost(nominal());
    for seed in 0..20 {
        assert_eq!(simulate_rollout(&m, seed).realized_cost, 0.0);
    }
    let est = monte_carlo_cost(&m, 50, 3);
    assert_eq!((est.mean, est.stderr), (0.0, 0.0));
}

#[test]
fn single_rollout_has_zero_stderr() {
    let est = monte_carlo_cost(&nominal(), 1, 9);
    assert_eq!(est.stderr, 0.0);
    assert_eq!(est.n, 1);
}

#[test]
fn monte_carlo_is_reproducible() {
    let m = nominal();
    let a = monte_carlo_cost(&m, 500, 42);
    let b = monte_carlo_cost(&m, 500, 42);
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
}

#[test]
fn belief_constructor_checks_normalization() {
    assert!(Belief::new(0, vec![0.5, 0.5]).is_ok());
    assert!(matches!(
        Belief::new(0, vec![0.5, 0.6]),
        Err(PomdpError::InvalidBelief(_))
    ));
    assert!(matches!(
        Belief::new(0, vec![1.5, -0.5]),
        Err(PomdpError::InvalidBelief(_))
    ));
}

#[test]
fn argmin_absorbs_roundoff_ties() {
    assert_eq!(argmin(&[1.0, 1.0 - 1e-15, 2.0]), 0);
    assert_eq!(argmin(&[1.0, 1.0 - 1e-9, 2.0]), 1);
    assert_eq!(argmin(&[3.0, 2.0, 2.0]), 1);
}

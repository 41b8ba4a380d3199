//! Structural properties of the exact PO-MDP recursion on random models.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sensorctl_core::machine_repair::{build_model, MachineRepairParams};
use sensorctl_core::pomdp::{
    belief_init, belief_update, cost_to_go, expected_total_cost, optimal_control, q_vector, Belief,
    Solver, TIE_TOL,
};

use common::*;

fn assert_belief(b: &Belief) {
    assert!(b.p.iter().all(|&x| x >= 0.0), "{:?}", b.p);
    let s: f64 = b.p.iter().sum();
    assert!((s - 1.0).abs() <= 1e-9, "sum {s}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beliefs_stay_normalized(seed in any::<u64>()) {
        let model = random_pomdp(seed, 4, 3, 3, 3);
        let mut frontier = Vec::new();
        for z in 0..model.initial_observation.ncols() {
            if let Ok(b) = belief_init(&model, z) {
                assert_belief(&b);
                frontier.push(b);
            }
        }
        for k in 0..model.horizon - 1 {
            let mut next = Vec::new();
            for b in &frontier {
                for u in 0..model.stages[k].m {
                    for z in 0..model.stages[k + 1].s {
                        if let Ok(nb) = belief_update(&model, b, u, z) {
                            assert_belief(&nb);
                            next.push(nb);
                        }
                    }
                }
            }
            frontier = next;
        }
    }

    #[test]
    fn value_is_min_of_q(seed in any::<u64>(), w in 0.0f64..1.0) {
        let model = random_pomdp(seed, 3, 3, 3, 2);
        let n = model.stages[0].n;
        let mut p = vec![0.0; n];
        p[0] = w;
        p[n - 1] += 1.0 - w;
        let b = Belief { stage: 0, p };
        let q = q_vector(&model, &b);
        let j = cost_to_go(&model, &b);
        let u = optimal_control(&model, &b);
        let slack = TIE_TOL * j.abs().max(1.0);
        prop_assert!(q.iter().all(|&v| v >= j));
        prop_assert!(q[u] <= j + slack);
        prop_assert!(q[..u].iter().all(|&v| v > j + slack), "tie must resolve to the smallest index");
        prop_assert_eq!(optimal_control(&model, &b), u);
    }

    #[test]
    fn closed_loop_never_worse_than_open_loop(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let horizon = rng.random_range(1..=3);
        let model = random_pomdp(seed ^ 0xABCD, 3, horizon, 3, 3);
        let closed = expected_total_cost(&model);
        let open = all_sequences(&model)
            .iter()
            .map(|s| open_loop_cost(&model, s))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(closed <= open + 1e-9, "closed {closed} > open {open}");
    }

    #[test]
    fn value_is_concave_on_two_state_models(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0, lambda in 0.0f64..1.0) {
        let model = two_state_model(seed, 3);
        let solver = Solver::new(&model);
        for k in 0..3 {
            let ja = solver.cost_to_go(&Belief::two_state(k, a));
            let jb = solver.cost_to_go(&Belief::two_state(k, b));
            let mix = solver.cost_to_go(&Belief::two_state(k, lambda * a + (1.0 - lambda) * b));
            prop_assert!(mix >= lambda * ja + (1.0 - lambda) * jb - 1e-9);
        }
    }
}

#[test]
fn machine_repair_midpoint_concavity() {
    let model = build_model(&MachineRepairParams::nominal()).unwrap();
    let solver = Solver::new(&model);
    let grid: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
    for k in [1, 3, 5] {
        let j: Vec<f64> = grid
            .iter()
            .map(|&r| solver.cost_to_go(&Belief::two_state(k, r)))
            .collect();
        for i in 0..grid.len() {
            for l in (i + 2..grid.len()).step_by(2) {
                let mid = solver.cost_to_go(&Belief::two_state(k, 0.5 * (grid[i] + grid[l])));
                assert!(
                    mid >= 0.5 * (j[i] + j[l]) - 1e-9,
                    "stage {k}: ({}, {})",
                    grid[i],
                    grid[l]
                );
            }
        }
    }
}

#[test]
fn machine_repair_value_is_piecewise_linear() {
    let model = build_model(&MachineRepairParams::nominal()).unwrap();
    for k in [2, 4, 5] {
        check_piecewise_linear(&model, k).unwrap();
    }
}

#[test]
fn random_two_state_values_are_piecewise_linear() {
    for seed in 0..5 {
        let model = two_state_model(seed, 3);
        for k in 0..3 {
            check_piecewise_linear(&model, k).unwrap();
        }
    }
}

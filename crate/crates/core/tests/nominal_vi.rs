use nalgebra::{DMatrix, DVector};
use rmdp_core::mdp::{nominal_value_iteration, validate_instance};
use rmdp_core::MdpInstance;

/// Six-state river: "left" drifts toward state 0 (small reward), "right"
/// pushes upstream toward state 5 (large reward) against the current.
fn river() -> MdpInstance {
    let n = 6;
    let mut b = MdpInstance::builder(n, 2, 0.95);
    for s in 0..n {
        b = b.transition(s, 0, s.saturating_sub(1), 1.0);
        if s == 0 {
            b = b.transition(0, 1, 0, 0.4).transition(0, 1, 1, 0.6);
        } else if s == n - 1 {
            b = b.transition(s, 1, s - 1, 0.4).transition(s, 1, s, 0.6);
        } else {
            b = b.transition(s, 1, s - 1, 0.05).transition(s, 1, s, 0.6).transition(s, 1, s + 1, 0.35);
        }
    }
    b = b.reward(0, 0, 0, 0.005).reward(n - 1, 1, n - 1, 1.0);
    b.build().unwrap()
}

fn greedy(inst: &MdpInstance, v: &[f64]) -> Vec<usize> {
    (0..inst.num_states())
        .map(|s| {
            (0..inst.num_actions())
                .max_by(|&x, &y| inst.nominal_action_value(s, x, v).total_cmp(&inst.nominal_action_value(s, y, v)))
                .unwrap()
        })
        .collect()
}

fn evaluate(inst: &MdpInstance, policy: &[usize]) -> Vec<f64> {
    let n = inst.num_states();
    let mut m = DMatrix::<f64>::identity(n, n);
    let mut r = DVector::<f64>::zeros(n);
    for s in 0..n {
        let a = policy[s];
        for &(next, p) in inst.transitions(s, a) {
            m[(s, next)] -= inst.discount() * p;
            r[s] += p * inst.reward(s, a, next);
        }
    }
    m.lu().solve(&r).unwrap().iter().copied().collect()
}

#[test]
fn value_iteration_matches_policy_evaluation() {
    let inst = river();
    assert!(validate_instance(&inst).ok);
    let tol = 1e-9;
    let (v, iterations) = nominal_value_iteration(&inst, tol).unwrap();
    assert!(iterations > 1);
    let policy = greedy(&inst, &v);
    assert_eq!(policy[5], 1);
    let exact = evaluate(&inst, &policy);
    let bound = tol * inst.discount() / (1.0 - inst.discount());
    for (x, y) in v.iter().zip(&exact) {
        assert!((x - y).abs() <= bound + 1e-12, "{x} vs {y}");
    }
}

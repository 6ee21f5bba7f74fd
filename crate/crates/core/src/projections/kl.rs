//! Kullback-Leibler projection by bisection on the concave dual
//! `f(α) = −βα − log Σ p̄ exp(−αb)`.

use super::{BisectionProjection, ProjectionQuery, ProjectionResult, OMEGA_MIN};
use crate::ambiguity::AmbiguityKind;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 400;

/// Support of `p̄` with the matching costs; KL cannot move mass elsewhere.
fn support(q: &ProjectionQuery) -> (Vec<f64>, Vec<f64>) {
    q.nominal
        .iter()
        .zip(q.costs)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, b)| (*p, *b))
        .unzip()
}

/// Dual objective and its derivative, evaluated around the smallest cost.
pub fn kl_dual(nominal: &[f64], costs: &[f64], beta: f64, alpha: f64) -> (f64, f64) {
    let floor = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut mass, mut tilted) = (0.0, 0.0);
    for (p, b) in nominal.iter().zip(costs) {
        let w = p * (-alpha * (b - floor)).exp();
        mass += w;
        tilted += w * b;
    }
    (-beta * alpha + alpha * floor - mass.ln(), tilted / mass - beta)
}

/// δ-accurate KL projection. The returned bracket `[alpha_lower,
/// alpha_upper]` contains the dual maximiser.
pub fn project_kl(q: &ProjectionQuery, delta: f64) -> Result<BisectionProjection> {
    q.validate(AmbiguityKind::KullbackLeibler)?;
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    if q.nominal_cost() <= q.threshold {
        return Ok(BisectionProjection::trivial());
    }
    let (nominal, costs) = support(q);
    let beta = q.threshold;
    let min_cost = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let max_cost = costs.iter().copied().fold(0.0, f64::max);
    if min_cost > beta {
        return Err(Error::Infeasible { min_cost, threshold: beta });
    }
    let omega = beta - min_cost;
    if omega < OMEGA_MIN {
        return Err(Error::DegenerateFeasibility { threshold: beta, gap: omega });
    }
    let min_nominal = nominal.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (0.0, (1.0 / min_nominal).ln() / omega);
    let tol = delta / max_cost;
    let mut iterations = 0;
    while hi - lo > tol && iterations < MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if kl_dual(&nominal, &costs, beta, mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let value = kl_dual(&nominal, &costs, beta, lo).0.max(0.0);
    Ok(BisectionProjection {
        result: ProjectionResult { lower: value, upper: value + max_cost * (hi - lo) },
        alpha_lower: lo,
        alpha_upper: hi,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{finite_difference_concavity, oracle_projection, GridSpec};
    use crate::projections::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_form_maximiser() {
        for p_low in [0.1, 0.2, 0.4] {
            let nominal = [p_low, 1.0 - p_low];
            let q = ProjectionQuery::new(&nominal, &[], &[1.0, 2.0], 1.5);
            let out = project_kl(&q, 1e-10).unwrap();
            let expected = ((1.0 - p_low) / p_low).ln();
            assert!((out.alpha_midpoint() - expected).abs() < 1e-6);
            assert!(out.result.width() <= 1e-10);
        }
    }

    #[test]
    fn trivial_infeasible_and_degenerate() {
        let q = ProjectionQuery::new(&[0.5, 0.5], &[], &[1.0, 2.0], 1.5);
        assert_eq!(project_kl(&q, 1e-8).unwrap().result, ProjectionResult::exact(0.0));
        let q = ProjectionQuery::new(&[0.5, 0.5, 0.0], &[], &[1.0, 2.0, 0.0], 0.5);
        assert!(matches!(project_kl(&q, 1e-8), Err(Error::Infeasible { .. })));
        let q = ProjectionQuery::new(&[0.5, 0.5], &[], &[1.0, 2.0], 1.0 + 1e-12);
        assert!(matches!(project_kl(&q, 1e-8), Err(Error::DegenerateFeasibility { .. })));
    }

    #[test]
    fn interval_contains_oracle_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..40 {
            let n = rng.random_range(2..=4);
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let nominal: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let min_b = b.iter().copied().fold(f64::INFINITY, f64::min);
            let beta = min_b + rng.random_range(0.05..0.95) * (dot(&nominal, &b) - min_b);
            let q = ProjectionQuery::new(&nominal, &[], &b, beta);
            let delta = 1e-7;
            let out = project_kl(&q, delta).unwrap().result;
            assert!(out.width() <= delta);
            let slow = oracle_projection(AmbiguityKind::KullbackLeibler, &q, &GridSpec::default().doubled_refinement()).unwrap();
            assert!(out.lower <= slow + 1e-8, "{out:?} vs {slow}");
            assert!(slow - out.upper <= 1e-5, "{out:?} vs {slow}");
        }
    }

    #[test]
    fn dual_is_concave() {
        let nominal = [0.2, 0.5, 0.3];
        let costs = [0.1, 0.9, 0.4];
        let beta = 0.3;
        let upper = (1.0f64 / 0.2).ln() / (beta - 0.1);
        assert!(finite_difference_concavity(|x| kl_dual(&nominal, &costs, beta, x).0, (0.0, upper), 500));
    }
}

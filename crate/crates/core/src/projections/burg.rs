//! Burg-entropy projection by bisection on the concave dual
//! `f(α) = Σ p̄ log(1 + α(b − β)/(β − min b))` over `α ∈ [0, 1]`.

use super::{BisectionProjection, ProjectionQuery, ProjectionResult, OMEGA_MIN};
use crate::ambiguity::AmbiguityKind;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 400;

/// Dual objective and derivative; `omega = β − min b` over all components.
pub fn burg_dual(nominal: &[f64], costs: &[f64], beta: f64, omega: f64, alpha: f64) -> (f64, f64) {
    let (mut value, mut slope) = (0.0, 0.0);
    for (&p, &b) in nominal.iter().zip(costs) {
        if p == 0.0 {
            continue;
        }
        let x = alpha * (b - beta) / omega;
        value += p * x.ln_1p();
        slope += p * (b - beta) / (omega + alpha * (b - beta));
    }
    (value, slope)
}

/// δ-accurate Burg projection. Components with `p̄ = 0` still count towards
/// `min b`, since the divergence lets the adversary move mass there freely.
pub fn project_burg(q: &ProjectionQuery, delta: f64) -> Result<BisectionProjection> {
    q.validate(AmbiguityKind::BurgEntropy)?;
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    if q.nominal_cost() <= q.threshold {
        return Ok(BisectionProjection::trivial());
    }
    let beta = q.threshold;
    let min_cost = q.min_cost();
    let max_cost = q.costs.iter().copied().fold(0.0, f64::max);
    if min_cost >= beta {
        return Err(Error::Infeasible { min_cost, threshold: beta });
    }
    let omega = beta - min_cost;
    if omega < OMEGA_MIN {
        return Err(Error::DegenerateFeasibility { threshold: beta, gap: omega });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let tol = delta * omega / max_cost;
    let mut iterations = 0;
    while hi - lo > tol && iterations < MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if burg_dual(q.nominal, q.costs, beta, omega, mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let (value, slope) = burg_dual(q.nominal, q.costs, beta, omega, lo);
    let gain = (max_cost / omega).min(slope.max(0.0));
    let value = value.max(0.0);
    Ok(BisectionProjection {
        result: ProjectionResult { lower: value, upper: value + gain * (hi - lo) },
        alpha_lower: lo,
        alpha_upper: hi,
        iterations,
    })
}

//! Solvers for `min { d(p, p̄) : p ∈ Δ, bᵀp ≤ β }`.

pub mod burg;
pub mod kl;
pub mod l1;
pub mod l2;

use crate::ambiguity::AmbiguityKind;
use crate::error::{Error, Result};

pub use burg::project_burg;
pub use kl::project_kl;
pub use l1::{l1_concave_envelope, l1_plus_breakpoints, project_l1, EnvelopeSegment, L1Projector};
pub use l2::{
    l2_solution_path, l2_solution_path_reduced, l2_solve_system, perturb_for_regularity,
    project_l2, L2Projector, PiecewiseLinearPath, PathSegment,
};

/// Slope comparison tolerance.
pub const SLOPE_TOL: f64 = 1e-12;
/// Smallest admissible `β − min b` for the divergence kinds.
pub const OMEGA_MIN: f64 = 1e-10;
const SIMPLEX_TOL: f64 = 1e-9;

/// One projection problem. `weights` is ignored (and may be empty) for the
/// divergence kinds.
#[derive(Debug, Clone, Copy)]
pub struct ProjectionQuery<'a> {
    pub nominal: &'a [f64],
    pub weights: &'a [f64],
    pub costs: &'a [f64],
    pub threshold: f64,
}

impl<'a> ProjectionQuery<'a> {
    pub fn new(nominal: &'a [f64], weights: &'a [f64], costs: &'a [f64], threshold: f64) -> Self {
        ProjectionQuery { nominal, weights, costs, threshold }
    }

    pub fn len(&self) -> usize {
        self.nominal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nominal.is_empty()
    }

    pub fn with_threshold(&self, threshold: f64) -> Self {
        ProjectionQuery { threshold, ..*self }
    }

    pub fn nominal_cost(&self) -> f64 {
        dot(self.nominal, self.costs)
    }

    pub fn min_cost(&self) -> f64 {
        self.costs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, kind: AmbiguityKind) -> Result<()> {
        let n = self.nominal.len();
        if n == 0 {
            return Err(Error::Domain("empty projection query".into()));
        }
        if self.costs.len() != n {
            return Err(Error::Domain(format!("costs have length {}, expected {n}", self.costs.len())));
        }
        if self.nominal.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain("nominal row must be non-negative and finite".into()));
        }
        let total: f64 = self.nominal.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Domain(format!("nominal row sums to {total}")));
        }
        if self.costs.iter().any(|&b| !(b >= 0.0) || !b.is_finite()) {
            return Err(Error::Domain("costs must be non-negative and finite".into()));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Domain("threshold must be finite".into()));
        }
        if kind.uses_weights() {
            if self.weights.len() != n {
                return Err(Error::Domain(format!(
                    "weights have length {}, expected {n}",
                    self.weights.len()
                )));
            }
            if self.weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
                return Err(Error::Domain("weights must be positive and finite".into()));
            }
        }
        Ok(())
    }
}

/// Interval `[lower, upper]` containing the optimal projection value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionResult {
    pub lower: f64,
    pub upper: f64,
}

impl ProjectionResult {
    pub fn exact(value: f64) -> Self {
        ProjectionResult { lower: value, upper: value }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Solves the projection for `kind`; `delta` is the accuracy of the
/// bisection-based kinds and is ignored by the exact ones.
pub fn project(kind: AmbiguityKind, q: &ProjectionQuery, delta: f64) -> Result<ProjectionResult> {
    match kind {
        AmbiguityKind::WeightedL1 => project_l1(q),
        AmbiguityKind::WeightedL2 => project_l2(q),
        AmbiguityKind::KullbackLeibler => project_kl(q, delta).map(|s| s.result),
        AmbiguityKind::BurgEntropy => project_burg(q, delta).map(|s| s.result),
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn check_feasible(q: &ProjectionQuery) -> Result<()> {
    let min_cost = q.min_cost();
    if min_cost > q.threshold {
        return Err(Error::Infeasible { min_cost, threshold: q.threshold });
    }
    Ok(())
}

/// Outcome of a bisection-based projection, with the final dual bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionProjection {
    pub result: ProjectionResult,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub iterations: usize,
}

impl BisectionProjection {
    pub(crate) fn trivial() -> Self {
        BisectionProjection {
            result: ProjectionResult::exact(0.0),
            alpha_lower: 0.0,
            alpha_upper: 0.0,
            iterations: 0,
        }
    }

    pub fn alpha_midpoint(&self) -> f64 {
        0.5 * (self.alpha_lower + self.alpha_upper)
    }
}

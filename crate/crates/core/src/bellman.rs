//! Robust Bellman operator and robust value iteration.
//!
//! The value at state `s` is the smallest `θ` for which the adversary can
//! push every action's expected cost `p_aᵀ(r_sa + λv)` below `θ` within the
//! budget, i.e. `Σ_a 𝔓_a(θ) ≤ κ`. It is found by bisection on `θ`.

use rayon::prelude::*;

use crate::ambiguity::{AmbiguityKind, AmbiguitySpec};
use crate::error::{Error, Result};
use crate::mdp::{state_lower_bound, sup_distance, upper_reward_bound, MdpInstance, ValueVector, DEFAULT_ITERATION_CAP};
use crate::projections::{project_burg, project_kl, L1Projector, L2Projector, ProjectionQuery};

/// How the accuracy of the inexact (KL, Burg) projections is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaPolicy {
    /// `δ = ε'κ / (2AR̄ + Aε')` with `ε' = ε/2`, which keeps the reported
    /// bounds within `ε` of each other.
    Derived,
    /// A fixed projection accuracy. The `ε` guarantee no longer applies.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellmanConfig {
    pub epsilon: f64,
    pub max_bisection_iters: usize,
    pub delta_policy: DeltaPolicy,
    /// Worker threads for state-level parallelism; 1 runs inline.
    pub threads: usize,
}

impl Default for BellmanConfig {
    fn default() -> Self {
        BellmanConfig { epsilon: 1e-5, max_bisection_iters: 200, delta_policy: DeltaPolicy::Derived, threads: 1 }
    }
}

impl BellmanConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        let cfg = BellmanConfig { epsilon, ..Default::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_threads(self, threads: usize) -> Self {
        BellmanConfig { threads: threads.max(1), ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Domain(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_bisection_iters == 0 {
            return Err(Error::Domain("max_bisection_iters must be positive".into()));
        }
        if let DeltaPolicy::Fixed(d) = self.delta_policy {
            if !(d > 0.0) {
                return Err(Error::Domain(format!("projection delta must be positive, got {d}")));
            }
        }
        Ok(())
    }

    /// Projection accuracy used for the inexact kinds.
    pub fn projection_delta(&self, kappa: f64, num_actions: usize, reward_bound: f64) -> f64 {
        match self.delta_policy {
            DeltaPolicy::Fixed(d) => d,
            DeltaPolicy::Derived => {
                let e = 0.5 * self.epsilon;
                let a = num_actions as f64;
                e * kappa / (2.0 * a * reward_bound + a * e)
            }
        }
    }
}

/// Outcome of one state's bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateUpdate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub projection_calls: usize,
    pub bisection_steps: usize,
    /// Total deviation `Σ_a d_a` certified at the final upper end, or at
    /// the terminal `θ` if the bisection stopped on the budget test.
    pub attained_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellmanResult {
    pub values: ValueVector,
    pub per_state_bounds: Vec<(f64, f64)>,
    pub projection_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VISolution {
    pub values: ValueVector,
    pub iterations: usize,
    pub residual: f64,
    pub objective: f64,
    pub projection_calls: usize,
}

enum ActionSolver {
    L1 { projector: L1Projector, nominal: Vec<f64> },
    L2 { projector: L2Projector },
    Divergence { kind: AmbiguityKind, nominal: Vec<f64>, costs: Vec<f64>, delta: f64 },
}

impl ActionSolver {
    /// Bounds on `𝔓(θ)`; an infeasible or degenerate threshold counts as +∞.
    fn bounds(&self, theta: f64) -> Result<(f64, f64)> {
        let outcome = match self {
            ActionSolver::L1 { projector, nominal } => projector.value(nominal, theta).map(|x| (x, x)),
            ActionSolver::L2 { projector } => projector.value(theta).map(|x| (x, x)),
            ActionSolver::Divergence { kind, nominal, costs, delta } => {
                let q = ProjectionQuery::new(nominal, &[], costs, theta);
                let solved = match kind {
                    AmbiguityKind::KullbackLeibler => project_kl(&q, *delta),
                    _ => project_burg(&q, *delta),
                };
                solved.map(|s| (s.result.lower, s.result.upper))
            }
        };
        match outcome {
            Ok(b) => Ok(b),
            Err(Error::Infeasible { .. }) | Err(Error::DegenerateFeasibility { .. }) => {
                Ok((f64::INFINITY, f64::INFINITY))
            }
            Err(e) => Err(e),
        }
    }
}

fn action_solvers(inst: &MdpInstance, amb: &AmbiguitySpec, v: &[f64], s: usize, delta: f64) -> Result<Vec<ActionSolver>> {
    let n = inst.num_states();
    let mut sigma = Vec::with_capacity(n);
    (0..inst.num_actions())
        .map(|a| {
            let costs = inst.cost_vector(s, a, v);
            let nominal = inst.nominal_row(s, a);
            let kind = amb.kind();
            Ok(match kind {
                AmbiguityKind::WeightedL1 => {
                    amb.weights_into(s, a, n, &mut sigma);
                    ActionSolver::L1 { projector: L1Projector::new(&costs, &sigma), nominal }
                }
                AmbiguityKind::WeightedL2 => {
                    amb.weights_into(s, a, n, &mut sigma);
                    ActionSolver::L2 { projector: L2Projector::new(&nominal, &sigma, &costs)? }
                }
                AmbiguityKind::KullbackLeibler | AmbiguityKind::BurgEntropy => {
                    ActionSolver::Divergence { kind, nominal, costs, delta }
                }
            })
        })
        .collect()
}

fn check_values(inst: &MdpInstance, v: &[f64]) -> Result<()> {
    if v.len() != inst.num_states() {
        return Err(Error::Domain(format!("value vector has length {}, expected {}", v.len(), inst.num_states())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("value vector must be finite".into()));
    }
    Ok(())
}

fn bellman_state_impl(
    inst: &MdpInstance,
    amb: &AmbiguitySpec,
    v: &[f64],
    s: usize,
    cfg: &BellmanConfig,
    mut trace: Option<&mut Vec<(f64, f64)>>,
) -> Result<StateUpdate> {
    let eps = cfg.epsilon;
    let kappa = amb.kappa();
    let reward_bound = upper_reward_bound(inst);
    let delta = cfg.projection_delta(kappa, inst.num_actions(), reward_bound);
    let solvers = action_solvers(inst, amb, v, s, delta)?;
    let nominal_best = (0..inst.num_actions())
        .map(|a| inst.nominal_action_value(s, a, v))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut lo = state_lower_bound(inst, v, s);
    let mut hi = reward_bound.max(nominal_best);
    let mut attained = 0.0;
    let mut calls = 0;
    let finish = |lo: f64, hi: f64, steps, calls, attained| StateUpdate {
        value: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        projection_calls: calls,
        bisection_steps: steps,
        attained_deviation: attained,
    };
    for step in 0..cfg.max_bisection_iters {
        if let Some(t) = trace.as_deref_mut() {
            t.push((lo, hi));
        }
        if hi - lo <= eps {
            return Ok(finish(lo, hi, step, calls, attained));
        }
        let theta = 0.5 * (lo + hi);
        let (mut sum_lo, mut sum_hi) = (0.0, 0.0);
        for solver in &solvers {
            let (d_lo, d_hi) = solver.bounds(theta)?;
            calls += 1;
            sum_lo += d_lo;
            sum_hi += d_hi;
            if sum_lo > kappa {
                break;
            }
        }
        if sum_lo > kappa {
            lo = theta;
        } else if sum_hi <= kappa {
            hi = theta;
            attained = sum_hi;
        } else {
            let half = 0.5 * eps;
            return Ok(StateUpdate {
                value: theta,
                lower: theta - half,
                upper: theta + half,
                projection_calls: calls,
                bisection_steps: step + 1,
                attained_deviation: sum_lo,
            });
        }
    }
    if hi - lo <= eps {
        return Ok(finish(lo, hi, cfg.max_bisection_iters, calls, attained));
    }
    Err(Error::BisectionOverflow { iterations: cfg.max_bisection_iters })
}

/// `ε`-accurate robust Bellman value at state `s`.
pub fn robust_bellman_state(
    inst: &MdpInstance,
    amb: &AmbiguitySpec,
    v: &[f64],
    s: usize,
    cfg: &BellmanConfig,
) -> Result<StateUpdate> {
    cfg.validate()?;
    check_values(inst, v)?;
    if s >= inst.num_states() {
        return Err(Error::Domain(format!("state {s} out of range")));
    }
    bellman_state_impl(inst, amb, v, s, cfg, None)
}

/// The bracket `[lower, upper]` before every bisection step at state `s`.
pub fn bisection_trace(
    inst: &MdpInstance,
    amb: &AmbiguitySpec,
    v: &[f64],
    s: usize,
    cfg: &BellmanConfig,
) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    check_values(inst, v)?;
    let mut trace = Vec::new();
    let update = bellman_state_impl(inst, amb, v, s, cfg, Some(&mut trace))?;
    if trace.last() != Some(&(update.lower, update.upper)) {
        trace.push((update.lower, update.upper));
    }
    Ok(trace)
}

fn bellman_all(inst: &MdpInstance, amb: &AmbiguitySpec, v: &[f64], cfg: &BellmanConfig) -> Result<BellmanResult> {
    let per_state = |s: usize| {
        bellman_state_impl(inst, amb, v, s, cfg, None).map_err(|e| Error::AtState { state: s, source: Box::new(e) })
    };
    let updates: Vec<StateUpdate> = if cfg.threads > 1 {
        (0..inst.num_states()).into_par_iter().map(per_state).collect::<Result<_>>()?
    } else {
        (0..inst.num_states()).map(per_state).collect::<Result<_>>()?
    };
    Ok(BellmanResult {
        values: updates.iter().map(|u| u.value).collect(),
        per_state_bounds: updates.iter().map(|u| (u.lower, u.upper)).collect(),
        projection_calls: updates.iter().map(|u| u.projection_calls).sum(),
    })
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if threads <= 1 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start thread pool: {e}")))?;
    pool.install(f)
}

/// Applies the robust Bellman operator at every state.
pub fn robust_bellman(inst: &MdpInstance, amb: &AmbiguitySpec, v: &[f64], cfg: &BellmanConfig) -> Result<BellmanResult> {
    cfg.validate()?;
    check_values(inst, v)?;
    with_pool(cfg.threads, || bellman_all(inst, amb, v, cfg))
}

pub fn robust_value_iteration(
    inst: &MdpInstance,
    amb: &AmbiguitySpec,
    vi_tol: f64,
    cfg: &BellmanConfig,
) -> Result<VISolution> {
    robust_value_iteration_capped(inst, amb, vi_tol, cfg, DEFAULT_ITERATION_CAP)
}

/// Robust value iteration from `v = 0` until the sup-norm change is at most
/// `vi_tol`.
pub fn robust_value_iteration_capped(
    inst: &MdpInstance,
    amb: &AmbiguitySpec,
    vi_tol: f64,
    cfg: &BellmanConfig,
    cap: usize,
) -> Result<VISolution> {
    cfg.validate()?;
    if !(vi_tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {vi_tol}")));
    }
    with_pool(cfg.threads, || {
        let mut v = vec![0.0; inst.num_states()];
        let mut calls = 0;
        for iteration in 1..=cap {
            let next = bellman_all(inst, amb, &v, cfg)?;
            calls += next.projection_calls;
            let residual = sup_distance(&next.values, &v);
            v = next.values;
            if residual <= vi_tol {
                let objective = inst.initial_dist().iter().zip(&v).map(|(p, x)| p * x).sum();
                return Ok(VISolution { values: v, iterations: iteration, residual, objective, projection_calls: calls });
            }
        }
        Err(Error::NonConvergence { iterations: cap })
    })
}

/// Compares the values at state `s` under budgets `κ` and `κ′ ≥ κ`.
/// Returns the gap `𝔅(v; κ) − 𝔅(v; κ′)` and the bound
/// `(κ′ − κ) max_a ‖r_sa + λv‖∞ / Σ_a d_a`, with the total deviation taken
/// from the run under `κ` (+∞ if it is zero).
pub fn budget_sensitivity_check(
    inst: &MdpInstance,
    amb: &AmbiguitySpec,
    v: &[f64],
    s: usize,
    kappa_prime: f64,
    cfg: &BellmanConfig,
) -> Result<(f64, f64)> {
    if !(kappa_prime >= amb.kappa()) {
        return Err(Error::Domain(format!("κ′ = {kappa_prime} is below κ = {}", amb.kappa())));
    }
    let base = robust_bellman_state(inst, amb, v, s, cfg)?;
    let wider = robust_bellman_state(inst, &amb.with_kappa(kappa_prime)?, v, s, cfg)?;
    let gap = base.value - wider.value;
    let max_cost = (0..inst.num_actions())
        .flat_map(|a| inst.cost_vector(s, a, v))
        .fold(0.0, |m: f64, x| m.max(x.abs()));
    let bound = if base.attained_deviation > 0.0 {
        (kappa_prime - amb.kappa()) * max_cost / base.attained_deviation
    } else {
        f64::INFINITY
    };
    Ok((gap, bound))
}

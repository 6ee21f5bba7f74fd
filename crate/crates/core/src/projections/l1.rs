//! Weighted 1-norm projection.
//!
//! The dual is the univariate concave problem
//! `max_{α ≥ 0} (p̄ᵀb − β)α − p̄ᵀ[bα − min{bα + σ}e − σ]_+`. Its kinks are
//! the breakpoints of the lower envelope `min{bα + σ}` and the roots of the
//! bracketed terms, so it is maximised by walking the merged kinks once.

use std::cmp::Ordering;

use super::{check_feasible, dot, ProjectionQuery, ProjectionResult, SLOPE_TOL};
use crate::ambiguity::AmbiguityKind;
use crate::error::Result;

/// One line of the envelope `min_i {b_i α + σ_i}`, active from
/// `left_breakpoint` up to the next segment's breakpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSegment {
    pub line_index: usize,
    pub left_breakpoint: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl EnvelopeSegment {
    fn at(&self, alpha: f64) -> f64 {
        self.slope * alpha + self.intercept
    }
}

/// Indices sorted by descending `b`, keeping for each slope only the line
/// with the smallest `σ` (lowest index on ties).
fn sorted_lines(b: &[f64], sigma: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by(|&i, &j| b[j].total_cmp(&b[i]));
    let mut kept: Vec<usize> = Vec::with_capacity(order.len());
    for i in order {
        match kept.last_mut() {
            Some(last) if (b[*last] - b[i]).abs() <= SLOPE_TOL => {
                if sigma[i] < sigma[*last] || (sigma[i] == sigma[*last] && i < *last) {
                    *last = i;
                }
            }
            _ => kept.push(i),
        }
    }
    kept
}

/// Segments of the concave envelope `α ↦ min_i {b_i α + σ_i}` in order of
/// increasing `α` (decreasing slope). The first segment starts at `−∞`.
pub fn l1_concave_envelope(b: &[f64], sigma: &[f64]) -> Vec<EnvelopeSegment> {
    let mut hull: Vec<EnvelopeSegment> = Vec::new();
    for j in sorted_lines(b, sigma) {
        let line = EnvelopeSegment {
            line_index: j,
            left_breakpoint: f64::NEG_INFINITY,
            slope: b[j],
            intercept: sigma[j],
        };
        let mut start = f64::NEG_INFINITY;
        while let Some(top) = hull.last() {
            let cross = (line.intercept - top.intercept) / (top.slope - line.slope);
            if cross <= top.left_breakpoint {
                hull.pop();
            } else {
                start = cross;
                break;
            }
        }
        hull.push(EnvelopeSegment { left_breakpoint: start, ..line });
    }
    hull
}

/// Drops segments that end at or before `α = 0`.
pub fn l1_trim_envelope(envelope: &[EnvelopeSegment]) -> Vec<EnvelopeSegment> {
    let first = (0..envelope.len())
        .find(|&k| envelope.get(k + 1).is_none_or(|next| next.left_breakpoint > 0.0))
        .unwrap_or(0);
    envelope[first..].to_vec()
}

/// For every component `s'`, the root on `α > 0` of
/// `b_{s'}α − min{bα + σ} − σ_{s'}`, or `+∞` if there is none. `envelope`
/// must already be trimmed to `α ≥ 0`.
pub fn l1_plus_breakpoints(envelope: &[EnvelopeSegment], b: &[f64], sigma: &[f64]) -> Vec<f64> {
    let n = envelope.len();
    let last = envelope[n - 1];
    (0..b.len())
        .map(|s| {
            let (bs, ss) = (b[s], sigma[s]);
            let root_on = |seg: &EnvelopeSegment| (ss + seg.intercept) / (bs - seg.slope);
            if bs - last.slope <= SLOPE_TOL {
                return f64::INFINITY;
            }
            if n == 1 {
                return root_on(&last);
            }
            if (bs - last.slope) * last.left_breakpoint <= ss + last.intercept {
                return root_on(&last);
            }
            let first = envelope[0];
            if (bs - first.slope) * envelope[1].left_breakpoint >= ss + first.intercept {
                return root_on(&first);
            }
            // Smallest k ≥ 1 whose left breakpoint has a non-negative residual;
            // k = 1 fails and k = n - 1 succeeds here.
            let residual = |k: usize| {
                let seg = &envelope[k];
                bs * seg.left_breakpoint - seg.at(seg.left_breakpoint) - ss
            };
            let (mut lo, mut hi) = (1, n - 1);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if residual(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            root_on(&envelope[hi - 1])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    Root(usize),
    Breakpoint(usize),
}

/// The part of the 1-norm dual that depends only on `(b, σ)`. It can be
/// reused for any nominal row and threshold.
#[derive(Debug, Clone)]
pub struct L1Projector {
    costs: Vec<f64>,
    min_cost: f64,
    envelope: Vec<EnvelopeSegment>,
    events: Vec<(f64, Event)>,
}

impl L1Projector {
    pub fn new(costs: &[f64], sigma: &[f64]) -> Self {
        let envelope = l1_trim_envelope(&l1_concave_envelope(costs, sigma));
        let roots = l1_plus_breakpoints(&envelope, costs, sigma);
        let mut events: Vec<(f64, Event)> = roots
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_finite())
            .map(|(s, &r)| (r, Event::Root(s)))
            .collect();
        events.extend(
            envelope
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, seg)| (seg.left_breakpoint, Event::Breakpoint(k))),
        );
        events.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));
        L1Projector {
            costs: costs.to_vec(),
            min_cost: costs.iter().copied().fold(f64::INFINITY, f64::min),
            envelope,
            events,
        }
    }

    pub fn envelope(&self) -> &[EnvelopeSegment] {
        &self.envelope
    }

    /// Kinks of the dual objective on `α > 0`: every finite root, plus each
    /// envelope breakpoint preceded by at least one root.
    pub fn interior_breakpoint_count(&self) -> usize {
        let mut seen_root = false;
        let mut count = 0;
        for (_, event) in &self.events {
            match event {
                Event::Root(_) => {
                    seen_root = true;
                    count += 1;
                }
                Event::Breakpoint(_) if seen_root => count += 1,
                Event::Breakpoint(_) => {}
            }
        }
        count
    }

    /// Optimal value for nominal row `nominal` and threshold `beta`.
    pub fn value(&self, nominal: &[f64], beta: f64) -> Result<f64> {
        let nominal_cost = dot(nominal, &self.costs);
        if self.min_cost > beta {
            return Err(crate::error::Error::Infeasible { min_cost: self.min_cost, threshold: beta });
        }
        if nominal_cost <= beta {
            return Ok(0.0);
        }
        let grad_fixed = nominal_cost - beta;
        let mut grad_active = 0.0;
        let mut grad_min = self.envelope[0].slope;
        let mut active_mass = 0.0;
        let (mut f, mut alpha) = (0.0, 0.0);
        for &(at, event) in &self.events {
            let slope = grad_fixed - grad_active;
            if slope <= 0.0 {
                return Ok(f);
            }
            f += slope * (at - alpha);
            alpha = at;
            match event {
                Event::Root(s) => {
                    grad_active += nominal[s] * (self.costs[s] - grad_min);
                    active_mass += nominal[s];
                }
                Event::Breakpoint(k) => {
                    let next = self.envelope[k].slope;
                    grad_active -= (next - grad_min) * active_mass;
                    grad_min = next;
                }
            }
        }
        Ok(f)
    }
}

/// Exact weighted 1-norm projection.
pub fn project_l1(q: &ProjectionQuery) -> Result<ProjectionResult> {
    q.validate(AmbiguityKind::WeightedL1)?;
    check_feasible(q)?;
    if q.nominal_cost() <= q.threshold {
        return Ok(ProjectionResult::exact(0.0));
    }
    let value = L1Projector::new(q.costs, q.weights).value(q.nominal, q.threshold)?;
    Ok(ProjectionResult::exact(value))
}

//! Discounted MDP data model with sparse transition rows.

use std::fmt;

use crate::error::{Error, Result};

/// Entries of a value vector, one per state.
pub type ValueVector = Vec<f64>;

pub const ROW_SUM_TOL: f64 = 1e-12;
pub const DEFAULT_ITERATION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Default, PartialEq)]
struct Row {
    probs: Vec<(usize, f64)>,
    rewards: Vec<(usize, f64)>,
}

/// An immutable finite MDP. Rows are indexed by `(s, a)` and store only
/// their support, sorted by successor.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpInstance {
    num_states: usize,
    num_actions: usize,
    discount: f64,
    rows: Vec<Row>,
    initial_dist: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MdpBuilder {
    num_states: usize,
    num_actions: usize,
    discount: f64,
    rows: Vec<Row>,
    initial_dist: Option<Vec<f64>>,
    errors: Vec<String>,
}

impl MdpBuilder {
    pub fn transition(mut self, s: usize, a: usize, next: usize, prob: f64) -> Self {
        if let Some(i) = self.slot(s, a, next, "transition") {
            self.rows[i].probs.push((next, prob));
        }
        self
    }

    pub fn reward(mut self, s: usize, a: usize, next: usize, reward: f64) -> Self {
        if let Some(i) = self.slot(s, a, next, "reward") {
            self.rows[i].rewards.push((next, reward));
        }
        self
    }

    /// Sets `p(s, a, .)` from a dense vector, skipping zeros.
    pub fn row(mut self, s: usize, a: usize, probs: &[f64]) -> Self {
        for (next, &p) in probs.iter().enumerate() {
            if p != 0.0 {
                self = self.transition(s, a, next, p);
            }
        }
        self
    }

    pub fn initial_dist(mut self, dist: Vec<f64>) -> Self {
        self.initial_dist = Some(dist);
        self
    }

    fn slot(&mut self, s: usize, a: usize, next: usize, what: &str) -> Option<usize> {
        if s >= self.num_states || a >= self.num_actions || next >= self.num_states {
            self.errors
                .push(format!("{what} ({s},{a},{next}) is out of range"));
            return None;
        }
        Some(s * self.num_actions + a)
    }

    pub fn build(self) -> Result<MdpInstance> {
        let mut errors = self.errors;
        if self.num_states == 0 || self.num_actions == 0 {
            errors.push("instance needs at least one state and one action".into());
        }
        let s_count = self.num_states;
        let a_count = self.num_actions.max(1);
        let initial_dist = self
            .initial_dist
            .unwrap_or_else(|| vec![1.0 / s_count.max(1) as f64; s_count]);
        if initial_dist.len() != s_count {
            errors.push(format!(
                "initial distribution has length {}, expected {s_count}",
                initial_dist.len()
            ));
        }
        let mut rows = self.rows;
        for (i, row) in rows.iter_mut().enumerate() {
            for (kind, entries) in [("transition", &mut row.probs), ("reward", &mut row.rewards)] {
                entries.sort_by_key(|e| e.0);
                if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
                    errors.push(format!(
                        "duplicate {kind} ({},{},{})",
                        i / a_count,
                        i % a_count,
                        w[0].0
                    ));
                }
            }
        }
        if let Some(first) = errors.into_iter().next() {
            return Err(Error::InvalidInstance(first));
        }
        Ok(MdpInstance {
            num_states: self.num_states,
            num_actions: self.num_actions,
            discount: self.discount,
            rows,
            initial_dist,
        })
    }
}

impl MdpInstance {
    pub fn builder(num_states: usize, num_actions: usize, discount: f64) -> MdpBuilder {
        MdpBuilder {
            num_states,
            num_actions,
            discount,
            rows: vec![Row::default(); num_states * num_actions],
            initial_dist: None,
            errors: Vec::new(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    fn row(&self, s: usize, a: usize) -> &Row {
        &self.rows[s * self.num_actions + a]
    }

    /// Stored `(s', p)` pairs of row `(s, a)`, sorted by `s'`.
    pub fn transitions(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.row(s, a).probs
    }

    /// Stored `(s', r)` pairs of row `(s, a)`, sorted by `s'`.
    pub fn rewards(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.row(s, a).rewards
    }

    pub fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        let rewards = &self.row(s, a).rewards;
        rewards
            .binary_search_by_key(&next, |e| e.0)
            .map(|i| rewards[i].1)
            .unwrap_or(0.0)
    }

    pub fn nominal_row(&self, s: usize, a: usize) -> Vec<f64> {
        let mut dense = vec![0.0; self.num_states];
        for &(next, p) in self.transitions(s, a) {
            dense[next] = p;
        }
        dense
    }

    /// Writes `r(s, a, .) + λ v` into `out`.
    pub fn cost_vector_into(&self, s: usize, a: usize, v: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(v.iter().map(|&x| self.discount * x));
        for &(next, r) in self.rewards(s, a) {
            out[next] += r;
        }
    }

    pub fn cost_vector(&self, s: usize, a: usize, v: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_states);
        self.cost_vector_into(s, a, v, &mut out);
        out
    }

    /// `p̄(s, a)ᵀ (r(s, a) + λ v)`.
    pub fn nominal_action_value(&self, s: usize, a: usize, v: &[f64]) -> f64 {
        let row = self.row(s, a);
        let mut rewards = row.rewards.iter().peekable();
        let mut total = 0.0;
        for &(next, p) in &row.probs {
            while rewards.next_if(|e| e.0 < next).is_some() {}
            let r = rewards.next_if(|e| e.0 == next).map_or(0.0, |e| e.1);
            total += p * (r + self.discount * v[next]);
        }
        total
    }

    pub fn max_reward(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|row| row.rewards.iter().map(|e| e.1))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Instance,
    InitialDist,
    Row { s: usize, a: usize },
    Reward { s: usize, a: usize, next: usize },
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Instance => write!(f, "instance"),
            Location::InitialDist => write!(f, "initial distribution"),
            Location::Row { s, a } => write!(f, "row ({s},{a})"),
            Location::Reward { s, a, next } => write!(f, "reward ({s},{a},{next})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub location: Location,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

pub fn validate_instance(inst: &MdpInstance) -> ValidationReport {
    let mut issues = Vec::new();
    let mut push = |location: Location, description: String| {
        issues.push(Issue { location, description })
    };
    let lambda = inst.discount;
    if !(lambda > 0.0 && lambda < 1.0) {
        push(
            Location::Instance,
            format!("discount not in open interval (0,1): {lambda}"),
        );
    }
    let initial = &inst.initial_dist;
    if initial.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        push(Location::InitialDist, "initial distribution has a negative or non-finite entry".into());
    }
    let total: f64 = initial.iter().sum();
    if (total - 1.0).abs() > ROW_SUM_TOL {
        push(Location::InitialDist, format!("initial distribution sums to {total}"));
    }
    for s in 0..inst.num_states {
        for a in 0..inst.num_actions {
            let loc = Location::Row { s, a };
            let row = inst.row(s, a);
            if row.probs.iter().any(|e| !(e.1 >= 0.0) || !e.1.is_finite()) {
                push(loc, format!("row ({s},{a}) has a negative or non-finite probability"));
            }
            let sum: f64 = row.probs.iter().map(|e| e.1).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                push(loc, format!("row ({s},{a}) sums to {sum}"));
            }
            for &(next, r) in &row.rewards {
                if !(r >= 0.0) || !r.is_finite() {
                    push(
                        Location::Reward { s, a, next },
                        format!("reward ({s},{a},{next}) = {r} is not a non-negative finite number"),
                    );
                }
            }
        }
    }
    ValidationReport { ok: issues.is_empty(), issues }
}

/// `max r / (1 − λ)`.
pub fn upper_reward_bound(inst: &MdpInstance) -> f64 {
    inst.max_reward() / (1.0 - inst.discount)
}

/// `max_a min_{s'} { r(s,a,s') + λ v(s') }` over the full state space.
pub fn state_lower_bound(inst: &MdpInstance, v: &[f64], s: usize) -> f64 {
    let mut buf = Vec::with_capacity(inst.num_states);
    (0..inst.num_actions)
        .map(|a| {
            inst.cost_vector_into(s, a, v, &mut buf);
            buf.iter().copied().fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn nominal_bellman(inst: &MdpInstance, v: &[f64]) -> ValueVector {
    (0..inst.num_states)
        .map(|s| {
            (0..inst.num_actions)
                .map(|a| inst.nominal_action_value(s, a, v))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

pub(crate) fn sup_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

pub fn nominal_value_iteration(inst: &MdpInstance, tol: f64) -> Result<(ValueVector, usize)> {
    nominal_value_iteration_capped(inst, tol, DEFAULT_ITERATION_CAP)
}

pub fn nominal_value_iteration_capped(
    inst: &MdpInstance,
    tol: f64,
    cap: usize,
) -> Result<(ValueVector, usize)> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut v = vec![0.0; inst.num_states];
    for iteration in 1..=cap {
        let next = nominal_bellman(inst, &v);
        let change = sup_distance(&next, &v);
        v = next;
        if change <= tol {
            return Ok((v, iteration));
        }
    }
    Err(Error::NonConvergence { iterations: cap })
}

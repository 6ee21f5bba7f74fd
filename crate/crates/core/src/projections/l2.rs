//! Squared weighted 2-norm projection.
//!
//! The optimality conditions reduce to the two equations
//! `Σ σ⁻²[−bα + γ + 2σ²p̄]_+ = 2` and `Σ bσ⁻²[−bα + γ + 2σ²p̄]_+ = 2β`.
//! The first one is solved for every `α` at once as a piecewise affine path
//! `γ*(α)`; the second is then affine on each piece of that path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_feasible, ProjectionQuery, ProjectionResult, SLOPE_TOL};
use crate::ambiguity::AmbiguityKind;
use crate::error::{Error, Result};

const COINCIDENCE_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-12;
const MAX_RETRIES: usize = 5;
const JITTER: f64 = 1e-9;
const PERTURB_SEED: u64 = 0x12_2a5e;

/// Piece of `γ*(α) = slope·α + intercept`, valid from `left_breakpoint`
/// up to the previous piece's breakpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSegment {
    pub left_breakpoint: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl PathSegment {
    pub fn at(&self, alpha: f64) -> f64 {
        self.slope * alpha + self.intercept
    }
}

/// Pieces ordered right to left; the first piece extends to `+∞`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PiecewiseLinearPath {
    segments: Vec<PathSegment>,
}

impl PiecewiseLinearPath {
    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Right end of piece `t`.
    pub fn right_breakpoint(&self, t: usize) -> f64 {
        if t == 0 {
            f64::INFINITY
        } else {
            self.segments[t - 1].left_breakpoint
        }
    }

    /// Index of the piece containing `alpha`.
    pub fn segment_index(&self, alpha: f64) -> usize {
        self.segments
            .iter()
            .position(|seg| alpha >= seg.left_breakpoint)
            .unwrap_or(self.segments.len() - 1)
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        self.segments[self.segment_index(alpha)].at(alpha)
    }

    /// Largest jump between neighbouring pieces at their shared breakpoint.
    pub fn max_discontinuity(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| (w[0].at(w[0].left_breakpoint) - w[1].at(w[0].left_breakpoint)).abs())
            .fold(0.0, f64::max)
    }
}

/// Residual `aᵀ[−bα + γe + c]_+ − ρ`.
pub fn path_residual(a: &[f64], b: &[f64], c: &[f64], rho: f64, alpha: f64, gamma: f64) -> f64 {
    let total: f64 = (0..a.len())
        .map(|s| a[s] * (-b[s] * alpha + gamma + c[s]).max(0.0))
        .sum();
    total - rho
}

/// Components with identical `(b, c)` merged by summing their `a`.
struct Merged {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

fn merge_duplicates(a: &[f64], b: &[f64], c: &[f64]) -> Merged {
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| b[i].total_cmp(&b[j]).then(c[j].total_cmp(&c[i])));
    let mut out = Merged { a: Vec::new(), b: Vec::new(), c: Vec::new() };
    for i in order {
        if out.b.last() == Some(&b[i]) && out.c.last() == Some(&c[i]) {
            *out.a.last_mut().unwrap() += a[i];
        } else {
            out.a.push(a[i]);
            out.b.push(b[i]);
            out.c.push(c[i]);
        }
    }
    out
}

fn slope_tol(x: f64) -> f64 {
    SLOPE_TOL * x.abs().max(1.0)
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= COINCIDENCE_TOL * x.abs().max(y.abs()).max(1.0)
}

impl Merged {
    /// Slope and intercept of `γ` for active set `active`.
    fn affine(&self, active: &[bool], rho: f64) -> (f64, f64) {
        let reference = active.iter().position(|&x| x).map_or(0.0, |s| self.b[s]);
        let (mut sa, mut sab, mut sac) = (0.0, 0.0, 0.0);
        for s in (0..self.a.len()).filter(|&s| active[s]) {
            sa += self.a[s];
            sab += self.a[s] * (self.b[s] - reference);
            sac += self.a[s] * self.c[s];
        }
        (reference + sab / sa, (rho - sac) / sa)
    }

    /// Active set for `α → +∞`: the cheapest components, water-filled by `c`.
    /// Components are sorted by ascending `b` then descending `c`.
    fn initial_active(&self, rho: f64) -> Vec<bool> {
        let n = self.a.len();
        let mut active = vec![false; n];
        let floor = self.b[0];
        let (mut sa, mut sac) = (0.0, 0.0);
        for s in 0..n {
            if self.b[s] - floor > slope_tol(floor) {
                break;
            }
            if sa > 0.0 && self.c[s] + (rho - sac) / sa <= 0.0 {
                break;
            }
            active[s] = true;
            sa += self.a[s];
            sac += self.a[s] * self.c[s];
        }
        active
    }

    /// Where component `s` meets `γ = mα + v`.
    fn crossing(&self, s: usize, m: f64, v: f64) -> f64 {
        (self.c[s] + v) / (self.b[s] - m)
    }
}

fn check_path_inputs(a: &[f64], b: &[f64], c: &[f64], rho: f64) -> Result<()> {
    let n = a.len();
    if n == 0 || b.len() != n || c.len() != n {
        return Err(Error::Domain("path inputs must be non-empty and of equal length".into()));
    }
    if a.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain("path weights a must be positive".into()));
    }
    if b.iter().chain(c).any(|x| !x.is_finite()) {
        return Err(Error::Domain("path coefficients must be finite".into()));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho must be positive, got {rho}")));
    }
    Ok(())
}

/// Complete solution path of `aᵀ[−bα + γe + c]_+ = ρ` over all real `α`,
/// traced from `+∞` to `−∞` by toggling one component per breakpoint.
pub fn l2_solution_path(a: &[f64], b: &[f64], c: &[f64], rho: f64) -> Result<PiecewiseLinearPath> {
    check_path_inputs(a, b, c, rho)?;
    let merged = merge_duplicates(a, b, c);
    let n = merged.a.len();
    let mut active = merged.initial_active(rho);
    let mut segments = Vec::new();
    let mut right = f64::INFINITY;
    for _ in 0..=2 * n + 1 {
        let (m, v) = merged.affine(&active, rho);
        let mut roots: Vec<(f64, usize)> = Vec::new();
        for s in 0..n {
            let gap = merged.b[s] - m;
            let candidate = if active[s] { -gap > slope_tol(m) } else { gap > slope_tol(m) };
            if !candidate {
                continue;
            }
            let root = merged.crossing(s, m, v);
            if root >= right || (right.is_finite() && close(root, right)) {
                return Err(Error::RegularityViolation(format!(
                    "component {s} vanishes at the previous breakpoint {right}"
                )));
            }
            roots.push((root, s));
        }
        let best = roots.iter().copied().reduce(|x, y| if y.0 > x.0 { y } else { x });
        let tie = best.is_some_and(|(r, s)| roots.iter().any(|&(q, t)| t != s && close(q, r)));
        match best {
            None => {
                segments.push(PathSegment { left_breakpoint: f64::NEG_INFINITY, slope: m, intercept: v });
                return Ok(PiecewiseLinearPath { segments });
            }
            Some((alpha, s)) => {
                if tie {
                    return Err(Error::RegularityViolation(format!(
                        "two components vanish simultaneously at alpha = {alpha}"
                    )));
                }
                segments.push(PathSegment { left_breakpoint: alpha, slope: m, intercept: v });
                active[s] = !active[s];
                right = alpha;
            }
        }
    }
    Err(Error::RegularityViolation("path exceeded 2S pieces".into()))
}

/// Solution path restricted to `α ≥ 0` for the first optimality equation,
/// where `c ≥ 0` and `Σ a c ≤ ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPath {
    pub path: PiecewiseLinearPath,
    /// `|{s : b_s > m_t}|` for each piece `t`.
    pub support_sizes: Vec<usize>,
}

/// Like [`l2_solution_path`] but only on `α ≥ 0`: components only ever
/// enter the active set, and only those with `b_s > m_t` are searched. The
/// last piece starts at `α = 0`. Simultaneous entries are resolved by
/// admitting the largest prefix (by descending `b`) that stays above the
/// updated slope.
pub fn l2_solution_path_reduced(a: &[f64], b: &[f64], c: &[f64], rho: f64) -> Result<ReducedPath> {
    check_path_inputs(a, b, c, rho)?;
    if c.iter().any(|&x| x < 0.0) {
        return Err(Error::Domain("reduced path needs c ≥ 0".into()));
    }
    let merged = merge_duplicates(a, b, c);
    let n = merged.a.len();
    let mut active = merged.initial_active(rho);
    let mut segments = Vec::new();
    let mut support_sizes = Vec::new();
    let mut right = f64::INFINITY;
    for _ in 0..=n {
        let (m, v) = merged.affine(&active, rho);
        let above: Vec<usize> = (0..n).filter(|&s| merged.b[s] - m > slope_tol(m)).collect();
        support_sizes.push(above.len());
        let mut entering: Vec<(f64, usize)> = above
            .iter()
            .filter(|&&s| !active[s])
            .map(|&s| (merged.crossing(s, m, v).min(right), s))
            .filter(|&(root, _)| root > COINCIDENCE_TOL)
            .collect();
        let Some(alpha) = entering.iter().map(|e| e.0).reduce(f64::max) else {
            segments.push(PathSegment { left_breakpoint: 0.0, slope: m, intercept: v });
            return Ok(ReducedPath { path: PiecewiseLinearPath { segments }, support_sizes });
        };
        segments.push(PathSegment { left_breakpoint: alpha, slope: m, intercept: v });
        entering.retain(|e| close(e.0, alpha));
        entering.sort_by(|x, y| merged.b[y.1].total_cmp(&merged.b[x.1]));
        let mut trial = active.clone();
        let mut admitted = 0;
        for (k, &(_, s)) in entering.iter().enumerate() {
            trial[s] = true;
            let (m_next, _) = merged.affine(&trial, rho);
            if merged.b[s] - m_next > 0.0 || k == 0 {
                admitted = k + 1;
            } else {
                break;
            }
        }
        for &(_, s) in &entering[..admitted] {
            active[s] = true;
        }
        right = alpha;
    }
    Err(Error::RegularityViolation("reduced path exceeded S pieces".into()))
}

/// Solves the second optimality equation on the reduced path of the first.
/// Returns `(α*, γ*)` with `α* ≥ 0`.
pub fn l2_solve_system(
    path: &PiecewiseLinearPath,
    b: &[f64],
    sigma: &[f64],
    nominal: &[f64],
    beta: f64,
) -> Result<(f64, f64)> {
    let a: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let c: Vec<f64> = sigma.iter().zip(nominal).map(|(s, p)| 2.0 * s * s * p).collect();
    solve_system_abc(path, &a, b, &c, beta)
}

fn solve_system_abc(path: &PiecewiseLinearPath, a: &[f64], b: &[f64], c: &[f64], beta: f64) -> Result<(f64, f64)> {
    let target = 2.0 * beta;
    let tol = RESIDUAL_TOL * target.abs().max(1.0);
    for (t, seg) in path.segments().iter().enumerate() {
        let right = path.right_breakpoint(t);
        if right <= 0.0 {
            break;
        }
        let left = seg.left_breakpoint.max(0.0);
        let probe = if right.is_finite() { 0.5 * (left + right) } else { left + 1.0 };
        let gamma_probe = seg.at(probe);
        let (mut slope, mut offset) = (0.0, 0.0);
        for s in 0..a.len() {
            if -b[s] * probe + gamma_probe + c[s] > 0.0 {
                slope += a[s] * b[s] * (seg.slope - b[s]);
                offset += a[s] * b[s] * (seg.intercept + c[s]);
            }
        }
        let at_left = slope * left + offset;
        if at_left < target - tol {
            continue;
        }
        let alpha = if slope.abs() <= SLOPE_TOL * offset.abs().max(1.0) {
            left
        } else {
            ((target - offset) / slope).clamp(left, right)
        };
        return Ok((alpha, seg.at(alpha)));
    }
    Err(Error::NoRoot)
}

/// Dual objective `−βα + γ + p̄ᵀm − ¼‖σ⁻¹m‖²` with `m = min{bα − γe, 2σ²p̄}`.
pub fn l2_dual_value(b: &[f64], sigma: &[f64], nominal: &[f64], beta: f64, alpha: f64, gamma: f64) -> f64 {
    let mut value = -beta * alpha + gamma;
    for s in 0..b.len() {
        let cap = 2.0 * sigma[s] * sigma[s] * nominal[s];
        let m = (b[s] * alpha - gamma).min(cap);
        value += nominal[s] * m - 0.25 * m * m / (sigma[s] * sigma[s]);
    }
    value
}

fn dual_value_abc(a: &[f64], b: &[f64], c: &[f64], beta: f64, alpha: f64, gamma: f64) -> f64 {
    let mut value = -beta * alpha + gamma;
    for s in 0..a.len() {
        let m = (b[s] * alpha - gamma).min(c[s]);
        value += 0.5 * a[s] * c[s] * m - 0.25 * a[s] * m * m;
    }
    value
}

fn jitter_entries(values: &[f64], jitter: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    values
        .iter()
        .map(|&x| (x + rng.random_range(-jitter..=jitter)).max(0.0))
        .collect()
}

fn all_distinct(b: &[f64]) -> bool {
    let mut sorted = b.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).all(|w| w[1] - w[0] > 1e-12)
}

/// Adds uniform noise in `[−jitter, jitter]` to `b` and `c` until all entries
/// of `b` differ by more than 1e-12. Distinct inputs are returned unchanged.
/// Entries are kept non-negative.
pub fn perturb_for_regularity(
    a: &[f64],
    b: &[f64],
    c: &[f64],
    rho: f64,
    jitter: f64,
    seed: u64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out_b = b.to_vec();
    let mut out_c = c.to_vec();
    while !all_distinct(&out_b) {
        out_b = jitter_entries(b, jitter, &mut rng);
        out_c = jitter_entries(c, jitter, &mut rng);
    }
    (a.to_vec(), out_b, out_c, rho)
}

/// The reduced path of the first optimality equation for fixed `(p̄, σ, b)`,
/// reusable across thresholds.
#[derive(Debug, Clone)]
pub struct L2Projector {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    nominal_cost: f64,
    min_cost: f64,
    path: PiecewiseLinearPath,
}

impl L2Projector {
    pub fn new(nominal: &[f64], sigma: &[f64], costs: &[f64]) -> Result<Self> {
        let a: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
        let c: Vec<f64> = sigma.iter().zip(nominal).map(|(s, p)| 2.0 * s * s * p).collect();
        let mut b = costs.to_vec();
        let mut c_used = c.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(PERTURB_SEED);
        let mut attempt = 0;
        let path = loop {
            match l2_solution_path_reduced(&a, &b, &c_used, 2.0) {
                Ok(reduced) => break reduced.path,
                Err(Error::RegularityViolation(_)) if attempt < MAX_RETRIES => {
                    attempt += 1;
                    b = jitter_entries(costs, JITTER, &mut rng);
                    c_used = jitter_entries(&c, JITTER, &mut rng);
                }
                Err(e) => return Err(e),
            }
        };
        let nominal_cost = costs.iter().zip(nominal).map(|(b, p)| b * p).sum();
        let min_cost = costs.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(L2Projector { a, b, c: c_used, nominal_cost, min_cost, path })
    }

    pub fn path(&self) -> &PiecewiseLinearPath {
        &self.path
    }

    /// Optimal multipliers `(α*, γ*)` for threshold `beta`.
    pub fn multipliers(&self, beta: f64) -> Result<(f64, f64)> {
        solve_system_abc(&self.path, &self.a, &self.b, &self.c, beta)
    }

    pub fn value(&self, beta: f64) -> Result<f64> {
        if self.min_cost > beta {
            return Err(Error::Infeasible { min_cost: self.min_cost, threshold: beta });
        }
        if self.nominal_cost <= beta {
            return Ok(0.0);
        }
        let (alpha, gamma) = self.multipliers(beta)?;
        Ok(dual_value_abc(&self.a, &self.b, &self.c, beta, alpha, gamma).max(0.0))
    }

    /// Minimiser `p = ½σ⁻²[−αb + γ + 2σ²p̄]_+` for threshold `beta`.
    pub fn primal(&self, beta: f64) -> Result<Vec<f64>> {
        let (alpha, gamma) = self.multipliers(beta)?;
        Ok((0..self.a.len())
            .map(|s| 0.5 * self.a[s] * (-alpha * self.b[s] + gamma + self.c[s]).max(0.0))
            .collect())
    }
}

/// Exact squared weighted 2-norm projection.
pub fn project_l2(q: &ProjectionQuery) -> Result<ProjectionResult> {
    q.validate(AmbiguityKind::WeightedL2)?;
    check_feasible(q)?;
    if q.nominal_cost() <= q.threshold {
        return Ok(ProjectionResult::exact(0.0));
    }
    let value = L2Projector::new(q.nominal, q.weights, q.costs)?.value(q.threshold)?;
    Ok(ProjectionResult::exact(value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{oracle_projection, GridSpec};
    use crate::projections::dot;

    fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().ln()).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|x| x / total).collect()
    }

    fn check_residuals(path: &PiecewiseLinearPath, a: &[f64], b: &[f64], c: &[f64], rho: f64, lo: f64, hi: f64) {
        for i in 0..=1000 {
            let alpha = lo + (hi - lo) * i as f64 / 1000.0;
            let r = path_residual(a, b, c, rho, alpha, path.eval(alpha));
            assert!(r.abs() <= 1e-9 * rho.max(1.0), "residual {r} at {alpha}");
        }
    }

    #[test]
    fn single_component_path() {
        let path = l2_solution_path(&[1.0], &[1.0], &[0.0], 2.0).unwrap();
        assert_eq!(path.segments(), &[PathSegment { left_breakpoint: f64::NEG_INFINITY, slope: 1.0, intercept: 2.0 }]);
    }

    #[test]
    fn two_component_path_residuals() {
        let (a, b, c) = ([1.0, 1.0], [2.0 + 3e-10, 1.0 - 1e-10], [2e-10, 1e-10]);
        let path = l2_solution_path(&a, &b, &c, 1.0).unwrap();
        assert!(path.len() <= 4);
        check_residuals(&path, &a, &b, &c, 1.0, -20.0, 20.0);
    }

    #[test]
    fn degenerate_instance_path() {
        let reduced = l2_solution_path_reduced(&[1.0, 1.0], &[0.75, 0.25], &[1.0, 1.0], 2.0).unwrap();
        let segs = reduced.path.segments();
        assert_eq!(segs.len(), 2);
        assert_eq!((segs[0].left_breakpoint, segs[0].slope, segs[0].intercept), (4.0, 0.25, 1.0));
        assert_eq!(segs[1].left_breakpoint, 0.0);
        let (alpha, gamma) = l2_solve_system(&reduced.path, &[0.75, 0.25], &[1.0, 1.0], &[0.5, 0.5], 0.25).unwrap();
        assert!(alpha >= 4.0);
        assert!((gamma - (alpha / 4.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_instance_value_is_unique() {
        let (b, sigma, nominal) = ([0.75, 0.25], [1.0, 1.0], [0.5, 0.5]);
        let values: Vec<f64> = [4.0, 6.0, 10.0]
            .iter()
            .map(|&alpha| l2_dual_value(&b, &sigma, &nominal, 0.25, alpha, alpha / 4.0 + 1.0))
            .collect();
        for v in &values {
            assert!((v - 0.5).abs() < 1e-12);
        }
        let q = ProjectionQuery::new(&nominal, &sigma, &b, 0.25);
        assert!((project_l2(&q).unwrap().lower - values[0]).abs() < 1e-9);
    }

    #[test]
    fn random_paths_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(2..=12);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
            let rho = rng.random_range(0.5..3.0);
            let path = l2_solution_path(&a, &b, &c, rho).unwrap();
            assert!(path.len() <= 2 * n);
            for w in path.segments().windows(2) {
                assert!(w[0].left_breakpoint > w[1].left_breakpoint);
                assert!(w[0].slope <= w[1].slope + 1e-12);
            }
            assert!(path.max_discontinuity() <= 1e-9);
            check_residuals(&path, &a, &b, &c, rho, -30.0, 30.0);
        }
    }

    #[test]
    fn reduced_path_agrees_with_full_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let n = rng.random_range(2..=12);
            let sigma: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
            let nominal = random_simplex(&mut rng, n);
            let a: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
            let c: Vec<f64> = (0..n).map(|s| 2.0 * sigma[s] * sigma[s] * nominal[s]).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
            let full = l2_solution_path(&a, &b, &c, 2.0).unwrap();
            let reduced = l2_solution_path_reduced(&a, &b, &c, 2.0).unwrap();
            let positive: Vec<&PathSegment> = full.segments().iter().take_while(|s| s.left_breakpoint > 0.0).collect();
            let segs = reduced.path.segments();
            assert_eq!(segs.len(), positive.len() + 1);
            for (x, y) in segs.iter().zip(&full.segments()[..segs.len()]) {
                assert!((x.slope - y.slope).abs() <= 1e-12 && (x.intercept - y.intercept).abs() <= 1e-12);
            }
            for (x, y) in segs.iter().zip(&positive) {
                assert!((x.left_breakpoint - y.left_breakpoint).abs() <= 1e-9 * y.left_breakpoint.max(1.0));
            }
            assert!(segs.iter().all(|s| s.intercept >= -1e-15));
            assert!(reduced.support_sizes.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn system_residuals_are_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let n = rng.random_range(2..=10);
            let sigma: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
            let nominal = random_simplex(&mut rng, n);
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
            let min_b = b.iter().copied().fold(f64::INFINITY, f64::min);
            let beta = min_b + rng.random::<f64>() * (dot(&nominal, &b) - min_b);
            let proj = L2Projector::new(&nominal, &sigma, &b).unwrap();
            let (alpha, gamma) = proj.multipliers(beta).unwrap();
            let a: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
            let c: Vec<f64> = (0..n).map(|s| 2.0 * sigma[s] * sigma[s] * nominal[s]).collect();
            let ab: Vec<f64> = (0..n).map(|s| a[s] * b[s]).collect();
            assert!(path_residual(&a, &b, &c, 2.0, alpha, gamma).abs() <= 1e-9);
            assert!(path_residual(&ab, &b, &c, 2.0 * beta, alpha, gamma).abs() <= 1e-9);
            let p = proj.primal(beta).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(dot(&p, &b) <= beta + 1e-9);
        }
    }

    #[test]
    fn tied_costs_are_handled() {
        let nominal = [0.3, 0.3, 0.2, 0.2, 0.0, 0.0];
        let sigma = [1.0; 6];
        let b = [1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let q = ProjectionQuery::new(&nominal, &sigma, &b, 0.3);
        let fast = project_l2(&q).unwrap().lower;
        // Mass 0.3 moves from the two expensive states to the four cheap ones.
        let expected = 2.0 * 0.15f64.powi(2) + 4.0 * 0.075f64.powi(2);
        assert!((fast - expected).abs() < 1e-12, "{fast} vs {expected}");
    }

    #[test]
    fn perturbation_examples() {
        let (a, b, c) = ([1.0, 1.0], [0.3, 0.7], [0.1, 0.2]);
        let (pa, pb, pc, rho) = perturb_for_regularity(&a, &b, &c, 2.0, 1e-6, 1);
        assert_eq!((pa, pb, pc, rho), (a.to_vec(), b.to_vec(), c.to_vec(), 2.0));
        let (_, pb, pc, _) = perturb_for_regularity(&a, &[1.0, 1.0], &c, 2.0, 1e-6, 1);
        assert!((pb[0] - pb[1]).abs() > 1e-12 && (pb[0] - pb[1]).abs() <= 2e-6);
        assert!(pb.iter().all(|x| (x - 1.0).abs() <= 1e-6));
        assert!(pc.iter().zip(&c).all(|(x, y)| (x - y).abs() <= 1e-6));
    }

    #[test]
    fn matches_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let grid = GridSpec::default().doubled_refinement();
        for _ in 0..40 {
            let n = rng.random_range(2..=4);
            let nominal = random_simplex(&mut rng, n);
            let sigma: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let min_b = b.iter().copied().fold(f64::INFINITY, f64::min);
            let beta = min_b + rng.random::<f64>() * (dot(&nominal, &b) - min_b);
            let q = ProjectionQuery::new(&nominal, &sigma, &b, beta);
            let fast = project_l2(&q).unwrap().lower;
            let slow = oracle_projection(AmbiguityKind::WeightedL2, &q, &grid).unwrap();
            assert!(fast <= slow + 1e-9, "{fast} > {slow}");
            assert!(slow - fast <= 1e-5, "{fast} vs {slow}");
        }
    }
}

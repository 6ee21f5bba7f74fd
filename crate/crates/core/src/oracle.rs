//! Brute-force reference solvers for small problems.
//!
//! Both oracles search a lattice over free coordinates in a unit box, keep
//! the best feasible point, and refine the lattice in a shrinking box around
//! it. At each scale the box is
//! re-centred on the incumbent until it stops moving.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ambiguity::{deviation, AmbiguityKind, AmbiguitySpec};
use crate::error::{Error, Result};
use crate::mdp::MdpInstance;
use crate::projections::ProjectionQuery;

const REMAINDER_CLAMP: f64 = 1e-14;
const MAX_RECENTRES: usize = 64;
const CONCAVITY_SEED: u64 = 0x5eed;
const LEVEL_BISECTIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub initial_divisions: usize,
    pub refinement_rounds: usize,
    pub shrink_factor: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { initial_divisions: 50, refinement_rounds: 6, shrink_factor: 0.2 }
    }
}

impl GridSpec {
    pub fn new(initial_divisions: usize, refinement_rounds: usize, shrink_factor: f64) -> Result<Self> {
        if initial_divisions < 10 || refinement_rounds < 2 || !(shrink_factor > 0.0 && shrink_factor < 1.0) {
            return Err(Error::Domain(format!(
                "invalid grid: divisions {initial_divisions}, rounds {refinement_rounds}, shrink {shrink_factor}"
            )));
        }
        Ok(GridSpec { initial_divisions, refinement_rounds, shrink_factor })
    }

    pub fn doubled_refinement(self) -> Self {
        GridSpec { refinement_rounds: 2 * self.refinement_rounds, ..self }
    }

    pub fn doubled_divisions(self) -> Self {
        GridSpec { initial_divisions: 2 * self.initial_divisions, ..self }
    }
}

/// Lattice search over the box `[0, 1]^coords`, refined in a shrinking box
/// around the incumbent. With `group > 0`, consecutive runs of `group`
/// coordinates summing past one are pruned. `eval` returns `None` for
/// infeasible points.
struct Lattice<'f> {
    coords: usize,
    group: usize,
    eval: &'f mut dyn FnMut(&[f64]) -> Option<f64>,
    best: f64,
    best_point: Vec<f64>,
}

impl Lattice<'_> {
    fn offer(&mut self, point: &[f64]) {
        if let Some(value) = (self.eval)(point) {
            if value < self.best {
                self.best = value;
                self.best_point.copy_from_slice(point);
            }
        }
    }

    /// One pass with `divisions` steps per coordinate inside `[lo, hi]`.
    fn sweep(&mut self, lo: &[f64], hi: &[f64], divisions: usize) {
        let mut point = vec![0.0; self.coords];
        self.recurse(0, 0.0, lo, hi, divisions, &mut point);
    }

    fn recurse(&mut self, k: usize, partial: f64, lo: &[f64], hi: &[f64], n: usize, point: &mut [f64]) {
        if k == self.coords {
            self.offer(point);
            return;
        }
        let step = (hi[k] - lo[k]) / n as f64;
        for i in 0..=n {
            let x = if i == n { hi[k] } else { lo[k] + step * i as f64 };
            let sum = partial + x;
            if self.group > 0 && sum > 1.0 + REMAINDER_CLAMP {
                break;
            }
            point[k] = x;
            let closes_group = self.group > 0 && (k + 1) % self.group == 0;
            self.recurse(k + 1, if closes_group { 0.0 } else { sum }, lo, hi, n, point);
            if step == 0.0 {
                break;
            }
        }
    }

    fn run(&mut self, grid: &GridSpec) {
        let m = self.coords;
        if m == 0 {
            self.offer(&[]);
            return;
        }
        let n = grid.initial_divisions;
        self.sweep(&vec![0.0; m], &vec![1.0; m], n);
        let mut half = 0.5;
        for _ in 1..grid.refinement_rounds {
            half *= grid.shrink_factor;
            for _ in 0..MAX_RECENTRES {
                if !self.best.is_finite() {
                    break;
                }
                let lo: Vec<f64> = self.best_point.iter().map(|c| (c - half).max(0.0)).collect();
                let hi: Vec<f64> = self.best_point.iter().map(|c| (c + half).min(1.0)).collect();
                let before = self.best;
                self.sweep(&lo, &hi, n);
                if self.best >= before {
                    break;
                }
            }
        }
    }
}

/// Smallest deviation over `{p ∈ Δ : bᵀp ≤ β}`. When p̄ is infeasible the
/// optimum lies on `bᵀp = β`, so the lattice covers that face: the most and
/// least expensive coordinates are solved from the two equalities, and each
/// remaining coordinate is scaled by the largest value it can take on the
/// face.
pub fn oracle_projection(kind: AmbiguityKind, q: &ProjectionQuery, grid: &GridSpec) -> Result<f64> {
    let n = q.nominal.len();
    let min_cost = q.costs.iter().copied().fold(f64::INFINITY, f64::min);
    if min_cost > q.threshold {
        return Err(Error::Infeasible { min_cost, threshold: q.threshold });
    }
    let nominal_cost: f64 = q.nominal.iter().zip(q.costs).map(|(p, b)| p * b).sum();
    if nominal_cost <= q.threshold {
        return Ok(0.0);
    }
    let b = q.costs;
    let argext = |better: fn(f64, f64) -> bool| {
        (0..n).fold(0, |best, i| if better(b[i], b[best]) { i } else { best })
    };
    let hi_idx = argext(|x, y| x > y);
    let lo_idx = argext(|x, y| x < y);
    let free: Vec<usize> = (0..n).filter(|&i| i != hi_idx && i != lo_idx).collect();
    let scale: Vec<f64> = free
        .iter()
        .map(|&i| {
            let below = (q.threshold - b[lo_idx]) / (b[i] - b[lo_idx]);
            let above = (b[hi_idx] - q.threshold) / (b[hi_idx] - b[i]);
            [below, above].into_iter().filter(|x| x.is_finite() && *x >= 0.0).fold(1.0, f64::min)
        })
        .collect();
    let gap = b[hi_idx] - b[lo_idx];
    let mut p = vec![0.0; n];
    let mut eval = |y: &[f64]| {
        let mut level = q.threshold;
        let mut rest = 1.0;
        for ((&i, &yi), &u) in free.iter().zip(y).zip(&scale) {
            let xi = yi * u;
            p[i] = xi;
            level -= b[i] * xi;
            rest -= xi;
        }
        if rest < -REMAINDER_CLAMP {
            return None;
        }
        let rest = rest.max(0.0);
        let high = (level - b[lo_idx] * rest) / gap;
        let low = rest - high;
        if high < -REMAINDER_CLAMP || low < -REMAINDER_CLAMP {
            return None;
        }
        p[hi_idx] = high.max(0.0);
        p[lo_idx] = low.max(0.0);
        deviation(kind, &p, q.nominal, q.weights).ok()
    };
    let mut lattice = Lattice {
        coords: free.len(),
        group: 0,
        eval: &mut eval,
        best: f64::INFINITY,
        best_point: vec![0.0; free.len()],
    };
    lattice.run(grid);
    if lattice.best.is_finite() {
        Ok(lattice.best)
    } else {
        Err(Error::Infeasible { min_cost, threshold: q.threshold })
    }
}

/// `min_{p_s} max_a p_saᵀ(r_sa + λv)` over rows with total deviation at
/// most κ.
///
/// Two searches each produce a feasible point, and the better value is
/// returned: a lattice over all rows jointly, and a bisection on the level
/// `t` in which every row is placed by [`oracle_projection`] on
/// `p_aᵀb_a = t`. The joint lattice converges slowly when the optimum sits
/// on the kink of the max, which the level search does not suffer from.
pub fn oracle_bellman_small(
    inst: &MdpInstance,
    amb: &AmbiguitySpec,
    v: &[f64],
    s: usize,
    grid: &GridSpec,
) -> f64 {
    let n = inst.num_states();
    let actions = inst.num_actions();
    let costs: Vec<Vec<f64>> = (0..actions).map(|a| inst.cost_vector(s, a, v)).collect();
    let nominal: Vec<Vec<f64>> = (0..actions).map(|a| inst.nominal_row(s, a)).collect();
    let weights: Vec<Vec<f64>> = (0..actions)
        .map(|a| {
            let mut w = Vec::new();
            amb.weights_into(s, a, n, &mut w);
            w
        })
        .collect();
    let kind = amb.kind();
    let kappa = amb.kappa();
    let objective = |p: &[f64]| {
        (0..actions)
            .map(|a| {
                let row = &p[a * n..(a + 1) * n];
                row.iter().zip(&costs[a]).map(|(x, b)| x * b).sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut rows = vec![0.0; n * actions];
    let mut eval = |x: &[f64]| {
        for a in 0..actions {
            let (free, row) = (&x[a * (n - 1)..(a + 1) * (n - 1)], &mut rows[a * n..(a + 1) * n]);
            row[..n - 1].copy_from_slice(free);
            let rem = 1.0 - free.iter().sum::<f64>();
            row[n - 1] = if rem.abs() < REMAINDER_CLAMP { 0.0 } else { rem.max(0.0) };
        }
        let mut budget = 0.0;
        for a in 0..actions {
            budget += deviation(kind, &rows[a * n..(a + 1) * n], &nominal[a], &weights[a]).ok()?;
            if budget > kappa {
                return None;
            }
        }
        Some(objective(&rows))
    };
    let start: Vec<f64> = nominal.concat();
    let start_free: Vec<f64> = nominal.iter().flat_map(|row| row[..n - 1].iter().copied()).collect();
    let mut lattice = Lattice {
        coords: actions * (n - 1),
        group: n - 1,
        eval: &mut eval,
        best: f64::INFINITY,
        best_point: start_free.clone(),
    };
    lattice.offer(&start_free);
    lattice.run(grid);

    let fits = |t: f64| {
        let mut budget = 0.0;
        for a in 0..actions {
            let q = ProjectionQuery::new(&nominal[a], &weights[a], &costs[a], t);
            match oracle_projection(kind, &q, grid) {
                Ok(d) => budget += d,
                Err(_) => return false,
            }
            if budget > kappa {
                return false;
            }
        }
        true
    };
    let mut lo = costs
        .iter()
        .map(|b| b.iter().copied().fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut hi = objective(&start);
    if fits(lo) {
        hi = lo;
    }
    for _ in 0..LEVEL_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lattice.best.min(hi)
}

/// Checks midpoint concavity of `f` on `samples` random pairs from
/// `domain`, with slack 1e-10.
pub fn finite_difference_concavity(f: impl Fn(f64) -> f64, domain: (f64, f64), samples: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(CONCAVITY_SEED);
    let (lo, hi) = domain;
    (0..samples).all(|_| {
        let x = rng.random_range(lo..=hi);
        let y = rng.random_range(lo..=hi);
        f(0.5 * (x + y)) >= 0.5 * (f(x) + f(y)) - 1e-10
    })
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::new(9, 6, 0.2).is_err());
        assert!(GridSpec::new(50, 1, 0.2).is_err());
        assert!(GridSpec::new(50, 6, 1.0).is_err());
        assert_eq!(GridSpec::new(50, 6, 0.2).unwrap(), GridSpec::default());
        assert_eq!(GridSpec::default().doubled_refinement().refinement_rounds, 12);
    }

    #[test]
    fn feasible_nominal_gives_zero() {
        let q = ProjectionQuery::new(&[0.5, 0.5], &[1.0, 1.0], &[1.0, 0.0], 0.6);
        for kind in AmbiguityKind::ALL {
            assert_eq!(oracle_projection(kind, &q, &GridSpec::default()).unwrap(), 0.0);
        }
    }

    #[test]
    fn infeasible_query_is_reported() {
        let q = ProjectionQuery::new(&[0.5, 0.5], &[1.0, 1.0], &[1.0, 2.0], 0.5);
        assert!(matches!(
            oracle_projection(AmbiguityKind::WeightedL1, &q, &GridSpec::default()),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn euclidean_projection_onto_a_line() {
        // Closest point of Δ₂ with p₁ ≤ 0.5 to (1, 0) is (0.5, 0.5).
        let q = ProjectionQuery::new(&[1.0, 0.0], &[1.0, 1.0], &[1.0, 0.0], 0.5);
        let l2 = oracle_projection(AmbiguityKind::WeightedL2, &q, &GridSpec::default()).unwrap();
        assert!((l2 - 0.5).abs() < 1e-12, "{l2}");
        let l1 = oracle_projection(AmbiguityKind::WeightedL1, &q, &GridSpec::default()).unwrap();
        assert!((l1 - 1.0).abs() < 1e-12, "{l1}");
    }

    #[test]
    fn kl_matches_closed_form_dual() {
        let p_low = 0.2f64;
        let nominal = [p_low, 1.0 - p_low];
        let costs = [1.0, 2.0];
        let beta = 1.5;
        let alpha = ((1.0 - p_low) / p_low).ln();
        let dual = -beta * alpha
            - (nominal[0] * (-alpha * costs[0]).exp() + nominal[1] * (-alpha * costs[1]).exp()).ln();
        let q = ProjectionQuery::new(&nominal, &[], &costs, beta);
        let value = oracle_projection(AmbiguityKind::KullbackLeibler, &q, &GridSpec::default()).unwrap();
        assert!((value - dual).abs() < 1e-6, "{value} vs {dual}");
    }

    #[test]
    fn three_state_l2_matches_closed_form() {
        // Unweighted Euclidean projection of p̄ onto {p₀ ≤ 0.2}: moving mass
        // from p₀ evenly to the other two coordinates.
        let nominal = [0.5, 0.3, 0.2];
        let q = ProjectionQuery::new(&nominal, &[1.0; 3], &[1.0, 0.0, 0.0], 0.2);
        let expected = 0.3f64.powi(2) + 2.0 * 0.15f64.powi(2);
        let got = oracle_projection(AmbiguityKind::WeightedL2, &q, &GridSpec::default()).unwrap();
        assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
    }

    #[test]
    fn bellman_oracle_extremes() {
        let inst = MdpInstance::builder(2, 2, 0.9)
            .row(0, 0, &[0.5, 0.5])
            .row(0, 1, &[0.2, 0.8])
            .row(1, 0, &[1.0, 0.0])
            .row(1, 1, &[0.0, 1.0])
            .reward(0, 0, 0, 1.0)
            .reward(0, 1, 1, 0.6)
            .reward(0, 0, 1, 0.3)
            .build()
            .unwrap();
        let v = [2.0, 1.0];
        let grid = GridSpec::default();
        let wide = AmbiguitySpec::new(AmbiguityKind::WeightedL1, 1e6).unwrap();
        let worst = (0..2)
            .map(|a| inst.cost_vector(0, a, &v).into_iter().fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max);
        let got = oracle_bellman_small(&inst, &wide, &v, 0, &grid);
        assert!((got - worst).abs() < 1e-9, "{got} vs {worst}");

        let tiny = AmbiguitySpec::new(AmbiguityKind::WeightedL1, 1e-12).unwrap();
        let nominal = (0..2)
            .map(|a| inst.nominal_action_value(0, a, &v))
            .fold(f64::NEG_INFINITY, f64::max);
        let got = oracle_bellman_small(&inst, &tiny, &v, 0, &grid);
        assert!((got - nominal).abs() < 1e-9, "{got} vs {nominal}");
    }

    #[test]
    fn concavity_checker() {
        assert!(finite_difference_concavity(|x| -x * x, (-1.0, 1.0), 1000));
        assert!(!finite_difference_concavity(|x| x * x, (-1.0, 1.0), 1000));
    }
}

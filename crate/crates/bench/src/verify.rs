//! Oracle cross-checks on small random problems.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rmdp_core::mdp::nominal_bellman;
use rmdp_core::oracle::{oracle_bellman_small, oracle_projection, GridSpec};
use rmdp_core::projections::{project, ProjectionQuery};
use rmdp_core::{robust_bellman, robust_bellman_state, AmbiguityKind, AmbiguitySpec, BellmanConfig};

use crate::error::Result;
use crate::synthetic::{generate_synthetic, SyntheticParams};

pub const PROJECTION_TOL: f64 = 1e-4;
pub const GRID_ACCURACY: f64 = 1e-5;
pub const VERIFY_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn random_simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn projection_check(kind: AmbiguityKind, rng: &mut impl Rng, queries: usize) -> Result<Check> {
    let grid = GridSpec::default();
    let mut worst: f64 = 0.0;
    for _ in 0..queries {
        let n = rng.random_range(2..=4);
        let nominal = random_simplex(rng, n);
        let sigma: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let min_b = b.iter().copied().fold(f64::INFINITY, f64::min);
        let nb: f64 = nominal.iter().zip(&b).map(|(p, x)| p * x).sum();
        let beta = min_b + rng.random_range(0.05..0.95) * (nb - min_b);
        let q = ProjectionQuery::new(&nominal, &sigma, &b, beta);
        let fast = project(kind, &q, 1e-9)?.midpoint();
        let slow = oracle_projection(kind, &q, &grid)?;
        worst = worst.max((fast - slow).abs());
    }
    Ok(Check {
        name: format!("projection oracle ({kind})"),
        passed: worst <= PROJECTION_TOL,
        detail: format!("{queries} queries, max gap {worst:.3e}, tolerance {PROJECTION_TOL:e}"),
    })
}

fn bellman_check(kind: AmbiguityKind, seed: u64, instances: usize) -> Result<Check> {
    let grid = GridSpec::default();
    let cfg = BellmanConfig::new(VERIFY_EPSILON)?;
    let tol = 2.0 * VERIFY_EPSILON + GRID_ACCURACY;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for i in 0..instances {
        let mut params = SyntheticParams::new(2, 2, seed.wrapping_add(i as u64));
        params.discount = 0.9;
        let inst = generate_synthetic(&params)?;
        let v: Vec<f64> = (0..2).map(|_| rng.random::<f64>() * 5.0).collect();
        let amb = AmbiguitySpec::new(kind, rng.random_range(0.02..0.5))?;
        for s in 0..2 {
            let fast = robust_bellman_state(&inst, &amb, &v, s, &cfg)?.value;
            let slow = oracle_bellman_small(&inst, &amb, &v, s, &grid);
            worst = worst.max((fast - slow).abs());
        }
    }
    Ok(Check {
        name: format!("bellman oracle ({kind})"),
        passed: worst <= tol,
        detail: format!("{instances} instances, max gap {worst:.3e}, tolerance {tol:e}"),
    })
}

fn pessimism_check(kind: AmbiguityKind, seed: u64) -> Result<Check> {
    let eps = 1e-5;
    let cfg = BellmanConfig::new(eps)?;
    let inst = generate_synthetic(&SyntheticParams::new(5, 3, seed))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..5).map(|_| rng.random::<f64>() * 10.0).collect();
    let out = robust_bellman(&inst, &AmbiguitySpec::from_tv(kind, 0.05)?, &v, &cfg)?;
    let nominal = nominal_bellman(&inst, &v);
    let excess = out.values.iter().zip(&nominal).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
    let width = out.per_state_bounds.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    Ok(Check {
        name: format!("pessimism ({kind})"),
        passed: excess <= eps && width <= eps * (1.0 + 1e-12),
        detail: format!("max excess over nominal {excess:.3e}, max bound width {width:.3e}"),
    })
}

pub fn run_verify(kind: AmbiguityKind, seed: u64, queries: usize) -> Result<VerifyReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok(VerifyReport {
        checks: vec![
            projection_check(kind, &mut rng, queries)?,
            bellman_check(kind, seed, 5)?,
            pessimism_check(kind, seed)?,
        ],
    })
}

//! Random instances: sparse Dirichlet rows and uniform rewards.
//!
//! Row `(s, a)` draws from its own ChaCha20 stream `s·A + a` of the
//! generator seeded with `seed`, so rows do not depend on each other.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rmdp_core::MdpInstance;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticParams {
    pub num_states: usize,
    pub num_actions: usize,
    pub support_fraction: f64,
    pub dirichlet_concentration: f64,
    pub discount: f64,
    pub tv_radius: f64,
    pub seed: u64,
}

impl SyntheticParams {
    pub fn new(num_states: usize, num_actions: usize, seed: u64) -> Self {
        SyntheticParams {
            num_states,
            num_actions,
            support_fraction: 0.30,
            dirichlet_concentration: 1.0,
            discount: 0.99,
            tv_radius: 0.05,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::InvalidParams(msg));
        if self.num_states < 2 {
            return bad(format!("need at least 2 states, got {}", self.num_states));
        }
        if self.num_actions < 1 {
            return bad("need at least 1 action".into());
        }
        if !(self.support_fraction > 0.0 && self.support_fraction <= 1.0) {
            return bad(format!("support fraction {} not in (0,1]", self.support_fraction));
        }
        if !(self.dirichlet_concentration > 0.0 && self.dirichlet_concentration.is_finite()) {
            return bad(format!("concentration {} must be positive", self.dirichlet_concentration));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return bad(format!("discount {} not in (0,1)", self.discount));
        }
        if !(self.tv_radius > 0.0 && self.tv_radius < 1.0) {
            return bad(format!("tv radius {} not in (0,1)", self.tv_radius));
        }
        Ok(())
    }

    /// Successors per row: `max(2, ⌈fraction·S⌉)`, at most `S`.
    pub fn support_size(&self) -> usize {
        let k = (self.support_fraction * self.num_states as f64).ceil() as usize;
        k.max(2).min(self.num_states)
    }
}

fn dirichlet(rng: &mut ChaCha20Rng, k: usize, eta: f64) -> Vec<f64> {
    let draws: Vec<f64> = if eta == 1.0 {
        (0..k).map(|_| Exp1.sample(rng)).collect()
    } else {
        let gamma = Gamma::new(eta, 1.0).expect("positive shape");
        (0..k).map(|_| gamma.sample(rng)).collect()
    };
    let total: f64 = draws.iter().sum();
    draws.iter().map(|x| x / total).collect()
}

pub fn generate_synthetic(p: &SyntheticParams) -> Result<MdpInstance> {
    p.validate()?;
    let (n, actions) = (p.num_states, p.num_actions);
    let k = p.support_size();
    let mut builder = MdpInstance::builder(n, actions, p.discount);
    for s in 0..n {
        for a in 0..actions {
            let mut rng = ChaCha20Rng::seed_from_u64(p.seed);
            rng.set_stream((s * actions + a) as u64);
            let mut support = sample(&mut rng, n, k).into_vec();
            support.sort_unstable();
            let probs = dirichlet(&mut rng, k, p.dirichlet_concentration);
            for (&next, &prob) in support.iter().zip(&probs) {
                let reward: f64 = rng.random();
                builder = builder.transition(s, a, next, prob).reward(s, a, next, reward);
            }
        }
    }
    Ok(builder.build()?)
}

#![allow(dead_code)]

use rand::Rng;
use rmdp_core::mdp::upper_reward_bound;
use rmdp_core::MdpInstance;

pub fn random_simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Random strictly-infeasible-nominal query data: `(p̄, σ, b, β)` with
/// `min b < β < p̄ᵀb`.
pub fn random_query(rng: &mut impl Rng, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
    loop {
        let nominal = random_simplex(rng, n);
        let sigma: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let min_b = b.iter().copied().fold(f64::INFINITY, f64::min);
        let nb = dot(&nominal, &b);
        if nb - min_b < 1e-3 {
            continue;
        }
        let beta = min_b + rng.random_range(0.05..0.95) * (nb - min_b);
        return (nominal, sigma, b, beta);
    }
}

pub fn random_instance(rng: &mut impl Rng, n: usize, actions: usize, discount: f64) -> MdpInstance {
    let mut builder = MdpInstance::builder(n, actions, discount);
    for s in 0..n {
        for a in 0..actions {
            builder = builder.row(s, a, &random_simplex(rng, n));
            for next in 0..n {
                builder = builder.reward(s, a, next, rng.random::<f64>());
            }
        }
    }
    builder.build().unwrap()
}

pub fn random_values(rng: &mut impl Rng, inst: &MdpInstance) -> Vec<f64> {
    let r_bar = upper_reward_bound(inst);
    (0..inst.num_states()).map(|_| rng.random::<f64>() * r_bar).collect()
}

mod common;

use common::{random_instance, random_values};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmdp_core::mdp::nominal_bellman;
use rmdp_core::{robust_bellman, AmbiguityKind, AmbiguitySpec, BellmanConfig};

const EPS: f64 = 1e-5;

fn kinds() -> impl Strategy<Value = AmbiguityKind> {
    prop::sample::select(AmbiguityKind::ALL.to_vec())
}

fn sup(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn approximate_contraction(seed in any::<u64>(), kind in kinds(), kappa in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 5, 3, 0.9);
        let amb = AmbiguitySpec::new(kind, kappa).unwrap();
        let cfg = BellmanConfig::new(EPS).unwrap();
        let v = random_values(&mut rng, &inst);
        let w = random_values(&mut rng, &inst);
        let bv = robust_bellman(&inst, &amb, &v, &cfg).unwrap().values;
        let bw = robust_bellman(&inst, &amb, &w, &cfg).unwrap().values;
        prop_assert!(sup(&bv, &bw) <= inst.discount() * sup(&v, &w) + 2.0 * EPS);
    }

    #[test]
    fn approximate_monotonicity(seed in any::<u64>(), kind in kinds(), kappa in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 5, 3, 0.9);
        let amb = AmbiguitySpec::new(kind, kappa).unwrap();
        let cfg = BellmanConfig::new(EPS).unwrap();
        let v = random_values(&mut rng, &inst);
        let w: Vec<f64> = v.iter().map(|x| x + rng.random::<f64>()).collect();
        let bv = robust_bellman(&inst, &amb, &v, &cfg).unwrap().values;
        let bw = robust_bellman(&inst, &amb, &w, &cfg).unwrap().values;
        for (x, y) in bv.iter().zip(&bw) {
            prop_assert!(*x <= y + 2.0 * EPS);
        }
    }

    #[test]
    fn pessimism(seed in any::<u64>(), kind in kinds(), kappa in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 5, 3, 0.9);
        let amb = AmbiguitySpec::new(kind, kappa).unwrap();
        let cfg = BellmanConfig::new(EPS).unwrap();
        let v = random_values(&mut rng, &inst);
        let out = robust_bellman(&inst, &amb, &v, &cfg).unwrap();
        let nominal = nominal_bellman(&inst, &v);
        for s in 0..5 {
            prop_assert!(out.values[s] <= nominal[s] + EPS);
            let (lo, hi) = out.per_state_bounds[s];
            prop_assert!(hi - lo <= EPS * (1.0 + 1e-12));
        }
    }

    #[test]
    fn budget_monotonicity(seed in any::<u64>(), kind in kinds(), kappa in 0.01f64..1.0, grow in 1.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 5, 3, 0.9);
        let amb = AmbiguitySpec::new(kind, kappa).unwrap();
        let wider = amb.with_kappa(kappa * grow).unwrap();
        let cfg = BellmanConfig::new(EPS).unwrap();
        let v = random_values(&mut rng, &inst);
        let small = robust_bellman(&inst, &amb, &v, &cfg).unwrap().values;
        let large = robust_bellman(&inst, &wider, &v, &cfg).unwrap().values;
        for (x, y) in small.iter().zip(&large) {
            prop_assert!(*x >= y - 2.0 * EPS);
        }
    }
}

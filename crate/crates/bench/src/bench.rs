//! Timed projection and Bellman benchmarks with CSV output.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rmdp_core::bellman::robust_bellman_state;
use rmdp_core::mdp::upper_reward_bound;
use rmdp_core::projections::{project_burg, project_kl, project_l1, project_l2, ProjectionQuery};
use rmdp_core::{AmbiguityKind, AmbiguitySpec, BellmanConfig, MdpInstance};

use crate::error::{BenchError, Result};

pub const CSV_HEADER: &str = "instance_id,kind,S,A,op,median_runtime_ns,value,iterations";
pub const MIN_REPETITIONS: usize = 5;
/// Accuracy of the KL and Burg projections in projection benchmarks.
pub const BENCH_DELTA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operation {
    Projection,
    Bellman,
    ValueIteration,
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operation::Projection => "projection",
            Operation::Bellman => "bellman",
            Operation::ValueIteration => "vi",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub instance_id: String,
    pub kind: AmbiguityKind,
    pub num_states: usize,
    pub num_actions: usize,
    pub op: Operation,
    pub median_runtime_ns: u64,
    pub value: f64,
    pub iterations: usize,
}

pub fn write_csv(out: &mut impl Write, records: &[BenchRecord]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.write_record([
            r.instance_id.clone(),
            r.kind.name().to_string(),
            r.num_states.to_string(),
            r.num_actions.to_string(),
            r.op.to_string(),
            r.median_runtime_ns.to_string(),
            r.value.to_string(),
            r.iterations.to_string(),
        ])?;
    }
    w.flush()
}

pub fn median_u64(values: &mut [u64]) -> u64 {
    values.sort_unstable();
    let n = values.len();
    if n == 0 {
        0
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2
    }
}

pub fn median_f64(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs `f` `reps` times (at least [`MIN_REPETITIONS`]) and returns the
/// median wall time in nanoseconds with the last result.
pub fn time_median<T>(reps: usize, mut f: impl FnMut() -> T) -> (u64, T) {
    let reps = reps.max(MIN_REPETITIONS);
    let mut times = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        let start = Instant::now();
        let out = f();
        times.push(start.elapsed().as_nanos() as u64);
        last = Some(out);
    }
    (median_u64(&mut times), last.expect("at least one repetition"))
}

/// Value vector drawn once per instance, uniform on `[0, R̄]`.
pub fn random_value_vector(inst: &MdpInstance, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let r_bar = upper_reward_bound(inst);
    (0..inst.num_states()).map(|_| rng.random::<f64>() * r_bar).collect()
}

/// `½(p̄ᵀv + min v)` when `p̄ᵀv > min v`, otherwise `p̄ᵀv`. For KL the
/// minimum is taken over the support of `p̄` only.
pub fn projection_threshold(kind: AmbiguityKind, nominal: &[f64], v: &[f64]) -> f64 {
    let nominal_cost: f64 = nominal.iter().zip(v).map(|(p, x)| p * x).sum();
    let on_support = kind == AmbiguityKind::KullbackLeibler;
    let min_v = nominal
        .iter()
        .zip(v)
        .filter(|(p, _)| !on_support || **p > 0.0)
        .map(|(_, x)| *x)
        .fold(f64::INFINITY, f64::min);
    if nominal_cost > min_v {
        0.5 * (nominal_cost + min_v)
    } else {
        nominal_cost
    }
}

/// Solves one projection and returns `(value, iterations)`.
pub fn solve_projection(kind: AmbiguityKind, q: &ProjectionQuery) -> rmdp_core::Result<(f64, usize)> {
    match kind {
        AmbiguityKind::WeightedL1 => project_l1(q).map(|r| (r.lower, 0)),
        AmbiguityKind::WeightedL2 => project_l2(q).map(|r| (r.lower, 0)),
        AmbiguityKind::KullbackLeibler => project_kl(q, BENCH_DELTA).map(|r| (r.result.midpoint(), r.iterations)),
        AmbiguityKind::BurgEntropy => project_burg(q, BENCH_DELTA).map(|r| (r.result.midpoint(), r.iterations)),
    }
}

/// Times the projection of every row `(s, a)` with costs `b = v` and the
/// threshold of [`projection_threshold`]. One record per row, followed by a
/// summary record with instance id `<id>/median` holding the median runtime
/// and value and the total iteration count.
pub fn bench_projection(
    id: &str,
    inst: &MdpInstance,
    amb: &AmbiguitySpec,
    seed: u64,
    reps: usize,
) -> Result<Vec<BenchRecord>> {
    let kind = amb.kind();
    let (n, actions) = (inst.num_states(), inst.num_actions());
    let v = random_value_vector(inst, seed);
    let mut sigma = Vec::new();
    let mut records = Vec::with_capacity(n * actions + 1);
    for s in 0..n {
        for a in 0..actions {
            let nominal = inst.nominal_row(s, a);
            amb.weights_into(s, a, n, &mut sigma);
            let beta = projection_threshold(kind, &nominal, &v);
            let q = ProjectionQuery::new(&nominal, &sigma, &v, beta);
            let (ns, solved) = time_median(reps, || solve_projection(kind, &q));
            let (value, iterations) = solved?;
            if beta >= q.nominal_cost() && value != 0.0 {
                return Err(BenchError::Solver(rmdp_core::Error::Domain(format!(
                    "row ({s},{a}) is feasible at the nominal but projected to {value}"
                ))));
            }
            records.push(BenchRecord {
                instance_id: format!("{id}/{s}/{a}"),
                kind,
                num_states: n,
                num_actions: actions,
                op: Operation::Projection,
                median_runtime_ns: ns,
                value,
                iterations,
            });
        }
    }
    records.push(summary(id, &records, kind, n, actions, Operation::Projection));
    Ok(records)
}

fn summary(id: &str, records: &[BenchRecord], kind: AmbiguityKind, n: usize, actions: usize, op: Operation) -> BenchRecord {
    let mut times: Vec<u64> = records.iter().map(|r| r.median_runtime_ns).collect();
    let mut values: Vec<f64> = records.iter().map(|r| r.value).collect();
    BenchRecord {
        instance_id: format!("{id}/median"),
        kind,
        num_states: n,
        num_actions: actions,
        op,
        median_runtime_ns: median_u64(&mut times),
        value: median_f64(&mut values),
        iterations: records.iter().map(|r| r.iterations).sum(),
    }
}

/// Times the robust Bellman update at `samples` states drawn uniformly with
/// replacement, using a value vector uniform on `[0, R̄]`. Iterations are
/// bisection steps. A summary record follows as in [`bench_projection`].
pub fn bench_bellman(
    id: &str,
    inst: &MdpInstance,
    amb: &AmbiguitySpec,
    cfg: &BellmanConfig,
    seed: u64,
    samples: usize,
    reps: usize,
) -> Result<Vec<BenchRecord>> {
    let (n, actions) = (inst.num_states(), inst.num_actions());
    let v = random_value_vector(inst, seed);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut records = Vec::with_capacity(samples + 1);
    for _ in 0..samples {
        let s = rng.random_range(0..n);
        let (ns, update) = time_median(reps, || robust_bellman_state(inst, amb, &v, s, cfg));
        let update = update?;
        records.push(BenchRecord {
            instance_id: format!("{id}/{s}"),
            kind: amb.kind(),
            num_states: n,
            num_actions: actions,
            op: Operation::Bellman,
            median_runtime_ns: ns,
            value: update.value,
            iterations: update.bisection_steps,
        });
    }
    records.push(summary(id, &records, amb.kind(), n, actions, Operation::Bellman));
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate_synthetic, SyntheticParams};

    #[test]
    fn threshold_policy() {
        let l1 = AmbiguityKind::WeightedL1;
        assert_eq!(projection_threshold(l1, &[0.5, 0.5], &[1.0, 3.0]), 1.5);
        assert_eq!(projection_threshold(l1, &[1.0, 0.0], &[1.0, 3.0]), 1.0);
        assert_eq!(projection_threshold(l1, &[0.0, 1.0], &[1.0, 3.0]), 2.0);
        let kl = AmbiguityKind::KullbackLeibler;
        assert_eq!(projection_threshold(kl, &[0.0, 1.0], &[1.0, 3.0]), 3.0);
        assert_eq!(projection_threshold(kl, &[0.0, 0.5, 0.5], &[0.0, 1.0, 3.0]), 1.5);
    }

    #[test]
    fn medians() {
        assert_eq!(median_u64(&mut [5, 1, 3]), 3);
        assert_eq!(median_u64(&mut [4, 1, 3, 2]), 2);
        assert_eq!(median_f64(&mut [2.0, 1.0]), 1.5);
    }

    #[test]
    fn csv_layout() {
        let record = BenchRecord {
            instance_id: "x".into(),
            kind: AmbiguityKind::KullbackLeibler,
            num_states: 3,
            num_actions: 2,
            op: Operation::ValueIteration,
            median_runtime_ns: 10,
            value: 0.5,
            iterations: 7,
        };
        let mut out = Vec::new();
        write_csv(&mut out, &[record]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{CSV_HEADER}\nx,kl,3,2,vi,10,0.5,7\n"));
    }

    #[test]
    fn projection_bench_rows() {
        let inst = generate_synthetic(&SyntheticParams::new(6, 2, 3)).unwrap();
        for kind in AmbiguityKind::ALL {
            let amb = AmbiguitySpec::from_tv(kind, 0.05).unwrap();
            let rows = bench_projection("syn", &inst, &amb, 1, 5).unwrap();
            assert_eq!(rows.len(), 13);
            assert_eq!(rows[12].instance_id, "syn/median");
            assert!(rows.iter().all(|r| r.value.is_finite() && r.value >= 0.0));
        }
    }

    #[test]
    fn bellman_bench_rows() {
        let inst = generate_synthetic(&SyntheticParams::new(6, 2, 3)).unwrap();
        let amb = AmbiguitySpec::from_tv(AmbiguityKind::WeightedL1, 0.05).unwrap();
        let rows = bench_bellman("syn", &inst, &amb, &BellmanConfig::default(), 2, 10, 5).unwrap();
        assert_eq!(rows.len(), 11);
        assert!(rows[..10].iter().all(|r| r.op == Operation::Bellman && r.iterations > 0));
    }
}

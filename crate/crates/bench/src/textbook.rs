//! Small textbook-style benchmark families. All use discount 0.99.

use rmdp_core::mdp::MdpBuilder;
use rmdp_core::MdpInstance;

use crate::error::{BenchError, Result};

pub const TEXTBOOK_DISCOUNT: f64 = 0.99;

pub const FAMILIES: [&str; 6] = ["chain", "riverswim", "gridworld", "forest", "machine", "inventory"];

/// Splits a name such as `riverswim6` into family and size.
pub fn parse_benchmark(name: &str) -> Result<(&str, usize)> {
    let split = name.find(|c: char| c.is_ascii_digit()).unwrap_or(name.len());
    let (family, digits) = name.split_at(split);
    let size = digits.parse().map_err(|_| BenchError::UnknownBenchmark(name.into()))?;
    Ok((family, size))
}

/// Builds the named benchmark, e.g. `chain10` or `gridworld4`.
pub fn textbook_by_name(name: &str) -> Result<MdpInstance> {
    let (family, size) = parse_benchmark(name)?;
    generate_textbook(family, size).map_err(|e| match e {
        BenchError::UnknownBenchmark(_) => BenchError::UnknownBenchmark(name.into()),
        other => other,
    })
}

pub fn generate_textbook(family: &str, size: usize) -> Result<MdpInstance> {
    let unknown = || BenchError::UnknownBenchmark(format!("{family}{size}"));
    let builder = match family {
        "chain" if size >= 2 => chain(size),
        "riverswim" if size >= 2 => riverswim(size),
        "gridworld" if size >= 2 => gridworld(size),
        "forest" if size >= 3 => forest(size),
        "machine" if size >= 2 => machine(size),
        "inventory" if size >= 3 => inventory(size),
        _ => return Err(unknown()),
    };
    Ok(builder.build()?)
}

/// Forward (action 0) advances along the chain with probability 0.8 and
/// slips back to state 0 otherwise; at the last state advancing stays put
/// and pays 1. Back (action 1) returns to state 0 paying 0.2, slipping
/// forward with probability 0.2.
fn chain(n: usize) -> MdpBuilder {
    let mut b = MdpInstance::builder(n, 2, TEXTBOOK_DISCOUNT);
    for s in 0..n {
        let ahead = (s + 1).min(n - 1);
        let forward_reward = if s == n - 1 { 1.0 } else { 0.0 };
        b = add(b, s, 0, &[(ahead, 0.8, forward_reward), (0, 0.2, 0.2)]);
        b = add(b, s, 1, &[(0, 0.8, 0.2), (ahead, 0.2, forward_reward)]);
    }
    b
}

/// Left (action 0) moves one state down deterministically and pays 0.005
/// at state 0. Right (action 1) moves up with probability 0.35, stays with
/// 0.6 and drifts down with 0.05; at the ends the drift mass is folded
/// into staying or moving. Staying at the top under right pays 1.
fn riverswim(n: usize) -> MdpBuilder {
    let mut b = MdpInstance::builder(n, 2, TEXTBOOK_DISCOUNT);
    for s in 0..n {
        let left_reward = if s == 0 { 0.005 } else { 0.0 };
        b = add(b, s, 0, &[(s.saturating_sub(1), 1.0, left_reward)]);
        let right: Vec<(usize, f64, f64)> = if s == 0 {
            vec![(0, 0.4, 0.0), (1, 0.6, 0.0)]
        } else if s == n - 1 {
            vec![(s - 1, 0.4, 0.0), (s, 0.6, 1.0)]
        } else {
            vec![(s - 1, 0.05, 0.0), (s, 0.6, 0.0), (s + 1, 0.35, 0.0)]
        };
        b = add(b, s, 1, &right);
    }
    b
}

/// `k × k` grid with actions up, right, down, left. The intended move
/// succeeds with probability 0.8; each perpendicular move happens with 0.1.
/// Moves into a wall stay in place. Entering the bottom-right goal pays 1;
/// from the goal every action returns to the top-left corner.
fn gridworld(k: usize) -> MdpBuilder {
    let n = k * k;
    let goal = n - 1;
    let mut b = MdpInstance::builder(n, 4, TEXTBOOK_DISCOUNT);
    let step = |s: usize, dir: usize| -> usize {
        let (r, c) = (s / k, s % k);
        let (r, c) = match dir {
            0 if r > 0 => (r - 1, c),
            1 if c + 1 < k => (r, c + 1),
            2 if r + 1 < k => (r + 1, c),
            3 if c > 0 => (r, c - 1),
            _ => (r, c),
        };
        r * k + c
    };
    for s in 0..n {
        for a in 0..4 {
            if s == goal {
                b = add(b, s, a, &[(0, 1.0, 0.0)]);
                continue;
            }
            let mut out: Vec<(usize, f64, f64)> = Vec::new();
            for (dir, p) in [(a, 0.8), ((a + 1) % 4, 0.1), ((a + 3) % 4, 0.1)] {
                let next = step(s, dir);
                match out.iter_mut().find(|e| e.0 == next) {
                    Some(e) => e.1 += p,
                    None => out.push((next, p, if next == goal { 1.0 } else { 0.0 })),
                }
            }
            b = add(b, s, a, &out);
        }
    }
    b
}

/// Forest management with fire probability 0.1. Wait (action 0) ages the
/// stand by one (capped at the oldest state) or burns it back to state 0,
/// paying 4 in the oldest state. Cut (action 1) resets to state 0 and pays
/// 1, or 2 in the oldest state, and nothing in state 0.
fn forest(n: usize) -> MdpBuilder {
    let fire = 0.1;
    let mut b = MdpInstance::builder(n, 2, TEXTBOOK_DISCOUNT);
    for s in 0..n {
        let oldest = s == n - 1;
        let wait_reward = if oldest { 4.0 } else { 0.0 };
        let ahead = (s + 1).min(n - 1);
        b = add(b, s, 0, &[(0, fire, wait_reward), (ahead, 1.0 - fire, wait_reward)]);
        let cut_reward = match s {
            0 => 0.0,
            _ if oldest => 2.0,
            _ => 1.0,
        };
        b = add(b, s, 1, &[(0, 1.0, cut_reward)]);
    }
    b
}

/// Machine wear levels `0..n`. Operate (action 0) pays `1 − s/(n−1)` and
/// wears the machine by one level with probability 0.3 (the worst level is
/// absorbing under operation). Repair (action 1) pays nothing and restores
/// level 0 with probability 0.9, level 1 otherwise.
fn machine(n: usize) -> MdpBuilder {
    let mut b = MdpInstance::builder(n, 2, TEXTBOOK_DISCOUNT);
    for s in 0..n {
        let pay = 1.0 - s as f64 / (n - 1) as f64;
        if s == n - 1 {
            b = add(b, s, 0, &[(s, 1.0, pay)]);
        } else {
            b = add(b, s, 0, &[(s, 0.7, pay), (s + 1, 0.3, pay)]);
        }
        b = add(b, s, 1, &[(0, 0.9, 0.0), (1, 0.1, 0.0)]);
    }
    b
}

/// Stock levels `0..n` (capacity `n − 1`). Action `a ∈ {0, 1, 2}` orders
/// `a` units (truncated at capacity), then demand 0, 1 or 2 arrives with
/// probabilities 0.3, 0.4 and 0.3. The reward is
/// `max(0, 0.1·(5 + 2·sales − order − 0.1·stock_after))`.
fn inventory(n: usize) -> MdpBuilder {
    let cap = n - 1;
    let demand = [(0usize, 0.3), (1, 0.4), (2, 0.3)];
    let mut b = MdpInstance::builder(n, 3, TEXTBOOK_DISCOUNT);
    for s in 0..n {
        for a in 0..3 {
            let stocked = (s + a).min(cap);
            let order = (stocked - s) as f64;
            let mut out: Vec<(usize, f64, f64)> = Vec::new();
            for (d, p) in demand {
                let sales = d.min(stocked);
                let next = stocked - sales;
                let reward = (0.1 * (5.0 + 2.0 * sales as f64 - order - 0.1 * next as f64)).max(0.0);
                match out.iter_mut().find(|e| e.0 == next) {
                    Some(e) => e.1 += p,
                    None => out.push((next, p, reward)),
                }
            }
            b = add(b, s, a, &out);
        }
    }
    b
}

fn add(mut b: MdpBuilder, s: usize, a: usize, entries: &[(usize, f64, f64)]) -> MdpBuilder {
    let mut merged: Vec<(usize, f64, f64)> = Vec::new();
    for &(next, p, r) in entries {
        match merged.iter_mut().find(|e| e.0 == next) {
            Some(e) => e.1 += p,
            None => merged.push((next, p, r)),
        }
    }
    for (next, p, r) in merged {
        b = b.transition(s, a, next, p);
        if r != 0.0 {
            b = b.reward(s, a, next, r);
        }
    }
    b
}

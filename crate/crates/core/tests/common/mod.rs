//! Independent node-level model of the protocol, used as a brute-force
//! oracle. Every node's randomness in a slot is enumerated explicitly.

#![allow(dead_code)]

use std::collections::HashMap;

pub mod piecewise;
pub mod tagged;

use paoii_core::SystemParams;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Mode {
    Idle,
    Active,
    Collided,
    Mistaken,
}

use Mode::*;

pub const MODES: [Mode; 4] = [Idle, Active, Collided, Mistaken];

/// One joint outcome of a slot.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub prob: f64,
    pub next: Vec<Mode>,
    /// Node whose packet reached the gateway.
    pub delivered: Option<usize>,
    /// The delivered packet carried an unreported anomaly.
    pub novel: bool,
    pub transmitters: usize,
}

/// Enumerates every combination of arrivals, transmit decisions, channel
/// outcome and ACK outcome.
pub fn slot(modes: &[Mode], p: &SystemParams) -> Vec<Outcome> {
    let (l, a, b) = (p.lambda, p.alpha, p.beta);
    let mut partial: Vec<(f64, Vec<Mode>, Vec<usize>)> = vec![(1.0, Vec::new(), Vec::new())];
    for (idx, &mode) in modes.iter().enumerate() {
        let choices: Vec<(f64, Mode, bool)> = match mode {
            Idle => vec![(1.0 - l, Idle, false), (l * a, Active, true), (l * (1.0 - a), Active, false)],
            Active => vec![(a, Active, true), (1.0 - a, Active, false)],
            Collided => vec![(b, Collided, true), (1.0 - b, Collided, false)],
            Mistaken => vec![
                ((1.0 - l) * b, Mistaken, true),
                ((1.0 - l) * (1.0 - b), Mistaken, false),
                (l * b, Collided, true),
                (l * (1.0 - b), Collided, false),
            ],
        };
        let mut next = Vec::with_capacity(partial.len() * choices.len());
        for (pr, post, tx) in &partial {
            for &(q, m, sends) in &choices {
                let mut post = post.clone();
                post.push(m);
                let mut tx = tx.clone();
                if sends {
                    tx.push(idx);
                }
                next.push((pr * q, post, tx));
            }
        }
        partial = next;
    }

    let mut out = Vec::new();
    for (pr, post, tx) in partial {
        match tx.len() {
            0 => out.push(Outcome { prob: pr, next: post, delivered: None, novel: false, transmitters: 0 }),
            1 => {
                let node = tx[0];
                let from = post[node];
                let novel = matches!(from, Active | Collided);
                for (q, ack) in [(1.0 - p.psi, true), (p.psi, false)] {
                    let mut next = post.clone();
                    next[node] = if ack { Idle } else { Mistaken };
                    out.push(Outcome {
                        prob: pr * (1.0 - p.eps) * q,
                        next,
                        delivered: Some(node),
                        novel,
                        transmitters: 1,
                    });
                }
                let mut next = post.clone();
                if from == Active {
                    next[node] = Collided;
                }
                out.push(Outcome { prob: pr * p.eps, next, delivered: None, novel: false, transmitters: 1 });
            }
            n => {
                let mut next = post.clone();
                for &i in &tx {
                    if next[i] == Active {
                        next[i] = Collided;
                    }
                }
                out.push(Outcome { prob: pr, next, delivered: None, novel: false, transmitters: n });
            }
        }
    }
    out
}

pub fn counts(modes: &[Mode]) -> (usize, usize, usize) {
    let count = |m| modes.iter().filter(|&&x| x == m).count();
    (count(Active), count(Collided), count(Mistaken))
}

/// A node population with the given aggregate counts.
pub fn population(n: usize, a: usize, c: usize, m: usize) -> Vec<Mode> {
    let mut v = vec![Active; a];
    v.extend(vec![Collided; c]);
    v.extend(vec![Mistaken; m]);
    v.extend(vec![Idle; n - a - c - m]);
    v
}

/// Aggregate one-slot law from a population: next counts → probability.
pub fn aggregate_row(modes: &[Mode], p: &SystemParams) -> HashMap<(usize, usize, usize), f64> {
    let mut row = HashMap::new();
    for o in slot(modes, p) {
        *row.entry(counts(&o.next)).or_insert(0.0) += o.prob;
    }
    row
}

/// All `4^n` node configurations, in base-4 order.
pub fn configurations(n: usize) -> Vec<Vec<Mode>> {
    (0..4usize.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let m = MODES[code % 4];
                    code /= 4;
                    m
                })
                .collect()
        })
        .collect()
}

pub fn config_index(modes: &[Mode]) -> usize {
    modes.iter().rev().fold(0, |acc, m| acc * 4 + MODES.iter().position(|x| x == m).unwrap())
}

/// Dense node-level transition matrix over all configurations.
pub fn node_chain(n: usize, p: &SystemParams) -> Vec<Vec<f64>> {
    let configs = configurations(n);
    let mut m = vec![vec![0.0; configs.len()]; configs.len()];
    for (r, cfg) in configs.iter().enumerate() {
        for o in slot(cfg, p) {
            m[r][config_index(&o.next)] += o.prob;
        }
    }
    m
}

/// Solves `πP = π`, `Σπ = 1` by Gaussian elimination with partial pivoting,
/// replacing the last balance equation with the normalization.
pub fn stationary_dense(p: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    let mut a: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| p[j][i] - if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut rhs = vec![0.0; n];
    a[n - 1] = vec![1.0; n];
    rhs[n - 1] = 1.0;
    solve_linear(a, rhs)
}

pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        assert!(d.abs() > 1e-300, "singular system");
        for r in col + 1..n {
            let f = a[r][col] / d;
            if f != 0.0 {
                let (top, bottom) = a.split_at_mut(r);
                for (x, y) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                    *x -= f * y;
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

pub fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn bin_pmf(n: usize, p: f64, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    binom(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Parameter sets covering the corners of the channel and protocol space.
pub fn corner_params(n: usize) -> Vec<SystemParams> {
    let base = SystemParams { n_sensors: n, ..Default::default() };
    vec![
        SystemParams { lambda: 0.05, alpha: 0.9, beta: 0.1, eps: 0.1, psi: 0.1, ..base },
        SystemParams { lambda: 0.3, alpha: 0.5, beta: 0.4, eps: 0.0, psi: 0.0, ..base },
        SystemParams { lambda: 0.7, alpha: 1.0, beta: 0.95, eps: 0.3, psi: 0.6, ..base },
        SystemParams { lambda: 1.0, alpha: 0.2, beta: 0.05, eps: 0.5, psi: 0.0, ..base },
        SystemParams { lambda: 0.01, alpha: 0.7, beta: 0.9, eps: 0.0, psi: 0.9, ..base },
    ]
}

/// `P(θ = t)` for a lone node: active mode delivers with `α(1−ε)` per slot
/// and drops to backoff with `αε`; backoff delivers with `β(1−ε)`.
pub fn lone_node_pmf(p: &SystemParams, t: usize) -> f64 {
    let sa = p.alpha * (1.0 - p.eps);
    let sb = p.beta * (1.0 - p.eps);
    let (x, y) = (1.0 - p.alpha, 1.0 - sb);
    let k = t as i32 - 1;
    let via_backoff = if t == 1 {
        0.0
    } else if (x - y).abs() < 1e-12 {
        k as f64 * x.powi(k - 1)
    } else {
        (x.powi(k) - y.powi(k)) / (x - y)
    };
    let from_active = x.powi(k) * sa + p.alpha * p.eps * sb * via_backoff;
    let from_backoff = y.powi(k) * sb;

    // stationary law of the four-state chain idle/active/collided/mistaken
    let (l, a, b, e, s) = (p.lambda, p.alpha, p.beta, p.eps, p.psi);
    let m = vec![
        vec![1.0 - l + l * a * (1.0 - e) * (1.0 - s), l * (1.0 - a), l * a * e, l * a * (1.0 - e) * s],
        vec![a * (1.0 - e) * (1.0 - s), 1.0 - a, a * e, a * (1.0 - e) * s],
        vec![b * (1.0 - e) * (1.0 - s), 0.0, 1.0 - b * (1.0 - e), b * (1.0 - e) * s],
        vec![
            b * (1.0 - e) * (1.0 - s),
            0.0,
            l * (1.0 - b * (1.0 - e)),
            (1.0 - l) * (1.0 - b * (1.0 - e) * (1.0 - s)) + l * b * (1.0 - e) * s,
        ],
    ];
    for row in &m {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
    let pi = stationary_dense(&m);
    let p_id = pi[0] / (pi[0] + pi[3]);
    p_id * from_active + (1.0 - p_id) * from_backoff
}

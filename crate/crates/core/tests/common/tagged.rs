//! Tagged-node one-slot law by node-level enumeration.

use paoii_core::chain::{StateSpace, SystemState};
use paoii_core::SystemParams;

use super::{counts, population, slot, Mode};

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Tagged {
    Active,
    Backoff,
}

/// Population for row `s` with the tagged node at index 0, or `None` when
/// the row cannot host it. At `t = 1` the row counts the tagged node as idle
/// (active mode) or mistaken (backoff mode); later it counts it as active or
/// collided.
pub fn tagged_population(n: usize, s: SystemState, first: bool, mode: Tagged) -> Option<Vec<Mode>> {
    let (a, c, m) = (s.a, s.c, s.m);
    let idle = n - a - c - m;
    let others = match (first, mode) {
        (true, Tagged::Active) if idle >= 1 => population(n - 1, a, c, m),
        (true, Tagged::Backoff) if m >= 1 => population(n - 1, a, c, m - 1),
        (false, Tagged::Active) if a >= 1 => population(n - 1, a - 1, c, m),
        (false, Tagged::Backoff) if c >= 1 => population(n - 1, a, c - 1, m),
        _ => return None,
    };
    let mut v = vec![if mode == Tagged::Active { Mode::Active } else { Mode::Collided }];
    v.extend(others);
    Some(v)
}

pub struct TaggedOracle {
    pub eta: Vec<f64>,
    pub nu: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

pub fn tagged_oracle(space: &StateSpace, p: &SystemParams, first: bool) -> TaggedOracle {
    let n = space.n_sensors();
    let len = space.len();
    let mut o = TaggedOracle {
        eta: vec![0.0; len],
        nu: vec![0.0; len],
        u: vec![vec![0.0; len]; len],
        v: vec![vec![0.0; len]; len],
        w: vec![vec![0.0; len]; len],
    };
    for (r, s) in space.iter() {
        for mode in [Tagged::Active, Tagged::Backoff] {
            let Some(pop) = tagged_population(n, s, first, mode) else { continue };
            for out in slot(&pop, p) {
                if out.delivered == Some(0) {
                    match mode {
                        Tagged::Active => o.eta[r] += out.prob,
                        Tagged::Backoff => o.nu[r] += out.prob,
                    }
                    continue;
                }
                let (a, c, m) = counts(&out.next);
                let col = space.index_of(SystemState::new(a, c, m)).unwrap();
                match (mode, out.next[0]) {
                    (Tagged::Active, Mode::Active) => o.u[r][col] += out.prob,
                    (Tagged::Active, Mode::Collided) => o.v[r][col] += out.prob,
                    (Tagged::Backoff, Mode::Collided) => o.w[r][col] += out.prob,
                    other => panic!("unexpected tagged transition {other:?}"),
                }
            }
        }
    }
    o
}

use std::fmt;

use serde::{Deserialize, Serialize};

/// Aggregate system state: numbers of active, collided and mistaken sensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemState {
    pub a: usize,
    pub c: usize,
    pub m: usize,
}

impl SystemState {
    pub const fn new(a: usize, c: usize, m: usize) -> Self {
        Self { a, c, m }
    }

    /// Nodes in backoff (collided or mistaken).
    pub fn backoff(&self) -> usize {
        self.c + self.m
    }

    /// Idle count for a system of `n` sensors. Panics if the state does not fit.
    pub fn idle(&self, n: usize) -> usize {
        n.checked_sub(self.a + self.c + self.m).expect("state has more busy nodes than sensors")
    }

    pub fn fits(&self, n: usize) -> bool {
        self.a + self.c + self.m <= n
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{},{}>", self.a, self.c, self.m)
    }
}

/// All feasible states of an `n`-sensor system, ordered lexicographically in
/// `(a, c, m)`, with O(1) lookup in both directions.
#[derive(Debug, Clone)]
pub struct StateSpace {
    n: usize,
    states: Vec<SystemState>,
    lookup: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl StateSpace {
    pub fn new(n: usize) -> Self {
        let side = n + 1;
        let mut lookup = vec![NONE; side * side * side];
        let mut states = Vec::with_capacity(Self::cardinality(n));
        for a in 0..=n {
            for c in 0..=n - a {
                for m in 0..=n - a - c {
                    lookup[(a * side + c) * side + m] = states.len() as u32;
                    states.push(SystemState::new(a, c, m));
                }
            }
        }
        Self { n, states, lookup }
    }

    /// (n+1)(n+2)(n+3)/6
    pub const fn cardinality(n: usize) -> usize {
        (n + 1) * (n + 2) * (n + 3) / 6
    }

    pub fn n_sensors(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn state(&self, idx: usize) -> SystemState {
        self.states[idx]
    }

    pub fn index_of(&self, s: SystemState) -> Option<usize> {
        if !s.fits(self.n) {
            return None;
        }
        let side = self.n + 1;
        match self.lookup[(s.a * side + s.c) * side + s.m] {
            NONE => None,
            i => Some(i as usize),
        }
    }

    /// Index of a state known to be feasible.
    pub(crate) fn index(&self, s: SystemState) -> usize {
        self.index_of(s).unwrap_or_else(|| panic!("state {s} outside space of {} sensors", self.n))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, SystemState)> + '_ {
        self.states.iter().copied().enumerate()
    }
}

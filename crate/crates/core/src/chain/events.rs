//! One-slot event kernels of the aggregate chain.
//!
//! A slot starting in `<a, c, m>` first sees `i` idle and `j` mistaken nodes
//! detect new anomalies (mistaken nodes with a new anomaly become collided),
//! then exactly one of the outcomes in [`EventKind`] happens.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::binomial::{BinomialTable, Pascal};
use super::state::SystemState;
use crate::error::{Error, Result};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    /// An active node succeeds and receives the ACK.
    ActiveAcked,
    /// An active node succeeds, ACK lost: it becomes mistaken.
    ActiveAckLost,
    /// A collided node succeeds and receives the ACK.
    CollidedAcked,
    /// A collided node succeeds, ACK lost: it becomes mistaken.
    CollidedAckLost,
    /// A mistaken node delivers stale data and receives the ACK.
    MistakenAcked,
    /// A mistaken node delivers stale data, ACK lost again.
    MistakenAckLost,
    /// Nobody transmits.
    Silence,
    /// Two or more transmitters; `k` of them active.
    Collision,
    /// A lone active transmitter hits an uplink error.
    ActiveLoss,
    /// A lone backoff transmitter hits an uplink error.
    BackoffLoss,
}

impl EventKind {
    pub const ALL: [EventKind; 10] = [
        EventKind::ActiveAcked,
        EventKind::ActiveAckLost,
        EventKind::CollidedAcked,
        EventKind::CollidedAckLost,
        EventKind::MistakenAcked,
        EventKind::MistakenAckLost,
        EventKind::Silence,
        EventKind::Collision,
        EventKind::ActiveLoss,
        EventKind::BackoffLoss,
    ];

    /// Letter used for the case in the analysis (A..J).
    pub fn letter(self) -> char {
        match self {
            EventKind::ActiveAcked => 'A',
            EventKind::ActiveAckLost => 'B',
            EventKind::CollidedAcked => 'C',
            EventKind::CollidedAckLost => 'D',
            EventKind::MistakenAcked => 'E',
            EventKind::MistakenAckLost => 'F',
            EventKind::Silence => 'G',
            EventKind::Collision => 'H',
            EventKind::ActiveLoss => 'I',
            EventKind::BackoffLoss => 'J',
        }
    }

    /// Events that deliver a fresh (non-stale) report.
    pub fn is_novel_success(self) -> bool {
        matches!(
            self,
            EventKind::ActiveAcked | EventKind::ActiveAckLost | EventKind::CollidedAcked | EventKind::CollidedAckLost
        )
    }
}

/// An event together with its activation counts.
///
/// `i` idle and `j` mistaken nodes detected anomalies at the start of the
/// slot; `k` is the number of active transmitters in a collision and is zero
/// for every other kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventCase {
    pub kind: EventKind,
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl EventCase {
    pub fn new(kind: EventKind, i: usize, j: usize) -> Self {
        Self { kind, i, j, k: 0 }
    }

    pub fn collision(i: usize, j: usize, k: usize) -> Self {
        Self { kind: EventKind::Collision, i, j, k }
    }

    /// State change `(d_a, d_c, d_m)`.
    pub fn delta(&self) -> (isize, isize, isize) {
        let (i, j, k) = (self.i as isize, self.j as isize, self.k as isize);
        match self.kind {
            EventKind::ActiveAcked => (i - 1, j, -j),
            EventKind::ActiveAckLost => (i - 1, j, 1 - j),
            EventKind::CollidedAcked => (i, j - 1, -j),
            EventKind::CollidedAckLost => (i, j - 1, 1 - j),
            EventKind::MistakenAcked => (i, j, -j - 1),
            EventKind::MistakenAckLost | EventKind::Silence | EventKind::BackoffLoss => (i, j, -j),
            EventKind::Collision => (i - k, j + k, -j),
            EventKind::ActiveLoss => (i - 1, j + 1, -j),
        }
    }

    /// Resulting state, or `None` if any count would go negative.
    pub fn apply(&self, s: SystemState) -> Option<SystemState> {
        let (da, dc, dm) = self.delta();
        let a = s.a as isize + da;
        let c = s.c as isize + dc;
        let m = s.m as isize + dm;
        (a >= 0 && c >= 0 && m >= 0).then(|| SystemState::new(a as usize, c as usize, m as usize))
    }
}

impl fmt::Display for EventCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            EventKind::Collision => write!(f, "H({},{},{})", self.i, self.j, self.k),
            kind => write!(f, "{}({},{})", kind.letter(), self.i, self.j),
        }
    }
}

/// Precomputed binomial tables for one parameter set.
#[derive(Debug, Clone)]
pub struct Kernel {
    params: SystemParams,
    pascal: Pascal,
    lambda: BinomialTable,
    alpha: BinomialTable,
    beta: BinomialTable,
    /// `beta_tail[b][l] = sum_{x >= l} Bin^b_beta(x)` for `l` in 0..=2.
    beta_tail: Vec<[f64; 3]>,
}

impl Kernel {
    pub fn new(params: &SystemParams) -> Self {
        let n = params.n_sensors;
        let pascal = Pascal::new(n);
        let beta = BinomialTable::new(params.beta, n, &pascal);
        let beta_tail = (0..=n)
            .map(|b| {
                let row = beta.row(b);
                let from = |l: usize| row.iter().skip(l).sum::<f64>();
                [from(0), from(1), from(2)]
            })
            .collect();
        Self {
            params: *params,
            lambda: BinomialTable::new(params.lambda, n, &pascal),
            alpha: BinomialTable::new(params.alpha, n, &pascal),
            beta,
            beta_tail,
            pascal,
        }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn pascal(&self) -> &Pascal {
        &self.pascal
    }

    pub fn lambda_pmf(&self) -> &BinomialTable {
        &self.lambda
    }

    pub fn alpha_pmf(&self) -> &BinomialTable {
        &self.alpha
    }

    pub fn beta_pmf(&self) -> &BinomialTable {
        &self.beta
    }

    /// `P(at least l of b backoff nodes transmit)` for `l <= 2`.
    #[inline]
    pub fn beta_tail(&self, b: usize, l: usize) -> f64 {
        self.beta_tail[b][l]
    }

    /// Probability that `i` of `idle` idle and `j` of `m` mistaken nodes
    /// detect an anomaly.
    #[inline]
    pub fn zeta(&self, idle: usize, m: usize, i: usize, j: usize) -> f64 {
        self.lambda.pmf(idle, i) * self.lambda.pmf(m, j)
    }

    /// Success probability of one specific active node among `a` active and
    /// `b` backoff nodes.
    #[inline]
    pub fn sigma_active(&self, a: usize, b: usize) -> f64 {
        let p = &self.params;
        (1.0 - p.eps) * p.alpha * self.alpha.pmf(a - 1, 0) * self.beta.pmf(b, 0)
    }

    /// Success probability of one specific backoff node among `a` active and
    /// `b` backoff nodes.
    #[inline]
    pub fn sigma_backoff(&self, a: usize, b: usize) -> f64 {
        let p = &self.params;
        (1.0 - p.eps) * self.alpha.pmf(a, 0) * p.beta * self.beta.pmf(b - 1, 0)
    }

    /// Probability of `event` from state `s` in an `n`-sensor system.
    pub fn event_prob(&self, s: SystemState, n: usize, event: EventCase) -> Result<f64> {
        if !s.fits(n) || n > self.params.n_sensors {
            return Err(Error::domain(format!("state {s} does not fit {n} sensors")));
        }
        let idle = s.idle(n);
        let EventCase { kind, i, j, k } = event;
        if i > idle || j > s.m {
            return Err(Error::domain(format!("activations ({i},{j}) exceed idle={idle}, mistaken={}", s.m)));
        }
        if kind != EventKind::Collision && k != 0 {
            return Err(Error::domain(format!("{event}: k is only meaningful for collisions")));
        }
        let act = s.a + i;
        let col = s.c + j;
        let mis = s.m - j;
        let b = s.backoff();
        let infeasible = || Err(Error::domain(format!("event {event} infeasible from {s}")));
        let psi = self.params.psi;
        let eps = self.params.eps;
        let body = match kind {
            EventKind::ActiveAcked | EventKind::ActiveAckLost => {
                if act == 0 {
                    return infeasible();
                }
                let ack = if kind == EventKind::ActiveAcked { 1.0 - psi } else { psi };
                ack * act as f64 * self.sigma_active(act, b)
            }
            EventKind::CollidedAcked | EventKind::CollidedAckLost => {
                if col == 0 {
                    return infeasible();
                }
                let ack = if kind == EventKind::CollidedAcked { 1.0 - psi } else { psi };
                ack * col as f64 * self.sigma_backoff(act, b)
            }
            EventKind::MistakenAcked | EventKind::MistakenAckLost => {
                if mis == 0 {
                    return infeasible();
                }
                let ack = if kind == EventKind::MistakenAcked { 1.0 - psi } else { psi };
                ack * mis as f64 * self.sigma_backoff(act, b)
            }
            EventKind::Silence => self.alpha.pmf(act, 0) * self.beta.pmf(b, 0),
            EventKind::ActiveLoss => {
                if act == 0 {
                    return infeasible();
                }
                eps * self.alpha.pmf(act, 1) * self.beta.pmf(b, 0)
            }
            EventKind::BackoffLoss => {
                if b == 0 {
                    return infeasible();
                }
                eps * self.alpha.pmf(act, 0) * self.beta.pmf(b, 1)
            }
            EventKind::Collision => {
                let l_min = 2usize.saturating_sub(k);
                if k > act || l_min > b {
                    return infeasible();
                }
                self.alpha.pmf(act, k) * self.beta_tail(b, l_min)
            }
        };
        Ok(body * self.zeta(idle, s.m, i, j))
    }

    /// Calls `f(event, probability, next_state)` for every feasible event with
    /// non-zero probability from `s` in an `n`-sensor system.
    pub fn for_each_event<F>(&self, s: SystemState, n: usize, mut f: F)
    where
        F: FnMut(EventCase, f64, SystemState),
    {
        let idle = s.idle(n);
        let b = s.backoff();
        let p = &self.params;
        let mut emit = |case: EventCase, prob: f64| {
            if prob > 0.0 {
                let next = case.apply(s).expect("feasible event produced negative count");
                f(case, prob, next);
            }
        };
        for i in 0..=idle {
            for j in 0..=s.m {
                let z = self.zeta(idle, s.m, i, j);
                if z == 0.0 {
                    continue;
                }
                let act = s.a + i;
                let col = s.c + j;
                let mis = s.m - j;
                let none_b = self.beta.pmf(b, 0);
                let one_b = self.beta.pmf(b, 1);
                let none_a = self.alpha.pmf(act, 0);
                let one_a = self.alpha.pmf(act, 1);

                if act > 0 {
                    let success = act as f64 * self.sigma_active(act, b) * z;
                    emit(EventCase::new(EventKind::ActiveAcked, i, j), (1.0 - p.psi) * success);
                    emit(EventCase::new(EventKind::ActiveAckLost, i, j), p.psi * success);
                    emit(EventCase::new(EventKind::ActiveLoss, i, j), p.eps * one_a * none_b * z);
                }
                if b > 0 {
                    let sb = self.sigma_backoff(act, b) * z;
                    if col > 0 {
                        let success = col as f64 * sb;
                        emit(EventCase::new(EventKind::CollidedAcked, i, j), (1.0 - p.psi) * success);
                        emit(EventCase::new(EventKind::CollidedAckLost, i, j), p.psi * success);
                    }
                    if mis > 0 {
                        let success = mis as f64 * sb;
                        emit(EventCase::new(EventKind::MistakenAcked, i, j), (1.0 - p.psi) * success);
                        emit(EventCase::new(EventKind::MistakenAckLost, i, j), p.psi * success);
                    }
                    emit(EventCase::new(EventKind::BackoffLoss, i, j), p.eps * none_a * one_b * z);
                }
                emit(EventCase::new(EventKind::Silence, i, j), none_a * none_b * z);
                for k in 0..=act {
                    let l_min = 2usize.saturating_sub(k);
                    if l_min > b {
                        continue;
                    }
                    emit(EventCase::collision(i, j, k), self.alpha.pmf(act, k) * self.beta_tail(b, l_min) * z);
                }
            }
        }
    }
}

/// `ζ_s^(i,j)`: probability that `i` idle and `j` mistaken nodes of `s` detect
/// a new anomaly in an `n`-sensor system.
pub fn activation_pmf(s: SystemState, n: usize, i: usize, j: usize, lambda: f64) -> Result<f64> {
    if !s.fits(n) {
        return Err(Error::domain(format!("state {s} does not fit {n} sensors")));
    }
    let idle = s.idle(n);
    if i > idle || j > s.m {
        return Err(Error::domain(format!("activations ({i},{j}) exceed idle={idle}, mistaken={}", s.m)));
    }
    let pascal = Pascal::new(n);
    let bin = BinomialTable::new(lambda, n, &pascal);
    Ok(bin.pmf(idle, i) * bin.pmf(s.m, j))
}

/// `σ_a(a, b)`; requires `a >= 1`.
pub fn success_prob_active(a: usize, b: usize, params: &SystemParams) -> Result<f64> {
    if a == 0 {
        return Err(Error::domain("success_prob_active needs at least one active node"));
    }
    Ok((1.0 - params.eps) * params.alpha * (1.0 - params.alpha).powi(a as i32 - 1) * (1.0 - params.beta).powi(b as i32))
}

/// `σ_b(a, b)`; requires `b >= 1`.
pub fn success_prob_backoff(a: usize, b: usize, params: &SystemParams) -> Result<f64> {
    if b == 0 {
        return Err(Error::domain("success_prob_backoff needs at least one backoff node"));
    }
    Ok((1.0 - params.eps) * (1.0 - params.alpha).powi(a as i32) * params.beta * (1.0 - params.beta).powi(b as i32 - 1))
}

/// Probability of `event` from `s` in the system described by `params`.
pub fn event_prob(s: SystemState, event: EventCase, params: &SystemParams) -> Result<f64> {
    Kernel::new(params).event_prob(s, params.n_sensors, event)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(n: usize, lambda: f64, alpha: f64, beta: f64, eps: f64, psi: f64) -> SystemParams {
        SystemParams { n_sensors: n, lambda, alpha, beta, eps, psi, ..Default::default() }
    }

    #[test]
    fn activation_examples() {
        let s = SystemState::new(0, 0, 0);
        assert_eq!(activation_pmf(s, 4, 0, 0, 0.0).unwrap(), 1.0);
        // I = 2, m = 1
        let s = SystemState::new(1, 0, 1);
        assert_abs_diff_eq!(activation_pmf(s, 4, 1, 1, 0.5).unwrap(), 0.25, epsilon = 1e-15);
        // I = 3, m = 2
        let s = SystemState::new(0, 0, 2);
        let mut total = 0.0;
        for i in 0..=3 {
            for j in 0..=2 {
                total += activation_pmf(s, 5, i, j, 0.01).unwrap();
            }
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
        assert!(activation_pmf(s, 5, 4, 0, 0.01).is_err());
        assert!(activation_pmf(s, 5, 0, 3, 0.01).is_err());
    }

    #[test]
    fn success_probability_examples() {
        let p = params(3, 0.01, 0.9, 0.1, 0.1, 0.0);
        assert_abs_diff_eq!(success_prob_active(1, 0, &p).unwrap(), 0.81, epsilon = 1e-15);
        assert_abs_diff_eq!(success_prob_active(2, 1, &p).unwrap(), 0.0729, epsilon = 1e-15);
        assert_abs_diff_eq!(success_prob_backoff(0, 1, &p).unwrap(), 0.09, epsilon = 1e-15);
        assert!(success_prob_active(0, 1, &p).is_err());
        assert!(success_prob_backoff(1, 0, &p).is_err());
    }

    #[test]
    fn kernel_sigma_matches_free_functions() {
        let p = params(6, 0.02, 0.7, 0.3, 0.1, 0.2);
        let k = Kernel::new(&p);
        for a in 1..=6 {
            for b in 0..=6 - a {
                assert_abs_diff_eq!(k.sigma_active(a, b), success_prob_active(a, b, &p).unwrap(), epsilon = 1e-15);
            }
        }
        for b in 1..=6 {
            for a in 0..=6 - b {
                assert_abs_diff_eq!(k.sigma_backoff(a, b), success_prob_backoff(a, b, &p).unwrap(), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn empty_silent_system() {
        let p = params(3, 0.0, 0.9, 0.1, 0.1, 0.1);
        let s = SystemState::new(0, 0, 0);
        let g = event_prob(s, EventCase::new(EventKind::Silence, 0, 0), &p).unwrap();
        assert_eq!(g, 1.0);
    }

    #[test]
    fn lone_active_node_cases() {
        let p = params(1, 0.0, 0.9, 0.5, 0.1, 0.1);
        let s = SystemState::new(1, 0, 0);
        let get = |kind| event_prob(s, EventCase::new(kind, 0, 0), &p).unwrap();
        let a = get(EventKind::ActiveAcked);
        let b = get(EventKind::ActiveAckLost);
        let i = get(EventKind::ActiveLoss);
        let g = get(EventKind::Silence);
        assert_abs_diff_eq!(a, 0.729, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.081, epsilon = 1e-15);
        assert_abs_diff_eq!(i, 0.09, epsilon = 1e-15);
        assert_abs_diff_eq!(g, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(a + b + i + g, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn infeasible_events_are_domain_errors() {
        let p = params(3, 0.1, 0.9, 0.1, 0.1, 0.1);
        let s = SystemState::new(0, 1, 0);
        for case in [
            EventCase::new(EventKind::ActiveAcked, 0, 0),
            EventCase::new(EventKind::MistakenAcked, 0, 0),
            EventCase::new(EventKind::ActiveLoss, 0, 0),
            EventCase::collision(0, 0, 1),
            EventCase::collision(0, 0, 0),
            EventCase::new(EventKind::Silence, 3, 0),
            EventCase::new(EventKind::Silence, 0, 1),
        ] {
            assert!(event_prob(s, case, &p).is_err(), "{case} should be infeasible");
        }
        // two idle nodes activating makes a two-active collision feasible
        assert!(event_prob(s, EventCase::collision(2, 0, 2), &p).is_ok());
    }

    #[test]
    fn delta_matches_documented_transitions() {
        let s = SystemState::new(3, 2, 2);
        let at = |kind, i, j| EventCase::new(kind, i, j).apply(s).unwrap();
        assert_eq!(at(EventKind::ActiveAcked, 1, 1), SystemState::new(3, 3, 1));
        assert_eq!(at(EventKind::ActiveAckLost, 1, 1), SystemState::new(3, 3, 2));
        assert_eq!(at(EventKind::CollidedAcked, 0, 1), SystemState::new(3, 2, 1));
        assert_eq!(at(EventKind::CollidedAckLost, 0, 1), SystemState::new(3, 2, 2));
        assert_eq!(at(EventKind::MistakenAcked, 0, 1), SystemState::new(3, 3, 0));
        assert_eq!(at(EventKind::MistakenAckLost, 0, 1), SystemState::new(3, 3, 1));
        assert_eq!(at(EventKind::ActiveLoss, 0, 0), SystemState::new(2, 3, 2));
        assert_eq!(EventCase::collision(1, 0, 3).apply(s), Some(SystemState::new(1, 5, 2)));
    }

    fn all_states(n: usize) -> Vec<SystemState> {
        super::super::state::StateSpace::new(n).states().to_vec()
    }

    proptest! {
        #[test]
        fn events_partition_each_slot(
            n in 1usize..9,
            lambda in 0.0f64..1.0,
            alpha in 0.01f64..=1.0,
            beta in 0.01f64..=1.0,
            eps in 0.0f64..0.99,
            psi in 0.0f64..0.99,
        ) {
            let p = params(n, lambda, alpha, beta, eps, psi);
            let k = Kernel::new(&p);
            for s in all_states(n) {
                let mut total = 0.0;
                k.for_each_event(s, n, |case, prob, next| {
                    assert!(next.fits(n), "{case} from {s} leaves the space");
                    let direct = k.event_prob(s, n, case).unwrap();
                    assert!((direct - prob).abs() <= 1e-15);
                    total += prob;
                });
                prop_assert!((total - 1.0).abs() <= 1e-12, "state {} sums to {}", s, total);
            }
        }

        #[test]
        fn zeta_normalizes(n in 1usize..12, lambda in 0.0f64..=1.0) {
            let p = params(n, lambda, 0.5, 0.5, 0.0, 0.0);
            let k = Kernel::new(&p);
            for s in all_states(n) {
                let idle = s.idle(n);
                let mut total = 0.0;
                for i in 0..=idle {
                    for j in 0..=s.m {
                        total += k.zeta(idle, s.m, i, j);
                    }
                }
                prop_assert!((total - 1.0).abs() < 1e-13);
            }
        }

        #[test]
        fn success_probabilities_are_monotone(
            alpha in 0.01f64..=1.0,
            beta in 0.01f64..=1.0,
            eps in 0.0f64..0.99,
            a in 1usize..10,
            b in 1usize..10,
        ) {
            let p = params(30, 0.01, alpha, beta, eps, 0.0);
            let sa = success_prob_active(a, b, &p).unwrap();
            prop_assert!(success_prob_active(a + 1, b, &p).unwrap() <= sa);
            prop_assert!(success_prob_active(a, b + 1, &p).unwrap() <= sa);
            let sb = success_prob_backoff(a, b, &p).unwrap();
            prop_assert!(success_prob_backoff(a + 1, b, &p).unwrap() <= sb);
            prop_assert!(success_prob_backoff(a, b + 1, &p).unwrap() <= sb);
        }
    }
}

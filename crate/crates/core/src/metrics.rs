//! Steady-state goodput and per-node power.

use serde::{Deserialize, Serialize};

use crate::chain::{Kernel, StateSpace};
use crate::params::SystemParams;
use crate::stationary::StationaryDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Novel packets delivered per slot.
    pub goodput: f64,
    /// Average power per node, in watts.
    pub power: f64,
    pub mean_active: f64,
    pub mean_collided: f64,
    pub mean_mistaken: f64,
    pub mean_idle: f64,
}

impl MetricsReport {
    pub fn compute(pi: &StationaryDistribution, space: &StateSpace, kernel: &Kernel) -> Self {
        let n = space.n_sensors();
        let mut report = MetricsReport {
            goodput: goodput_with(pi, space, kernel),
            power: power_with(pi, space, kernel.params()),
            mean_active: 0.0,
            mean_collided: 0.0,
            mean_mistaken: 0.0,
            mean_idle: 0.0,
        };
        for (idx, s) in space.iter() {
            let w = pi.pi[idx];
            report.mean_active += w * s.a as f64;
            report.mean_collided += w * s.c as f64;
            report.mean_mistaken += w * s.m as f64;
            report.mean_idle += w * s.idle(n) as f64;
        }
        report
    }

    /// Rate at which anomalies are generated, `λ·E[I + m]`. Equals the goodput
    /// in steady state.
    pub fn arrival_rate(&self, lambda: f64) -> f64 {
        lambda * (self.mean_idle + self.mean_mistaken)
    }
}

/// Expected novel successes per slot under `pi`.
pub fn goodput(pi: &StationaryDistribution, params: &SystemParams) -> f64 {
    let space = StateSpace::new(params.n_sensors);
    goodput_with(pi, &space, &Kernel::new(params))
}

/// Expected per-node power in watts under `pi`.
pub fn power(pi: &StationaryDistribution, params: &SystemParams) -> f64 {
    power_with(pi, &StateSpace::new(params.n_sensors), params)
}

pub(crate) fn goodput_with(pi: &StationaryDistribution, space: &StateSpace, kernel: &Kernel) -> f64 {
    let n = space.n_sensors();
    space
        .iter()
        .filter(|&(idx, _)| pi.pi[idx] > 0.0)
        .map(|(idx, s)| {
            let mut novel = 0.0;
            kernel.for_each_event(s, n, |case, p, _| {
                if case.kind.is_novel_success() {
                    novel += p;
                }
            });
            pi.pi[idx] * novel
        })
        .sum()
}

/// Transmitter count per slot is `(c+m)β + (a + Iλ)α` in expectation: backoff
/// nodes transmit with β, while already-active nodes and fresh activations
/// transmit with α.
pub(crate) fn power_with(pi: &StationaryDistribution, space: &StateSpace, params: &SystemParams) -> f64 {
    let n = space.n_sensors();
    let transmitters: f64 = space
        .iter()
        .map(|(idx, s)| {
            let fresh = s.idle(n) as f64 * params.lambda;
            pi.pi[idx] * (s.backoff() as f64 * params.beta + (s.a as f64 + fresh) * params.alpha)
        })
        .sum();
    params.energy_per_slot / (n as f64 * params.slot_duration) * transmitters
}

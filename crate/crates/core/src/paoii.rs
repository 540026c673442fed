//! Distribution of the peak AoII of a freshly generated anomaly.
//!
//! One node, the tagged node, is followed from the slot in which it detects
//! an anomaly until the gateway receives its report. The remaining `N − 1`
//! nodes are described by their own aggregate counts; the tagged node is kept
//! outside those counts, so its success probability in a slot is exact:
//! `(1−ε)·α·(1−α)^a'·(1−β)^b'` when active, where `a'`/`b'` are the *other*
//! active and backoff nodes after activations.
//!
//! Vectors and matrices are indexed by the full `N`-node state space. At step
//! `t = 1` a row `s` is the slot-start state in which the tagged node is still
//! counted as idle (active mode) or mistaken (backoff mode). For `t ≥ 2` it is
//! counted as active or collided. Columns always use the `t ≥ 2` convention.

use serde::{Deserialize, Serialize};

use crate::chain::{build_rows, Kernel, SparseMatrix, StateSpace, SystemState};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::stationary::StationaryDistribution;

/// Mode of the tagged node while its anomaly is unreported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaggedMode {
    Active,
    Backoff,
}

/// The first slot of an anomaly uses a different row convention from all
/// later ones; nothing else depends on `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    First,
    Later,
}

impl Step {
    pub fn of(t: usize) -> Step {
        assert!(t >= 1, "steps are counted from 1");
        if t == 1 {
            Step::First
        } else {
            Step::Later
        }
    }
}

/// State of the other `N − 1` nodes when the tagged node is in `mode` and the
/// system row is `s`, or `None` if `s` cannot host the tagged node.
pub fn others_state(s: SystemState, n: usize, step: Step, mode: TaggedMode) -> Option<SystemState> {
    let SystemState { a, c, m } = s;
    match (step, mode) {
        (Step::First, TaggedMode::Active) => (s.idle(n) >= 1).then_some(s),
        (Step::First, TaggedMode::Backoff) => (m >= 1).then(|| SystemState::new(a, c, m - 1)),
        (Step::Later, TaggedMode::Active) => (a >= 1).then(|| SystemState::new(a - 1, c, m)),
        (Step::Later, TaggedMode::Backoff) => (c >= 1).then(|| SystemState::new(a, c - 1, m)),
    }
}

/// Full-system state (`t ≥ 2` convention) with the tagged node added back.
pub fn with_tagged(others: SystemState, mode: TaggedMode) -> SystemState {
    match mode {
        TaggedMode::Active => SystemState::new(others.a + 1, others.c, others.m),
        TaggedMode::Backoff => SystemState::new(others.a, others.c + 1, others.m),
    }
}

/// Outcome for the others when the tagged node transmits.
enum TxOutcome {
    /// The tagged packet got through.
    Delivered(f64),
    /// Uplink error or collision; the tagged node ends up in backoff.
    Lost(SystemState, f64),
}

fn tagged_transmits(kernel: &Kernel, o: SystemState, n_others: usize, mut f: impl FnMut(TxOutcome)) {
    let idle = o.idle(n_others);
    let b = o.backoff();
    let eps = kernel.params().eps;
    let alpha = kernel.alpha_pmf();
    let beta = kernel.beta_pmf();
    for i in 0..=idle {
        for j in 0..=o.m {
            let z = kernel.zeta(idle, o.m, i, j);
            if z == 0.0 {
                continue;
            }
            let act = o.a + i;
            let after = SystemState::new(act, o.c + j, o.m - j);
            let silent = alpha.pmf(act, 0) * beta.pmf(b, 0) * z;
            f(TxOutcome::Delivered((1.0 - eps) * silent));
            f(TxOutcome::Lost(after, eps * silent));
            for k in 0..=act {
                let l_min = usize::from(k == 0);
                if l_min > b {
                    continue;
                }
                let p = alpha.pmf(act, k) * kernel.beta_tail(b, l_min) * z;
                f(TxOutcome::Lost(SystemState::new(act - k, after.c + k, after.m), p));
            }
        }
    }
}

fn tx_prob(params: &SystemParams, mode: TaggedMode) -> f64 {
    match mode {
        TaggedMode::Active => params.alpha,
        TaggedMode::Backoff => params.beta,
    }
}

/// Probability that a tagged node in `mode` is delivered this slot, given
/// the other nodes are in `o` at slot start.
fn delivery_prob(kernel: &Kernel, o: SystemState, n_others: usize, mode: TaggedMode) -> f64 {
    let mut delivered = 0.0;
    tagged_transmits(kernel, o, n_others, |out| {
        if let TxOutcome::Delivered(p) = out {
            delivered += p;
        }
    });
    tx_prob(kernel.params(), mode) * delivered
}

/// Success vectors `η` (tagged active) and `ν` (tagged in backoff).
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedVectors {
    pub eta: Vec<f64>,
    pub nu: Vec<f64>,
}

/// Joint one-slot matrices of the tagged chain.
///
/// `u[s][s']`: tagged stays active, not delivered, system moves to `s'`.
/// `v[s][s']`: tagged moves from active to backoff.
/// `w[s][s']`: tagged stays in backoff, not delivered.
#[derive(Debug, Clone)]
pub struct TaggedMatrices {
    pub u: SparseMatrix,
    pub v: SparseMatrix,
    pub w: SparseMatrix,
}

pub fn tagged_success_vectors(space: &StateSpace, params: &SystemParams, t: usize) -> TaggedVectors {
    build_vectors(space, &Kernel::new(params), Step::of(t))
}

pub fn tagged_transition_matrices(space: &StateSpace, params: &SystemParams, t: usize) -> TaggedMatrices {
    build_matrices(space, &Kernel::new(params), Step::of(t))
}

fn build_vectors(space: &StateSpace, kernel: &Kernel, step: Step) -> TaggedVectors {
    let n = space.n_sensors();
    let vector = |mode| {
        space
            .states()
            .iter()
            .map(|&s| match others_state(s, n, step, mode) {
                Some(o) => delivery_prob(kernel, o, n - 1, mode),
                None => 0.0,
            })
            .collect()
    };
    TaggedVectors { eta: vector(TaggedMode::Active), nu: vector(TaggedMode::Backoff) }
}

fn build_matrices(space: &StateSpace, kernel: &Kernel, step: Step) -> TaggedMatrices {
    let n = space.n_sensors();
    let len = space.len();
    let params = kernel.params();

    let stay = |mode: TaggedMode| {
        let quiet = 1.0 - tx_prob(params, mode);
        build_rows(len, len, move |r, acc| {
            let Some(o) = others_state(space.state(r), n, step, mode) else {
                return;
            };
            if quiet > 0.0 {
                kernel.for_each_event(o, n - 1, |_, p, next| {
                    acc.add(space.index(with_tagged(next, mode)), quiet * p);
                });
            }
            if mode == TaggedMode::Backoff {
                let tx = params.beta;
                tagged_transmits(kernel, o, n - 1, |out| {
                    if let TxOutcome::Lost(next, p) = out {
                        if p > 0.0 {
                            acc.add(space.index(with_tagged(next, mode)), tx * p);
                        }
                    }
                });
            }
        })
    };
    let demote = build_rows(len, len, |r, acc| {
        let Some(o) = others_state(space.state(r), n, step, TaggedMode::Active) else {
            return;
        };
        tagged_transmits(kernel, o, n - 1, |out| {
            if let TxOutcome::Lost(next, p) = out {
                if p > 0.0 {
                    acc.add(space.index(with_tagged(next, TaggedMode::Backoff)), params.alpha * p);
                }
            }
        });
    });
    TaggedMatrices { u: stay(TaggedMode::Active), v: demote, w: stay(TaggedMode::Backoff) }
}

/// Both step conventions, built once per parameter set.
#[derive(Debug, Clone)]
pub struct TaggedChain {
    first: (TaggedVectors, TaggedMatrices),
    later: (TaggedVectors, TaggedMatrices),
}

impl TaggedChain {
    pub fn new(space: &StateSpace, kernel: &Kernel) -> Self {
        let make = |step| (build_vectors(space, kernel, step), build_matrices(space, kernel, step));
        Self { first: make(Step::First), later: make(Step::Later) }
    }

    pub fn vectors(&self, step: Step) -> &TaggedVectors {
        match step {
            Step::First => &self.first.0,
            Step::Later => &self.later.0,
        }
    }

    pub fn matrices(&self, step: Step) -> &TaggedMatrices {
        match step {
            Step::First => &self.first.1,
            Step::Later => &self.later.1,
        }
    }
}

/// Where fresh anomalies appear: `p_pkt(s)` is the probability that a new
/// anomaly is born in a slot starting in `s`, and `p_id(s)` the probability
/// that it was detected by an idle (rather than mistaken) node.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyPosterior {
    pub p_pkt: Vec<f64>,
    pub p_id: Vec<f64>,
}

pub fn anomaly_posterior(
    pi: &StationaryDistribution,
    space: &StateSpace,
    params: &SystemParams,
) -> Result<AnomalyPosterior> {
    if params.lambda <= 0.0 {
        return Err(Error::domain("anomaly posterior is undefined when lambda = 0"));
    }
    let n = space.n_sensors();
    let mut p_pkt = Vec::with_capacity(space.len());
    let mut p_id = Vec::with_capacity(space.len());
    for (idx, s) in space.iter() {
        let idle = s.idle(n);
        let exposed = (idle + s.m) as f64;
        p_pkt.push(pi.pi[idx] * exposed * params.lambda);
        p_id.push(if exposed > 0.0 { idle as f64 / exposed } else { 0.0 });
    }
    let total: f64 = p_pkt.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::domain("no state admits new anomalies under pi"));
    }
    p_pkt.iter_mut().for_each(|v| *v /= total);
    Ok(AnomalyPosterior { p_pkt, p_id })
}

/// Joint law of the system state and the tagged node's mode at step `t`,
/// restricted to the event that the anomaly is still unreported.
#[derive(Debug, Clone)]
pub struct TaggedContext {
    pub t: usize,
    pub p_act: Vec<f64>,
    pub p_bk: Vec<f64>,
}

impl TaggedContext {
    pub fn new(posterior: &AnomalyPosterior) -> Self {
        let p_act = posterior.p_pkt.iter().zip(&posterior.p_id).map(|(p, id)| p * id).collect();
        let p_bk = posterior.p_pkt.iter().zip(&posterior.p_id).map(|(p, id)| p * (1.0 - id)).collect();
        Self { t: 1, p_act, p_bk }
    }

    /// `P(θ ≥ t)`.
    pub fn remaining(&self) -> f64 {
        self.p_act.iter().sum::<f64>() + self.p_bk.iter().sum::<f64>()
    }

    /// Advances one slot and returns `P(θ = t)` for the slot just played.
    pub fn step(&mut self, chain: &TaggedChain) -> f64 {
        let step = Step::of(self.t);
        let vec = chain.vectors(step);
        let mats = chain.matrices(step);
        let mass = dot(&self.p_act, &vec.eta) + dot(&self.p_bk, &vec.nu);
        let mut act = mats.u.left_mul(&self.p_act);
        let mut bk = mats.v.left_mul(&self.p_act);
        mats.w.left_mul_acc(&self.p_bk, &mut bk);
        std::mem::swap(&mut self.p_act, &mut act);
        std::mem::swap(&mut self.p_bk, &mut bk);
        self.t += 1;
        mass
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Truncated PMF of the peak AoII, in slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaoiiPmf {
    /// `mass[t - 1] = P(θ = t)`.
    pub mass: Vec<f64>,
    /// `P(θ > mass.len())`, the probability not accounted for.
    pub tail: f64,
    pub horizon: usize,
    pub tail_tol: f64,
    /// Set when the horizon was hit before the tail dropped below `tail_tol`.
    pub truncated: bool,
    pub slot_duration: f64,
}

impl PaoiiPmf {
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// `P(θ ≤ t)`.
    pub fn cdf(&self, t: usize) -> f64 {
        self.mass.iter().take(t).sum()
    }

    /// Running CDF, `cdf[t - 1] = P(θ ≤ t)`.
    pub fn cumulative(&self) -> Vec<f64> {
        self.mass
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    /// Mean of the truncated distribution, in slots.
    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }

    pub fn slots_to_seconds(&self, slots: f64) -> f64 {
        slots * self.slot_duration
    }
}

pub const DEFAULT_HORIZON: usize = 10_000;
pub const DEFAULT_TAIL_TOL: f64 = 1e-9;

/// Runs the tagged recursion from the stationary posterior until the
/// unreported mass drops below `tail_tol` or `t_max` slots have been played.
pub fn paoii_pmf(pi: &StationaryDistribution, params: &SystemParams, t_max: usize, tail_tol: f64) -> Result<PaoiiPmf> {
    let space = StateSpace::new(params.n_sensors);
    let kernel = Kernel::new(params);
    let chain = TaggedChain::new(&space, &kernel);
    paoii_pmf_with(pi, &space, &chain, params, t_max, tail_tol)
}

pub fn paoii_pmf_with(
    pi: &StationaryDistribution,
    space: &StateSpace,
    chain: &TaggedChain,
    params: &SystemParams,
    t_max: usize,
    tail_tol: f64,
) -> Result<PaoiiPmf> {
    if t_max == 0 {
        return Err(Error::domain("t_max must be at least 1"));
    }
    let posterior = anomaly_posterior(pi, space, params)?;
    let mut ctx = TaggedContext::new(&posterior);
    let mut mass = Vec::new();
    let mut tail = ctx.remaining();
    while mass.len() < t_max {
        mass.push(ctx.step(chain));
        tail = ctx.remaining();
        if tail < tail_tol {
            break;
        }
    }
    let truncated = tail >= tail_tol;
    if truncated {
        log::debug!("peak AoII tail {tail:e} above {tail_tol:e} at horizon {t_max}");
    }
    Ok(PaoiiPmf { mass, tail, horizon: t_max, tail_tol, truncated, slot_duration: params.slot_duration })
}

/// Smallest `t` with `P(θ ≤ t) ≥ q`.
pub fn paoii_quantile(pmf: &PaoiiPmf, q: f64) -> Result<usize> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("quantile level {q} outside (0, 1)")));
    }
    let mut acc = 0.0;
    for (i, p) in pmf.mass.iter().enumerate() {
        acc += p;
        if acc >= q {
            return Ok(i + 1);
        }
    }
    Err(Error::QuantileOutOfRange { q, certified: acc })
}

/// Quantile with linear interpolation of the CDF between integer slots; a
/// continuous surrogate of [`paoii_quantile`] for optimization.
pub fn paoii_quantile_interpolated(pmf: &PaoiiPmf, q: f64) -> Result<f64> {
    let t = paoii_quantile(pmf, q)?;
    let below = pmf.cdf(t - 1);
    let step = pmf.mass[t - 1];
    Ok((t - 1) as f64 + (q - below) / step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_transition_matrix;
    use crate::stationary::solve_stationary;

    fn params(n: usize, alpha: f64, beta: f64, eps: f64, psi: f64) -> SystemParams {
        SystemParams { n_sensors: n, lambda: 0.02, alpha, beta, eps, psi, ..Default::default() }
    }

    #[test]
    fn lone_node_first_slot() {
        let p = params(1, 0.9, 0.5, 0.1, 0.1);
        let space = StateSpace::new(1);
        let v = tagged_success_vectors(&space, &p, 1);
        let idle = space.index_of(SystemState::new(0, 0, 0)).unwrap();
        assert!((v.eta[idle] - 0.81).abs() < 1e-15);
        let mistaken = space.index_of(SystemState::new(0, 0, 1)).unwrap();
        assert!((v.nu[mistaken] - 0.45).abs() < 1e-15);
        assert_eq!(v.eta[mistaken], 0.0);
    }

    #[test]
    fn posterior_for_single_node() {
        let p = params(1, 0.9, 0.5, 0.1, 0.1);
        let space = StateSpace::new(1);
        let m = build_transition_matrix(&space, &p);
        let pi = solve_stationary(&m).unwrap();
        let post = anomaly_posterior(&pi, &space, &p).unwrap();
        for (idx, s) in space.iter() {
            if s.a + s.c > 0 {
                assert_eq!(post.p_pkt[idx], 0.0);
            }
        }
        assert_eq!(post.p_id[space.index_of(SystemState::new(0, 0, 0)).unwrap()], 1.0);
        assert_eq!(post.p_id[space.index_of(SystemState::new(0, 0, 1)).unwrap()], 0.0);
        let zero = SystemParams { lambda: 0.0, ..p };
        assert!(anomaly_posterior(&pi, &space, &zero).is_err());
    }

    #[test]
    fn rows_conserve_probability() {
        for step in [Step::First, Step::Later] {
            let t = if step == Step::First { 1 } else { 2 };
            let p = params(5, 0.7, 0.2, 0.1, 0.2);
            let space = StateSpace::new(5);
            let vec = tagged_success_vectors(&space, &p, t);
            let mats = tagged_transition_matrices(&space, &p, t);
            for (r, s) in space.iter() {
                if others_state(s, 5, step, TaggedMode::Active).is_some() {
                    let total = mats.u.row_sum(r) + mats.v.row_sum(r) + vec.eta[r];
                    assert!((total - 1.0).abs() < 1e-12, "{step:?} {s}: {total}");
                } else {
                    assert_eq!(mats.u.row_sum(r) + mats.v.row_sum(r) + vec.eta[r], 0.0);
                }
                if others_state(s, 5, step, TaggedMode::Backoff).is_some() {
                    let total = mats.w.row_sum(r) + vec.nu[r];
                    assert!((total - 1.0).abs() < 1e-12, "{step:?} {s}: {total}");
                }
            }
        }
    }

    #[test]
    fn quantile_contract() {
        let certain =
            PaoiiPmf { mass: vec![1.0], tail: 0.0, horizon: 1, tail_tol: 1e-9, truncated: false, slot_duration: 0.05 };
        for q in [0.01, 0.5, 0.99] {
            assert_eq!(paoii_quantile(&certain, q).unwrap(), 1);
        }
        let geometric: Vec<f64> = (0..20).map(|k| 0.81 * 0.19f64.powi(k)).collect();
        let pmf = PaoiiPmf { mass: geometric, ..certain.clone() };
        assert_eq!(paoii_quantile(&pmf, 0.95).unwrap(), 2);
        assert_eq!(paoii_quantile(&pmf, 0.81).unwrap(), 1);
        let short = PaoiiPmf { mass: vec![0.5, 0.2], tail: 0.3, ..certain };
        match paoii_quantile(&short, 0.9) {
            Err(Error::QuantileOutOfRange { certified, .. }) => assert!((certified - 0.7).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
        assert!(paoii_quantile(&short, 1.0).is_err());
    }

    #[test]
    fn interpolated_quantile_brackets_integer_quantile() {
        let pmf = PaoiiPmf {
            mass: vec![0.5, 0.25, 0.25],
            tail: 0.0,
            horizon: 3,
            tail_tol: 1e-9,
            truncated: false,
            slot_duration: 1.0,
        };
        let x = paoii_quantile_interpolated(&pmf, 0.625).unwrap();
        assert!((x - 1.5).abs() < 1e-15);
        assert_eq!(paoii_quantile(&pmf, 0.625).unwrap(), 2);
    }

    #[test]
    fn lone_node_perfect_channel_is_geometric() {
        let p = SystemParams {
            n_sensors: 1,
            lambda: 0.05,
            alpha: 0.6,
            beta: 0.3,
            eps: 0.0,
            psi: 0.0,
            ..Default::default()
        };
        let space = StateSpace::new(1);
        let pi = solve_stationary(&build_transition_matrix(&space, &p)).unwrap();
        let pmf = paoii_pmf(&pi, &p, 200, 1e-14).unwrap();
        for (t, mass) in pmf.mass.iter().enumerate() {
            let expected = 0.6 * 0.4f64.powi(t as i32);
            assert!((mass - expected).abs() < 1e-15, "t={} {} vs {}", t + 1, mass, expected);
        }
        assert!(!pmf.truncated);
    }
}

//! Node-level Monte Carlo simulation of the protocol.
//!
//! Every slot is played in a fixed order:
//!
//! 1. arrivals: idle nodes become active and mistaken nodes become collided,
//!    each with probability λ;
//! 2. active nodes transmit with probability α, collided and mistaken nodes
//!    with probability β;
//! 3. one transmitter gets through with probability 1 − ε, two or more collide
//!    and every active transmitter becomes collided;
//! 4. a delivered node hears the ACK with probability 1 − ψ and goes idle,
//!    otherwise it becomes (or stays) mistaken; a lone transmitter hit by an
//!    uplink error goes to (or stays in) backoff;
//! 5. nodes still holding an unreported anomaly age by one slot.
//!
//! A PAoII sample is taken when the gateway receives a novel report, whether
//! or not the ACK makes it back.

mod ecdf;

pub use ecdf::{dkw_check, dkw_epsilon, dkw_tail_probability, empirical_cdf, DkwReport, Ecdf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{EventCase, EventKind, SystemState};
use crate::params::SystemParams;

pub const DEFAULT_WARMUP: u64 = 1_000;
pub const DEFAULT_SLOTS: u64 = 100_000;

/// Replications are dispatched in fixed-size batches so the replication count
/// needed for a sample target does not depend on the thread count.
const BATCH: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeMode {
    Idle,
    Active,
    Collided,
    Mistaken,
}

impl NodeMode {
    /// The node holds an anomaly the gateway does not know about.
    pub fn holds_anomaly(self) -> bool {
        matches!(self, NodeMode::Active | NodeMode::Collided)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeState {
    pub mode: NodeMode,
    /// Slots the current anomaly has been unreported, counting the current
    /// one; zero when the node holds no anomaly.
    pub aoii: u32,
    /// Slot in which the current anomaly was detected.
    pub born: u64,
}

impl NodeState {
    pub const IDLE: NodeState = NodeState { mode: NodeMode::Idle, aoii: 0, born: 0 };

    pub fn with_mode(mode: NodeMode) -> Self {
        NodeState { mode, aoii: u32::from(mode.holds_anomaly()), born: 0 }
    }
}

/// Aggregate counts of a node population.
pub fn aggregate(nodes: &[NodeState]) -> SystemState {
    let mut s = SystemState::new(0, 0, 0);
    for node in nodes {
        match node.mode {
            NodeMode::Active => s.a += 1,
            NodeMode::Collided => s.c += 1,
            NodeMode::Mistaken => s.m += 1,
            NodeMode::Idle => {}
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotEvent {
    Silence,
    Delivered { from: NodeMode, acked: bool },
    LoneLoss { from: NodeMode },
    Collision { active: usize, backoff: usize },
}

/// What happened in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotOutcome {
    pub idle_arrivals: usize,
    pub mistaken_arrivals: usize,
    pub transmitters: usize,
    pub event: SlotEvent,
    /// `(peak AoII, birth slot)` when a novel report reached the gateway.
    pub report: Option<(u32, u64)>,
}

impl SlotOutcome {
    /// The aggregate-chain event this slot corresponds to.
    pub fn event_case(&self) -> EventCase {
        let (i, j) = (self.idle_arrivals, self.mistaken_arrivals);
        match self.event {
            SlotEvent::Silence => EventCase::new(EventKind::Silence, i, j),
            SlotEvent::Delivered { from, acked } => {
                let kind = match (from, acked) {
                    (NodeMode::Active, true) => EventKind::ActiveAcked,
                    (NodeMode::Active, false) => EventKind::ActiveAckLost,
                    (NodeMode::Collided, true) => EventKind::CollidedAcked,
                    (NodeMode::Collided, false) => EventKind::CollidedAckLost,
                    (NodeMode::Mistaken, true) => EventKind::MistakenAcked,
                    (NodeMode::Mistaken, false) => EventKind::MistakenAckLost,
                    (NodeMode::Idle, _) => unreachable!("idle nodes never transmit"),
                };
                EventCase::new(kind, i, j)
            }
            SlotEvent::LoneLoss { from: NodeMode::Active } => EventCase::new(EventKind::ActiveLoss, i, j),
            SlotEvent::LoneLoss { .. } => EventCase::new(EventKind::BackoffLoss, i, j),
            SlotEvent::Collision { active, .. } => EventCase::collision(i, j, active),
        }
    }
}

/// Plays one slot. `slot` stamps the birth time of new anomalies; `tx`
/// is scratch space for transmitter indices.
pub fn step<R: Rng + ?Sized>(
    nodes: &mut [NodeState],
    params: &SystemParams,
    slot: u64,
    rng: &mut R,
    tx: &mut Vec<usize>,
) -> SlotOutcome {
    let mut idle_arrivals = 0;
    let mut mistaken_arrivals = 0;
    for node in nodes.iter_mut() {
        let next = match node.mode {
            NodeMode::Idle => NodeMode::Active,
            NodeMode::Mistaken => NodeMode::Collided,
            _ => continue,
        };
        if rng.random::<f64>() < params.lambda {
            if node.mode == NodeMode::Idle {
                idle_arrivals += 1;
            } else {
                mistaken_arrivals += 1;
            }
            *node = NodeState { mode: next, aoii: 1, born: slot };
        }
    }

    tx.clear();
    for (idx, node) in nodes.iter().enumerate() {
        let p = match node.mode {
            NodeMode::Idle => continue,
            NodeMode::Active => params.alpha,
            NodeMode::Collided | NodeMode::Mistaken => params.beta,
        };
        if rng.random::<f64>() < p {
            tx.push(idx);
        }
    }

    let mut report = None;
    let event = match tx.len() {
        0 => SlotEvent::Silence,
        1 => {
            let node = &mut nodes[tx[0]];
            let from = node.mode;
            if rng.random::<f64>() < params.eps {
                if from == NodeMode::Active {
                    node.mode = NodeMode::Collided;
                }
                SlotEvent::LoneLoss { from }
            } else {
                let acked = rng.random::<f64>() >= params.psi;
                if from.holds_anomaly() {
                    report = Some((node.aoii, node.born));
                }
                node.mode = if acked { NodeMode::Idle } else { NodeMode::Mistaken };
                node.aoii = 0;
                SlotEvent::Delivered { from, acked }
            }
        }
        _ => {
            let mut active = 0;
            for &idx in tx.iter() {
                if nodes[idx].mode == NodeMode::Active {
                    nodes[idx].mode = NodeMode::Collided;
                    active += 1;
                }
            }
            SlotEvent::Collision { active, backoff: tx.len() - active }
        }
    };

    for node in nodes.iter_mut() {
        if node.mode.holds_anomaly() {
            node.aoii += 1;
        }
    }

    SlotOutcome { idle_arrivals, mistaken_arrivals, transmitters: tx.len(), event, report }
}

/// Tallies of one replication, measured after warm-up.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationTally {
    pub novel_successes: u64,
    pub stale_successes: u64,
    /// Node-slots spent transmitting.
    pub transmissions: u64,
    pub slots: u64,
    /// Anomalies born after warm-up.
    pub generated: u64,
    /// Post-warm-up anomalies still unreported at the horizon.
    pub outstanding: u64,
    pub samples: u64,
}

impl ReplicationTally {
    pub fn goodput(&self) -> f64 {
        self.novel_successes as f64 / self.slots as f64
    }

    pub fn power(&self, params: &SystemParams) -> f64 {
        self.transmissions as f64 * params.energy_per_slot
            / (params.n_sensors as f64 * self.slots as f64 * params.slot_duration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub slots_per_replication: u64,
    pub warmup: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { slots_per_replication: DEFAULT_SLOTS, warmup: DEFAULT_WARMUP }
    }
}

/// Output of a simulation campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub paoii_samples: Vec<u32>,
    pub novel_successes: u64,
    pub stale_successes: u64,
    pub transmitting_slots: u64,
    pub total_slots: u64,
    pub master_seed: u64,
    pub replications: u64,
    pub per_replication: Vec<ReplicationTally>,
}

impl SampleSet {
    pub fn goodput(&self) -> f64 {
        self.novel_successes as f64 / self.total_slots as f64
    }

    pub fn power(&self, params: &SystemParams) -> f64 {
        self.transmitting_slots as f64 * params.energy_per_slot
            / (params.n_sensors as f64 * self.total_slots as f64 * params.slot_duration)
    }

    /// Standard error of a per-replication statistic (batch means).
    pub fn standard_error(&self, stat: impl Fn(&ReplicationTally) -> f64) -> f64 {
        let r = self.per_replication.len();
        if r < 2 {
            return f64::INFINITY;
        }
        let xs: Vec<f64> = self.per_replication.iter().map(stat).collect();
        let mean = xs.iter().sum::<f64>() / r as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
        (var / r as f64).sqrt()
    }
}

/// Random stream of replication `index`: ChaCha8 keyed by the master seed,
/// with the replication index as the stream id.
pub fn replication_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

fn run_replication(
    params: &SystemParams,
    master_seed: u64,
    index: u64,
    cfg: &SimConfig,
) -> (Vec<u32>, ReplicationTally) {
    let mut rng = replication_rng(master_seed, index);
    let mut nodes = vec![NodeState::IDLE; params.n_sensors];
    let mut tx = Vec::with_capacity(params.n_sensors);
    let mut samples = Vec::new();
    let mut tally = ReplicationTally::default();
    for slot in 0..cfg.slots_per_replication {
        let measured = slot >= cfg.warmup;
        let out = step(&mut nodes, params, slot, &mut rng, &mut tx);
        if measured {
            tally.slots += 1;
            tally.transmissions += out.transmitters as u64;
            tally.generated += (out.idle_arrivals + out.mistaken_arrivals) as u64;
            if let SlotEvent::Delivered { from, .. } = out.event {
                if from.holds_anomaly() {
                    tally.novel_successes += 1;
                } else {
                    tally.stale_successes += 1;
                }
            }
        }
        if let Some((peak, born)) = out.report {
            if born >= cfg.warmup {
                samples.push(peak);
            }
        }
    }
    tally.samples = samples.len() as u64;
    tally.outstanding = nodes.iter().filter(|n| n.mode.holds_anomaly() && n.born >= cfg.warmup).count() as u64;
    (samples, tally)
}

fn merge(master_seed: u64, parts: Vec<(Vec<u32>, ReplicationTally)>) -> SampleSet {
    let mut set = SampleSet {
        paoii_samples: Vec::with_capacity(parts.iter().map(|p| p.0.len()).sum()),
        novel_successes: 0,
        stale_successes: 0,
        transmitting_slots: 0,
        total_slots: 0,
        master_seed,
        replications: parts.len() as u64,
        per_replication: Vec::with_capacity(parts.len()),
    };
    for (samples, tally) in parts {
        set.paoii_samples.extend(samples);
        set.novel_successes += tally.novel_successes;
        set.stale_successes += tally.stale_successes;
        set.transmitting_slots += tally.transmissions;
        set.total_slots += tally.slots;
        set.per_replication.push(tally);
    }
    set
}

/// Runs `replications` independent replications in parallel. The result is
/// identical for any thread count.
pub fn run(params: &SystemParams, master_seed: u64, replications: u64, slots_per_replication: u64) -> SampleSet {
    let cfg = SimConfig { slots_per_replication, ..Default::default() };
    run_with(params, master_seed, replications, &cfg)
}

pub fn run_with(params: &SystemParams, master_seed: u64, replications: u64, cfg: &SimConfig) -> SampleSet {
    assert!(replications >= 1, "at least one replication is required");
    let parts = (0..replications).into_par_iter().map(|r| run_replication(params, master_seed, r, cfg)).collect();
    merge(master_seed, parts)
}

/// Adds replications until at least `target` PAoII samples exist, then keeps
/// the first `target` of them in replication order. Gives up (returning what
/// was collected) after `max_replications`.
pub fn run_for_samples(
    params: &SystemParams,
    master_seed: u64,
    target: usize,
    cfg: &SimConfig,
    max_replications: u64,
) -> SampleSet {
    let mut parts: Vec<(Vec<u32>, ReplicationTally)> = Vec::new();
    let mut collected = 0usize;
    while collected < target && (parts.len() as u64) < max_replications {
        let start = parts.len() as u64;
        let end = (start + BATCH).min(max_replications);
        let batch: Vec<_> =
            (start..end).into_par_iter().map(|r| run_replication(params, master_seed, r, cfg)).collect();
        collected += batch.iter().map(|p| p.0.len()).sum::<usize>();
        parts.extend(batch);
    }
    let mut set = merge(master_seed, parts);
    set.paoii_samples.truncate(target);
    set
}

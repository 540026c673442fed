//! Protocol and channel constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All constants describing one system configuration.
///
/// Probabilities are per slot. `energy_per_slot` is the energy a node spends
/// in a slot where it transmits (packet plus ACK reception window).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n_sensors: usize,
    /// Per-slot anomaly probability at each sensor.
    pub lambda: f64,
    /// Transmit probability of an active node.
    pub alpha: f64,
    /// Transmit probability of a node in backoff.
    pub beta: f64,
    /// Uplink error probability for a lone transmission.
    pub eps: f64,
    /// ACK loss probability.
    pub psi: f64,
    /// Joules per transmitting slot.
    pub energy_per_slot: f64,
    /// Slot length in seconds.
    pub slot_duration: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            n_sensors: 20,
            lambda: 0.01,
            alpha: 0.9,
            beta: 0.1,
            eps: 0.1,
            psi: 0.1,
            energy_per_slot: 1e-3,
            slot_duration: 0.05,
        }
    }
}

impl SystemParams {
    /// Checks every field against its domain, naming the first offender.
    pub fn validate(&self) -> Result<()> {
        if self.n_sensors == 0 {
            return Err(Error::InvalidParam { field: "n_sensors", value: 0.0, reason: "must be at least 1" });
        }
        closed_unit("lambda", self.lambda)?;
        half_open_upper("alpha", self.alpha)?;
        half_open_upper("beta", self.beta)?;
        half_open_lower("eps", self.eps)?;
        half_open_lower("psi", self.psi)?;
        positive("energy_per_slot", self.energy_per_slot)?;
        positive("slot_duration", self.slot_duration)?;
        Ok(())
    }

    /// Aggregate load N·λ.
    pub fn load(&self) -> f64 {
        self.n_sensors as f64 * self.lambda
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

fn closed_unit(field: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParam { field, value: v, reason: "must lie in [0, 1]" })
    }
}

fn half_open_upper(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam { field, value: v, reason: "must lie in (0, 1]" })
    }
}

fn half_open_lower(field: &'static str, v: f64) -> Result<()> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParam { field, value: v, reason: "must lie in [0, 1)" })
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParam { field, value: v, reason: "must be positive and finite" })
    }
}

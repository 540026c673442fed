//! Peak age of incorrect information (PAoII) for reactive slotted ALOHA with
//! collisions, uplink errors and lossy ACK feedback.
//!
//! The crate has two independent engines:
//!
//! * an exact analysis built on the `<active, collided, mistaken>` Markov
//!   chain ([`chain`], [`stationary`], [`metrics`], [`paoii`]);
//! * a seeded node-level Monte Carlo simulator ([`sim`]).
//!
//! [`harness`] wires both into experiments (sweeps, validation,
//! optimization) and the `paoii` command-line tool.

pub mod chain;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod paoii;
pub mod params;
pub mod sim;
pub mod stationary;

mod analysis;

pub use analysis::Analysis;
pub use error::{Error, Result};
pub use params::SystemParams;

//! State space, event kernels and the transition matrix of the aggregate
//! `<active, collided, mistaken>` chain.

mod binomial;
mod events;
mod matrix;
mod state;

pub use binomial::{BinomialTable, Pascal};
pub use events::{activation_pmf, event_prob, success_prob_active, success_prob_backoff, EventCase, EventKind, Kernel};
pub(crate) use matrix::{build_rows, build_transition_matrix_with};
pub use matrix::{build_transition_matrix, SparseMatrix, TransitionMatrix};
pub use state::{StateSpace, SystemState};

/// All feasible states for the configured number of sensors.
pub fn enumerate_states(params: &crate::SystemParams) -> StateSpace {
    StateSpace::new(params.n_sensors)
}

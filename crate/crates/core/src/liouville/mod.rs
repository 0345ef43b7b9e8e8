//! Hamiltonian transport of phase-space densities and the reduced action-wave
//! system `(n, S)`.

mod action;
mod coherence;
mod transport;

pub use action::{
    action_cfl_limit, action_to_phase_space, evolve_action_wave, ActionState, DELTA_WIDTH_BINS,
};
pub(crate) use action::advance_action;
pub use coherence::{coherence_defect, CoherenceReport, Snapshot, Template};
pub use transport::{cfl_limit, liouville_evolve, liouville_step};
pub(crate) use transport::{kick_p, shear_x};

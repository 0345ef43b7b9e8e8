//! Deterministic solvers for phase-space densities and the waves they carry.
//!
//! The crate propagates one-dimensional phase-space distributions `f(x, p, t)`
//! under the Liouville and Fokker–Planck equations, evolves action waves
//! `(n, S)` through the continuity and Hamilton–Jacobi equations, builds Wigner
//! distributions from wave functions evolved by a split-operator Schrödinger
//! solver, and integrates the moment hierarchy that leads to thermal sound.
//! Most operations come paired with an independent route (ensembles, analytic
//! solutions, brute-force quadrature) so results can be cross-checked.
//!
//! Modules:
//! - [`grid`]: lattice, p↔k Fourier pairing, moments, CSV form of fields.
//! - [`liouville`]: phase-space advection, action waves, coherence diagnostics.
//! - [`wigner`]: wave functions, Wigner transform, TDSE, Glauber states, Madelung form.
//! - [`fokkerplanck`]: Fokker–Planck, Langevin ensembles, moment hierarchy,
//!   Smoluchowski limit, friction-modified Hamilton–Jacobi, thermal sound.
//! - [`variational`]: action and Hamiltonian functionals of `(n, S)` and their checks.

pub mod error;
pub mod fokkerplanck;
pub mod grid;
pub mod io;
pub mod liouville;
pub mod potential;
pub(crate) mod spectral;
pub(crate) mod stencil;
pub mod variational;
pub mod wigner;

pub use error::{Error, Result};
pub use grid::{Grid1D, KSpaceField, MomentFields, ParticleParams, PhaseSpaceField};
pub use potential::Potential;

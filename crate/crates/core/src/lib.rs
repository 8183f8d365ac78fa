//! Measurement-based preparation of large Fock states and Dicke states.
//!
//! A target mode (or spin ensemble) is coupled to a two-level ancilla that is
//! repeatedly measured. Choosing each free-evolution interval as a suitable
//! multiple of the target's Rabi half period turns every round into a
//! diagonal filter, and a handful of rounds with halving intervals acts as a
//! generalized parity measurement that concentrates population on the target.
//!
//! Modules:
//! - [`hilbert`]: states, filters, density matrices, ODE integration.
//! - [`fock`]: resonant Jaynes-Cummings protocol for Fock states.
//! - [`dispersive`]: the dispersive Ramsey-type baseline.
//! - [`open_system`]: Lindblad simulation of both Fock protocols.
//! - [`dicke`]: spin-star protocol for `|J, 0⟩` and Fisher information.
//! - [`analysis`]: minimum-round searches and scaling fits.
//! - [`experiment`]: configuration, sweeps and data files for the CLI.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dicke;
pub mod dispersive;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod hilbert;
pub mod open_system;
mod record;

pub use error::{Error, Result};
pub use record::RunRecord;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

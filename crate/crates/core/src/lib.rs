//! Phase response curves, perturbation projection vectors and phase-domain
//! macromodels for limit-cycle oscillators.
//!
//! The pipeline is: settle an oscillator on its limit cycle
//! ([`limit_cycle`]), sweep weak current impulses over one period to get the
//! phase response curve ([`prc`]), convert it to the perturbation projection
//! vector and cross-check against the adjoint solution ([`ppv`]), then use the
//! PPV to simulate injection locking and coupled networks in the phase domain
//! ([`phase_sim`]).
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynsys;
pub mod error;
pub mod fourier;
pub mod limit_cycle;
pub mod models;
pub mod phase_sim;
pub mod ppv;
pub mod prc;

pub use error::{Error, Result};

//! Simulation and verification toolkit for autonomous ticking clocks.
//!
//! A clock is a finite clockwork coupled to an `N_T + 1` state tick register
//! through a Lindbladian whose tick operators act as `J ⊗ O_R` on the joint
//! space. The crate builds those generators ([`clock`]), propagates states
//! and the number-resolved cascade ([`evolve`]), computes tick delay
//! functions, accuracies and Monte Carlo tick records ([`stats`]) and checks
//! the defining clock conditions on concrete instances ([`axioms`]).

pub mod axioms;
pub mod clock;
pub mod error;
pub mod evolve;
pub mod linalg;
pub mod par;
pub mod report;
pub mod stats;

pub use error::{Error, Result};

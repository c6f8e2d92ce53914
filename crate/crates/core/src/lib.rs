//! Simulator and verification suite for the two-dimensional Nordström-Vlasov system.
//!
//! A scalar wave field `phi` is coupled to a collisionless particle density
//! `f(t, x, p)` on a 2+2 dimensional phase space. The field is advanced by a
//! grid leapfrog scheme and can be recomputed independently from light-cone
//! integrals over the stored history.

pub mod characteristics;
pub mod error;
pub mod field_solver;
pub mod grid;
pub mod harness;
pub mod phase_geometry;
pub mod profiles;
pub mod quadrature;
pub mod retarded_evaluator;
pub mod sampling;
pub mod snapshot;
pub mod vec2;
pub mod vlasov_solver;

pub use error::{Error, Result};

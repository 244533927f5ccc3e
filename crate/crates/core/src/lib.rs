//! Numerical laboratory for boundary-preserving partially hyperbolic skew
//! products over hyperbolic toral automorphisms.
//!
//! The crate is organised bottom-up: [`torus`] handles the linear base,
//! [`fiber`] the one-dimensional interval maps, [`skew`] the coupled system,
//! [`experiments`] the desk-scale scans, and [`lab`] configuration and
//! report I/O.

pub mod experiments;
pub mod fiber;
pub mod intmat;
pub mod lab;
pub mod skew;
pub mod torus;

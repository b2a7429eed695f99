//! Quantum trajectories of one-dimensional free fermions under random
//! projective measurements of site occupations, together with the analytic
//! predictions (Gaussian scaling functions, Wiener-Hopf boundary solution and
//! one-loop renormalized formulas) used to cross-check them.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: tight-binding chain, single-particle eigenbasis, physical scales.
//! * [`state`]: pure Gaussian states stored as correlation matrices, with
//!   unitary evolution and Born-rule projective measurements.
//! * [`observables`]: pair correlator, particle-number cumulants, entanglement
//!   entropy, full counting statistics.
//! * [`trajectory`] and [`ensemble`]: Poisson-scheduled trajectories and
//!   reproducible parallel ensembles; [`domain_wall`] is the diffusion probe.
//! * [`theory`]: closed-form and quadrature-defined predictions.
//! * [`exact`]: brute-force Fock-space oracle for small chains.
//! * [`io`]: configuration files, CSV/JSON emission and run manifests.

pub mod domain_wall;
pub mod ensemble;
pub mod error;
pub mod exact;
pub mod io;
pub mod lattice;
pub mod observables;
pub mod state;
pub mod theory;
pub mod trajectory;

pub use error::{Error, Result};
pub use num_complex::Complex64;

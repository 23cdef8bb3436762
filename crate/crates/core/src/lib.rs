//! Simple exclusion process with random conductances on a segment.
//!
//! The crate covers the one-particle and Dirichlet eigenproblems, a monotone
//! grand coupling driven by corner-flip clocks, exact finite-state mixing
//! computations, and Monte Carlo estimators for the mixing-time bracket.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod experiments;
pub mod par;
pub mod profile;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use config::{Configuration, HeightFunction};
pub use error::{Error, Result};
pub use profile::{ConductanceProfile, ProfileKind, ProfileSpec};

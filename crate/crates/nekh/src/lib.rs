//! Desk-scale machinery for exponential stability of nearly integrable
//! Hamiltonian systems: resonance-lattice partitions, exponential-weighted
//! convolution sums with closed-form bounds, majorant calculus with exact
//! Burgers-type solutions, a truncated continuous-averaging integrator,
//! simultaneous Diophantine approximation, and fully explicit stability
//! constants, together with a symplectic harness that checks the predicted
//! bounds against real trajectories.

pub mod averaging;
pub mod config;
pub mod constants;
pub mod diophantine;
pub mod error;
pub mod grid;
pub mod harness;
pub mod lattice;
pub mod majorant;
pub mod model;
pub mod report;
pub mod sums;

pub use error::{Error, Result};

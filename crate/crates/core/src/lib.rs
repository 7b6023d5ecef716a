//! Local-hidden-variable feasibility for three-particle GHZ correlations, plus
//! a detector model for fourfold-coincidence experiments.
//!
//! - [`lhv`]: the four two-sided inequalities on `(E(A), E(B), E(C), E(ABC))`,
//!   an exact basic-solution feasibility oracle, and the symmetric witness.
//! - [`quantum`]: the GHZ state, Pauli-product expectations, Born sampling.
//! - [`detector`]: closed-form fourfold probabilities under efficiency `d` and
//!   dark-count probability `gamma`, the corrected conditional correlation, and
//!   sigma separations.
//! - [`montecarlo`]: seeded, chunked event-level simulation of the same model.

pub mod detector;
pub mod error;
pub mod lhv;
pub mod montecarlo;
pub mod quantum;

pub use error::{Error, Result};

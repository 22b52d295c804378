//! Offline decision-tree policy learning from adaptively collected
//! contextual-bandit data.
//!
//! The pipeline:
//!
//! 1. [`env`] supplies contexts and potential rewards.
//! 2. [`agent`] collects data with floored linear Thompson sampling and logs
//!    the propensity of every chosen arm.
//! 3. [`nuisance`] fits per-arm ridge outcome models on strictly past data.
//! 4. [`aipw`] turns each logged step into per-arm AIPW scores and reweights
//!    them with a pre-specified sequence `h_t`.
//! 5. [`treepolicy`] finds the exact best depth-`L` tree for the weighted
//!    scores.
//! 6. [`eval`] measures out-of-sample regret against the best tree in the
//!    class.
//!
//! [`experiment`] wires these together over replications and horizons.

pub mod agent;
pub mod aipw;
pub mod config;
pub mod env;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod nuisance;
pub mod treepolicy;

pub use error::{Error, ErrorKind, Result};

use rand::SeedableRng;

/// Reproducible stream used for every simulation.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

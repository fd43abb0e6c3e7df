//! Generalised gamma population model toolkit.
//!
//! Simulates exchangeable samples from a normalised generalised gamma prior
//! through its predictive urn scheme, runs the associated Moran-type
//! population dynamics and reduced cluster-count chains, integrates the
//! limiting and stationary diffusions, and provides the experiment harness
//! that compares rescaled chains against diffusion marginals.

pub mod convergence;
pub mod diffusion;
pub mod moran;
pub mod partition;
pub mod quad;
pub mod rng;
pub mod special;
pub mod weights;

pub use special::{SignedLog, SpecialError};
pub use weights::{GGParams, PYParams, WeightPair};

//! Closed-loop, information-driven sensor tasking for acquiring untracked
//! space objects.
//!
//! A single optical attributable seeds an admissible-region search set. The
//! set is carried as the intensity of a Gaussian-mixture CPHD filter whose
//! clutter model is a catalog of known objects. Each follow-up scan is chosen
//! by maximizing an expected Rényi divergence between the prior and posterior
//! CPHD, estimated with weighted nearest-neighbor particle densities.
//!
//! Module map:
//! - [`astro`]: frames, two-body dynamics, sites, angles-only measurements
//! - [`admissible`]: admissible-region grids and their Cartesian mixtures
//! - [`gmm`]: mixtures, the unscented transform, field-of-view splitting
//! - [`cphd`]: CPHD prediction and update with catalog clutter
//! - [`reward`]: particle Rényi-divergence rewards and action selection
//! - [`sim`]: scenarios, truth models, closed-loop runs and Monte-Carlo

pub mod admissible;
pub mod astro;
pub mod cphd;
pub mod error;
pub mod gmm;
pub mod linalg;
pub mod reward;
pub mod sim;

pub use error::{Error, Result};

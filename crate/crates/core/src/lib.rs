//! Estimation of coordinate-wise monotone tensors observed under unknown
//! per-axis permutations, plus the reduction toolkit and Monte-Carlo
//! harness used to study them.
//!
//! Module map:
//! - [`tensor`]: balanced tensors, permutations, losses, text format.
//! - [`order`]: ordered partitions, comparison graphs, antichain levels.
//! - [`iso`]: PAVA, weighted lattice projection, min-max oracle, block operators.
//! - [`estimators`]: Mirsky partition, Borda count, CRL and least-squares estimators.
//! - [`synth`]: ground-truth generators and noisy instances.
//! - [`reduction`]: hypergraphs, Gaussian rejection kernel, detection test.
//! - [`oracle`]: exhaustive references for small inputs.
//! - [`harness`]: Monte-Carlo risk engine, rate fitting, config format.

pub mod error;
pub mod estimators;
pub mod harness;
pub mod iso;
pub mod numeric;
pub mod oracle;
pub mod order;
pub mod reduction;
pub mod rng;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};

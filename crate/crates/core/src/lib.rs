//! Generalized bidirectional Helmholtz machines.
//!
//! * [`info_metrics`]: exact divergences between discrete distributions.
//! * [`stein_sim`]: exact hypothesis-testing error exponents by the method of types.
//! * [`sbn`]: conditional Bernoulli (sigmoid belief network) layers.
//! * [`bihm`]: the paired generative/recognition model, importance-sampled
//!   bounds, gradient estimators and an exhaustive-enumeration oracle.
//! * [`trainer`]: Adam + L1 training loop, evaluation and checkpoints.
//! * [`data_io`]: MNIST IDX parsing, binarization and splits.

pub mod bihm;
pub mod data_io;
pub mod error;
pub mod info_metrics;
pub mod numeric;
pub mod rng;
pub mod sbn;
pub mod stein_sim;
pub mod trainer;

pub use error::{Error, Result};
pub use rng::RngState;

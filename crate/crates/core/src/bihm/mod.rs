pub mod checks;
mod gradient;
mod layerwise;
mod model;
pub mod objective;
pub mod oracle;
mod particles;

pub use gradient::{accumulate_grad, accumulate_with_coefficients, grad_loss};
pub use layerwise::{layerwise_tempered_bound, layerwise_terms, BoundReport, LayerTemperatures, LayerTerm};
pub use model::{BihmModel, GradientSet, LayerStates, Side, TensorMut, TensorRef};
pub use objective::{Coefficients, Objective, DEFAULT_ALPHA};
pub use oracle::{enumerate, estimate_nll, exact_oracle, expected_particle_loss, Enumeration, OracleRecord};
pub use particles::{evaluate, log_weights, sample_q, sample_q_with_eval, sample_states, ParticleBatch, ParticleEval};

#[cfg(test)]
mod tests;

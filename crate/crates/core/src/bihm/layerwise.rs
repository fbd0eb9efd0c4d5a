//! Per-layer tempered decomposition of the log-weight.
//!
//! With `r_l` the log-ratio contributed by latent layer `l` (so that
//! `Σ_l r_l = log w`), each layer gets its own moment
//! `Λ_l(t) = log Σ_k m_k exp(t · r_l^k)` under particle masses `m_k`, and the
//! reported term is `Λ_l(t_l) / t_l` (the mean of `r_l` at `t_l = 0`).
//! `Λ_l` is convex with `Λ_l(0) = 0`, so `−Λ_l` is concave on `[0, 1]`.

use ndarray::Array1;
use serde::Serialize;

use super::model::BihmModel;
use super::objective::ess;
use super::particles::{evaluate, ParticleBatch};
use crate::error::{Error, Result};
use crate::numeric::{golden_section_max, log_sum_exp_iter};
use crate::sbn::BinaryVector;

/// Tolerance on each optimized `t_l`.
pub const LAYER_T_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerTerm {
    pub t: f64,
    /// `Λ_l(t)`.
    pub log_moment: f64,
    /// `Λ_l(t) / t`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    /// Sum of the per-layer terms.
    pub value: f64,
    pub per_layer: Option<Vec<LayerTerm>>,
    pub ess: f64,
}

/// How each layer's `t_l` is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum LayerTemperatures {
    Fixed(Vec<f64>),
    /// `t_l = argmin_{[0,1]} Λ_l(t)`, each layer independently.
    Optimize,
}

fn log_moment(r: &Array1<f64>, log_mass: &[f64], t: f64) -> f64 {
    log_sum_exp_iter(r.iter().zip(log_mass).map(|(&v, &m)| m + t * v))
}

fn layer_term(r: &Array1<f64>, log_mass: &[f64], t: f64) -> LayerTerm {
    let lm = log_moment(r, log_mass, t);
    let bound = if t == 0.0 {
        r.iter().zip(log_mass).map(|(&v, &m)| m.exp() * v).sum()
    } else {
        lm / t
    };
    LayerTerm {
        t,
        log_moment: lm,
        bound,
    }
}

/// Per-layer terms for arbitrary particle masses (`log_mass` must be normalized).
pub fn layerwise_terms(ratios: &[Array1<f64>], log_mass: &[f64], temps: &LayerTemperatures) -> Result<Vec<LayerTerm>> {
    match temps {
        LayerTemperatures::Fixed(ts) => {
            if ts.len() != ratios.len() {
                return Err(Error::dim(format!(
                    "{} temperatures for {} latent layers",
                    ts.len(),
                    ratios.len()
                )));
            }
            if let Some(t) = ts.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                return Err(Error::domain(format!("layer temperature {t} outside [0,1]")));
            }
            Ok(ratios
                .iter()
                .zip(ts)
                .map(|(r, &t)| layer_term(r, log_mass, t))
                .collect())
        }
        LayerTemperatures::Optimize => Ok(ratios
            .iter()
            .map(|r| {
                let t = golden_section_max(|t| -log_moment(r, log_mass, t), 0.0, 1.0, LAYER_T_TOL);
                layer_term(r, log_mass, t)
            })
            .collect()),
    }
}

/// Layerwise tempered bound on the particles of `batch`, each with mass `1/K`.
pub fn layerwise_tempered_bound(
    model: &BihmModel,
    x: &BinaryVector,
    batch: &ParticleBatch,
    temps: &LayerTemperatures,
) -> Result<BoundReport> {
    let eval = evaluate(model, x, &batch.states)?;
    let ratios = eval.layer_log_ratios();
    let k = batch.num_particles();
    let log_mass = vec![-(k as f64).ln(); k];
    let terms = layerwise_terms(&ratios, &log_mass, temps)?;
    Ok(BoundReport {
        value: terms.iter().map(|t| t.bound).sum(),
        per_layer: Some(terms),
        ess: ess(batch.log_weights()),
    })
}

//! Ground truth by exhaustive enumeration of the latent space.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;

use super::layerwise::{layerwise_terms, LayerTemperatures, LayerTerm};
use super::model::{BihmModel, LayerStates};
use super::objective::{self, Objective};
use super::particles::{evaluate, sample_q};
use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;
use crate::rng::RngState;
use crate::sbn::BinaryVector;

/// Largest latent space the oracle will enumerate, in bits.
pub const MAX_ORACLE_BITS: usize = 20;
const CHUNK: usize = 4096;

/// Number of points in the oracle's tempered grid (`t = i / n`, `i = 1..=n`).
pub const TEMPERED_GRID: usize = 20;

/// `log p(x, h)` and `log q(h | x)` for every latent configuration `h`.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub log_joint: Array1<f64>,
    pub log_q: Array1<f64>,
    /// Per-layer log-ratios, as in [`super::ParticleEval::layer_log_ratios`].
    pub layer_ratios: Vec<Array1<f64>>,
}

impl Enumeration {
    pub fn len(&self) -> usize {
        self.log_q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_q.is_empty()
    }

    pub fn log_w(&self) -> Array1<f64> {
        &self.log_joint - &self.log_q
    }

    pub fn log_px(&self) -> f64 {
        log_sum_exp(self.log_joint.as_slice().expect("contiguous"))
    }

    /// `E_q log w`.
    pub fn elbo(&self) -> f64 {
        self.log_q
            .iter()
            .zip(self.log_w().iter())
            .map(|(lq, lw)| lq.exp() * lw)
            .sum()
    }

    /// `(1/t) log E_q w^t`; the ELBO at `t = 0`.
    pub fn tempered(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::domain(format!("t = {t} outside [0,1]")));
        }
        if t == 0.0 {
            return Ok(self.elbo());
        }
        let v: Vec<f64> = self
            .log_q
            .iter()
            .zip(self.log_w().iter())
            .map(|(lq, lw)| lq + t * lw)
            .collect();
        Ok(log_sum_exp(&v) / t)
    }

    /// `(KL(q(h|x)‖p(h|x)), KL(p(h|x)‖q(h|x)))`.
    pub fn conditional_kls(&self) -> (f64, f64) {
        let log_px = self.log_px();
        let kl_qp = log_px - self.elbo();
        let kl_pq: f64 = self
            .log_joint
            .iter()
            .zip(self.log_q.iter())
            .map(|(lj, lq)| {
                let lpost = lj - log_px;
                lpost.exp() * (lpost - lq)
            })
            .sum();
        (kl_qp.max(0.0), kl_pq.max(0.0))
    }

    /// Per-layer terms with the exact recognition distribution as particle mass.
    pub fn layerwise(&self, temps: &LayerTemperatures) -> Result<Vec<LayerTerm>> {
        layerwise_terms(&self.layer_ratios, self.log_q.as_slice().expect("contiguous"), temps)
    }
}

/// Latent states for configurations `start..end`, bit `j` of the index being
/// global latent unit `j` (layers concatenated bottom-up).
fn states_for_range(sizes: &[usize], start: usize, end: usize) -> LayerStates {
    let n = end - start;
    let mut offset = 0;
    sizes
        .iter()
        .map(|&d| {
            let mut s = Array2::zeros((n, d));
            for (r, mut row) in s.rows_mut().into_iter().enumerate() {
                let idx = start + r;
                for j in 0..d {
                    row[j] = ((idx >> (offset + j)) & 1) as f64;
                }
            }
            offset += d;
            s
        })
        .collect()
}

/// Every latent configuration of `model` with its joint and recognition log-probabilities.
pub fn enumerate(model: &BihmModel, x: &BinaryVector) -> Result<Enumeration> {
    model.check_x(x)?;
    let bits = model.latent_bits();
    if bits > MAX_ORACLE_BITS {
        return Err(Error::Resource(format!(
            "{bits} latent bits exceed the enumeration limit of {MAX_ORACLE_BITS}"
        )));
    }
    let total = 1usize << bits;
    let sizes = &model.layer_sizes()[1..];
    let starts: Vec<usize> = (0..total).step_by(CHUNK).collect();
    let parts = starts
        .par_iter()
        .map(|&s| {
            let states = states_for_range(sizes, s, (s + CHUNK).min(total));
            let eval = evaluate(model, x, &states)?;
            Ok((eval.log_joint(), eval.log_q(), eval.layer_log_ratios()))
        })
        .collect::<Result<Vec<_>>>()?;
    let depth = model.depth();
    let mut log_joint = Vec::with_capacity(total);
    let mut log_q = Vec::with_capacity(total);
    let mut ratios = vec![Vec::with_capacity(total); depth];
    for (lj, lq, rs) in parts {
        log_joint.extend(lj);
        log_q.extend(lq);
        for (acc, r) in ratios.iter_mut().zip(rs) {
            acc.extend(r);
        }
    }
    Ok(Enumeration {
        log_joint: log_joint.into(),
        log_q: log_q.into(),
        layer_ratios: ratios.into_iter().map(Array1::from).collect(),
    })
}

/// Exact (infinite-particle) values of every bound and loss at one observation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRecord {
    pub log_px: f64,
    pub elbo: f64,
    /// `(t, (1/t) log E_q w^t)` on `t = 1/20, 2/20, …, 1`.
    pub tempered: Vec<(f64, f64)>,
    pub kl_qp: f64,
    pub kl_pq: f64,
    /// `−½ · tempered(½)`.
    pub bhattacharyya_loss: f64,
    /// Resistor of the two conditional KLs.
    pub resistor_loss: f64,
    /// `α·B + (1−α)·R` at the default `α`.
    pub chernoff_approx_loss: f64,
}

pub fn exact_oracle(model: &BihmModel, x: &BinaryVector) -> Result<OracleRecord> {
    let e = enumerate(model, x)?;
    let tempered = (1..=TEMPERED_GRID)
        .map(|i| {
            let t = i as f64 / TEMPERED_GRID as f64;
            e.tempered(t).map(|v| (t, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let (kl_qp, kl_pq) = e.conditional_kls();
    let b = -0.5 * e.tempered(0.5)?;
    let s = kl_qp + kl_pq;
    let r = if s == 0.0 { 0.0 } else { kl_qp * kl_pq / s };
    let a = objective::DEFAULT_ALPHA;
    Ok(OracleRecord {
        log_px: e.log_px(),
        elbo: e.elbo(),
        tempered,
        kl_qp,
        kl_pq,
        bhattacharyya_loss: b,
        resistor_loss: r,
        chernoff_approx_loss: a * b + (1.0 - a) * r,
    })
}

/// Exact expectations over `K`-particle batches drawn from a frozen proposal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectedLoss {
    /// `E[loss(log w)]`.
    pub loss: f64,
    /// `E[recognition_surrogate]`, whose recognition-parameter gradient is
    /// the expected `q` part of the training gradient.
    pub surrogate: f64,
}

/// Enumerates all `N^K` particle tuples, weighting each by its probability
/// under `reference`'s recognition network, and averages the `K`-particle
/// loss evaluated under `model`.
///
/// At `model == reference`, finite differences of `loss` in generative
/// coordinates and of `surrogate` in recognition coordinates give the exact
/// expectation of [`super::grad_loss`].
pub fn expected_particle_loss(
    model: &BihmModel,
    reference: &BihmModel,
    x: &BinaryVector,
    k: usize,
    objective: Objective,
) -> Result<ExpectedLoss> {
    objective.validate()?;
    if k == 0 {
        return Err(Error::domain("particle count must be positive"));
    }
    let eval = enumerate(model, x)?;
    let refe = enumerate(reference, x)?;
    let n = eval.len();
    let tuples = (n as f64).powi(k as i32);
    if tuples > 1e7 {
        return Err(Error::Resource(format!(
            "{n}^{k} particle tuples is too many to enumerate"
        )));
    }
    let lw = eval.log_w();
    let lq = &eval.log_q;
    let lw_ref = refe.log_w();
    let lq_ref = &refe.log_q;

    let mut idx = vec![0usize; k];
    let (mut acc_loss, mut acc_sur) = (0.0, 0.0);
    let (mut bw, mut bq, mut br) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    loop {
        let mut log_prob = 0.0;
        for (j, &i) in idx.iter().enumerate() {
            bw[j] = lw[i];
            bq[j] = lq[i];
            br[j] = lw_ref[i];
            log_prob += lq_ref[i];
        }
        let p = log_prob.exp();
        acc_loss += p * objective::loss(objective, &bw)?;
        acc_sur += p * objective::recognition_surrogate(objective, &bw, &bq, &br)?;
        // Odometer increment.
        let mut j = 0;
        while j < k {
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == k {
            break;
        }
    }
    Ok(ExpectedLoss {
        loss: acc_loss,
        surrogate: acc_sur,
    })
}

/// `−tempered_bound(sample_q(model, x, K), 1)`.
pub fn estimate_nll(model: &BihmModel, x: &BinaryVector, k: usize, rng: &mut RngState) -> Result<f64> {
    let batch = sample_q(model, x, k, rng)?;
    Ok(-objective::tempered_bound(batch.log_weights(), 1.0)?)
}

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use super::model::{BihmModel, LayerStates};
use crate::error::{Error, Result};
use crate::numeric::sigmoid_softplus;
use crate::rng::RngState;
use crate::sbn::{log_prob_rows_into_sigmoid, sample_bernoulli, sample_rows, BinaryVector};

/// `K` latent configurations drawn from `q(h | x)` with their log importance weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleBatch {
    /// One `(K × h_l)` matrix per latent layer.
    pub states: LayerStates,
    /// `log p(x, h^k) − log q(h^k | x)`.
    pub log_w: Array1<f64>,
}

impl ParticleBatch {
    pub fn num_particles(&self) -> usize {
        self.log_w.len()
    }

    pub fn log_weights(&self) -> &[f64] {
        self.log_w.as_slice().expect("contiguous")
    }
}

/// Every per-particle factor of both chains at one `(x, states)` pair, plus
/// the Bernoulli means needed by the gradient estimators.
#[derive(Clone, Debug)]
pub struct ParticleEval {
    /// `gen_log[l][k] = log p(h_l | h_{l+1})` for particle `k`, `h_0 = x`.
    pub gen_log: Vec<Array1<f64>>,
    /// `log p(h_L)`.
    pub prior_log: Array1<f64>,
    /// `rec_log[l][k] = log q(h_{l+1} | h_l)`.
    pub rec_log: Vec<Array1<f64>>,
    /// `σ` of the generative logits, `(K × sizes[l])`.
    pub gen_means: Vec<Array2<f64>>,
    /// `σ` of the recognition logits; entry 0 is a single shared row.
    pub rec_means: Vec<Array2<f64>>,
    pub prior_means: Array1<f64>,
}

impl ParticleEval {
    pub fn log_joint(&self) -> Array1<f64> {
        let mut out = self.prior_log.clone();
        for g in &self.gen_log {
            out += g;
        }
        out
    }

    pub fn log_q(&self) -> Array1<f64> {
        let mut out = Array1::zeros(self.prior_log.len());
        for r in &self.rec_log {
            out += r;
        }
        out
    }

    pub fn log_w(&self) -> Array1<f64> {
        self.log_joint() - self.log_q()
    }

    /// Per-latent-layer log-ratios `r_l` with `Σ_l r_l = log w`.
    ///
    /// Layer 1 absorbs `log p(x | h_1)`; the top layer uses the prior.
    pub fn layer_log_ratios(&self) -> Vec<Array1<f64>> {
        let depth = self.rec_log.len();
        (0..depth)
            .map(|i| {
                // latent layer i+1
                let gen = if i + 1 == depth {
                    self.prior_log.clone()
                } else {
                    self.gen_log[i + 1].clone()
                };
                let mut r = gen - &self.rec_log[i];
                if i == 0 {
                    r += &self.gen_log[0];
                }
                r
            })
            .collect()
    }
}

/// Bernoulli log-probabilities of each row of `children` under one shared logit row.
fn log_prob_rows_shared(logits: &Array1<f64>, children: ArrayView2<'_, f64>) -> (Array1<f64>, Array1<f64>) {
    let mut means = Array1::zeros(logits.len());
    let mut norm = 0.0;
    Zip::from(&mut means).and(logits).for_each(|m, &z| {
        let (s, sp) = sigmoid_softplus(z);
        *m = s;
        norm += sp;
    });
    let lp = children.dot(logits) - norm;
    (lp, means)
}

fn check_states(model: &BihmModel, states: &LayerStates) -> Result<usize> {
    if states.len() != model.depth() {
        return Err(Error::dim(format!(
            "{} state layers for a depth-{} model",
            states.len(),
            model.depth()
        )));
    }
    let k = states[0].nrows();
    for (l, s) in states.iter().enumerate() {
        if s.nrows() != k || s.ncols() != model.layer_sizes()[l + 1] {
            return Err(Error::dim(format!(
                "state layer {l} has shape {:?}, expected ({k}, {})",
                s.shape(),
                model.layer_sizes()[l + 1]
            )));
        }
    }
    if k == 0 {
        return Err(Error::domain("batch must contain at least one particle"));
    }
    Ok(k)
}

/// Evaluates every factor of both chains for each particle.
pub fn evaluate(model: &BihmModel, x: &BinaryVector, states: &LayerStates) -> Result<ParticleEval> {
    model.check_x(x)?;
    let k = check_states(model, states)?;
    let depth = model.depth();

    let mut rec_log = Vec::with_capacity(depth);
    let mut rec_means = Vec::with_capacity(depth);
    let x_logits = model.recognition[0].conditional_logits(x)?;
    let (lp, means) = log_prob_rows_shared(&x_logits, states[0].view());
    rec_log.push(lp);
    rec_means.push(means.insert_axis(Axis(0)));
    for l in 1..depth {
        let mut z = model.recognition[l].logits_rows(states[l - 1].view());
        let lp = log_prob_rows_into_sigmoid(&mut z, states[l].view());
        rec_log.push(lp);
        rec_means.push(z);
    }

    let mut gen_log = Vec::with_capacity(depth);
    let mut gen_means = Vec::with_capacity(depth);
    for l in 0..depth {
        let mut z = model.generative[l].logits_rows(states[l].view());
        let lp = if l == 0 {
            let xb = x.view().insert_axis(Axis(0));
            let xb = xb.broadcast((k, model.x_dim())).expect("broadcast row");
            log_prob_rows_into_sigmoid(&mut z, xb)
        } else {
            log_prob_rows_into_sigmoid(&mut z, states[l - 1].view())
        };
        gen_log.push(lp);
        gen_means.push(z);
    }
    let (prior_log, prior_means) = log_prob_rows_shared(&model.prior.logits, states[depth - 1].view());

    Ok(ParticleEval {
        gen_log,
        prior_log,
        rec_log,
        gen_means,
        rec_means,
        prior_means,
    })
}

/// `log p(x, h^k) − log q(h^k | x)` for the particles in `states`.
pub fn log_weights(model: &BihmModel, x: &BinaryVector, states: &LayerStates) -> Result<Array1<f64>> {
    Ok(evaluate(model, x, states)?.log_w())
}

/// Bottom-up ancestral sampling through the recognition chain.
pub fn sample_states(model: &BihmModel, x: &BinaryVector, k: usize, rng: &mut RngState) -> Result<LayerStates> {
    model.check_x(x)?;
    if k == 0 {
        return Err(Error::domain("particle count must be positive"));
    }
    let depth = model.depth();
    let mut states = Vec::with_capacity(depth);
    let z0 = model.recognition[0].conditional_logits(x)?;
    let mut h1 = Array2::zeros((k, z0.len()));
    for mut row in h1.rows_mut() {
        row.assign(&sample_bernoulli(z0.view(), rng));
    }
    states.push(h1);
    for l in 1..depth {
        let z = model.recognition[l].logits_rows(states[l - 1].view());
        states.push(sample_rows(z.view(), rng));
    }
    Ok(states)
}

/// Draws `K` particles from `q(h | x)` and returns them with their evaluation.
pub fn sample_q_with_eval(
    model: &BihmModel,
    x: &BinaryVector,
    k: usize,
    rng: &mut RngState,
) -> Result<(ParticleBatch, ParticleEval)> {
    let states = sample_states(model, x, k, rng)?;
    let eval = evaluate(model, x, &states)?;
    let log_w = eval.log_w();
    Ok((ParticleBatch { states, log_w }, eval))
}

pub fn sample_q(model: &BihmModel, x: &BinaryVector, k: usize, rng: &mut RngState) -> Result<ParticleBatch> {
    Ok(sample_q_with_eval(model, x, k, rng)?.0)
}

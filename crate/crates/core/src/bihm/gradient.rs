use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use super::model::{column_sums, BihmModel, GradientSet, LayerStates};
use super::objective::{coefficients, Objective};
use super::particles::{evaluate, ParticleBatch, ParticleEval};
use crate::error::{Error, Result};
use crate::sbn::{BinaryVector, LayerParams};

/// Relative tolerance when checking a batch's stored log weights.
const STALE_TOL: f64 = 1e-9;

/// Loss gradient for one observation and its particle batch.
///
/// Particles are treated as constants; per-particle coefficients come from
/// [`coefficients`]. Returns a [`GradientSet`] of the quantity to *minimize*.
pub fn grad_loss(
    model: &BihmModel,
    x: &BinaryVector,
    batch: &ParticleBatch,
    objective: Objective,
) -> Result<GradientSet> {
    let eval = evaluate(model, x, &batch.states)?;
    let fresh = eval.log_w();
    for (k, (a, b)) in fresh.iter().zip(batch.log_w.iter()).enumerate() {
        if (a - b).abs() > STALE_TOL * (1.0 + a.abs()) {
            return Err(Error::Consistency(format!(
                "particle {k}: stored log weight {b} but model gives {a}; batch is stale"
            )));
        }
    }
    let mut grad = model.zeros_like();
    accumulate_grad(&mut grad, x, &batch.states, &eval, objective, 1.0)?;
    Ok(grad)
}

/// Adds `scale ·` the loss gradient of one observation into `grad`.
pub fn accumulate_grad(
    grad: &mut GradientSet,
    x: &BinaryVector,
    states: &LayerStates,
    eval: &ParticleEval,
    objective: Objective,
    scale: f64,
) -> Result<()> {
    let log_w = eval.log_w();
    let c = coefficients(objective, log_w.as_slice().expect("contiguous"))?;
    let cp = Array1::from(c.p) * scale;
    let cq = Array1::from(c.q) * scale;
    accumulate_with_coefficients(grad, x, states, eval, &cp, &cq);
    Ok(())
}

/// `Σ_k cp_k ∂log p(x,h^k) + Σ_k cq_k ∂log q(h^k|x)` added into `grad`.
pub fn accumulate_with_coefficients(
    grad: &mut GradientSet,
    x: &BinaryVector,
    states: &LayerStates,
    eval: &ParticleEval,
    cp: &Array1<f64>,
    cq: &Array1<f64>,
) {
    let depth = states.len();
    let k = cp.len();

    // Generative layers: child h_l (x for l = 0), parent h_{l+1}.
    for l in 0..depth {
        let means = &eval.gen_means[l];
        let mut delta: Array2<f64> = if l == 0 {
            let xb = x.view().insert_axis(Axis(0));
            let xb = xb.broadcast((k, x.len())).expect("broadcast");
            &xb - means
        } else {
            &states[l - 1] - means
        };
        scale_rows(&mut delta, cp);
        add_layer_grad(&mut grad.generative[l], &delta, states[l].view());
    }

    // Prior.
    let top = &states[depth - 1];
    let mut delta = top - &eval.prior_means.view().insert_axis(Axis(0));
    scale_rows(&mut delta, cp);
    grad.prior.logits += &column_sums(&delta);

    // First recognition layer: every particle shares the parent x.
    {
        let mut delta = &states[0] - &eval.rec_means[0];
        scale_rows(&mut delta, cq);
        let d = column_sums(&delta);
        let outer = d.view().insert_axis(Axis(1)).dot(&x.view().insert_axis(Axis(0)));
        grad.recognition[0].weights += &outer;
        grad.recognition[0].biases += &d;
    }
    for l in 1..depth {
        let mut delta = &states[l] - &eval.rec_means[l];
        scale_rows(&mut delta, cq);
        add_layer_grad(&mut grad.recognition[l], &delta, states[l - 1].view());
    }
}

fn scale_rows(a: &mut Array2<f64>, c: &Array1<f64>) {
    Zip::from(a.rows_mut()).and(c).for_each(|mut row, &ck| row *= ck);
}

fn add_layer_grad(g: &mut LayerParams, delta: &Array2<f64>, parents: ArrayView2<'_, f64>) {
    ndarray::linalg::general_mat_mul(1.0, &delta.t(), &parents, 1.0, &mut g.weights);
    g.biases += &column_sums(delta);
}

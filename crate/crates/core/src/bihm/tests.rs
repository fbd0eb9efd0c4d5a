use ndarray::{array, Array1};

use super::checks::{self, SuiteOptions};
use super::*;
use crate::info_metrics::{kl, DiscreteDistribution};
use crate::numeric::{log_sum_exp, sigmoid, softplus, uniform_bits_nll};
use crate::rng::RngState;
use crate::sbn::{enumerate_binary, BinaryVector};

fn bits(v: &[u8]) -> BinaryVector {
    BinaryVector::from_bits(v).unwrap()
}

fn tiny(seed: u64, sizes: &[usize]) -> BihmModel {
    BihmModel::random(sizes, 1.5, &mut RngState::new(seed)).unwrap()
}

/// L = 1 model whose recognition network equals the exact posterior:
/// generative weights are zero, so `p(h|x) = p(h)`.
fn factorized() -> BihmModel {
    let mut m = BihmModel::zeros(&[3, 2]).unwrap();
    m.prior.logits = array![0.7, -1.2];
    m.generative[0].biases = array![0.3, -0.4, 1.1];
    m.recognition[0].biases = m.prior.logits.clone();
    m
}

#[test]
fn zero_recognition_samples_uniformly() {
    let m = BihmModel::zeros(&[4, 3]).unwrap();
    let x = bits(&[1, 0, 1, 1]);
    let b = sample_q(&m, &x, 20_000, &mut RngState::new(1)).unwrap();
    for &mean in b.states[0].mean_axis(ndarray::Axis(0)).unwrap().iter() {
        assert!((mean - 0.5).abs() < 0.02);
    }
    let one = sample_q(&m, &x, 1, &mut RngState::new(2)).unwrap();
    assert_eq!(one.log_w.len(), 1);
    assert!(sample_q(&m, &bits(&[1, 0]), 3, &mut RngState::new(2)).is_err());
}

#[test]
fn particle_means_match_exact_recognition_marginals() {
    let m = tiny(3, &[3, 2, 2]);
    let x = bits(&[0, 1, 1]);
    let e = enumerate(&m, &x).unwrap();
    // Configuration index bit j is latent unit j (h1 first).
    let mut exact = [0.0; 4];
    for (i, lq) in e.log_q.iter().enumerate() {
        for (j, v) in exact.iter_mut().enumerate() {
            if (i >> j) & 1 == 1 {
                *v += lq.exp();
            }
        }
    }
    let b = sample_q(&m, &x, 100_000, &mut RngState::new(4)).unwrap();
    let h1 = b.states[0].mean_axis(ndarray::Axis(0)).unwrap();
    let h2 = b.states[1].mean_axis(ndarray::Axis(0)).unwrap();
    let got = [h1[0], h1[1], h2[0], h2[1]];
    for (g, e) in got.iter().zip(exact) {
        assert!((g - e).abs() < 0.01, "{g} vs {e}");
    }
}

#[test]
fn dream_samples() {
    let mut m = BihmModel::zeros(&[3, 2, 2]).unwrap();
    m.prior.logits.fill(-1e9);
    m.generative[0].biases = array![2.0, -1.0, 0.0];
    let mut rng = RngState::new(5);
    let n = 20_000;
    let mut xm = Array1::<f64>::zeros(3);
    for _ in 0..n {
        let (x, h) = m.sample_p(&mut rng);
        assert!(h[1].view().iter().all(|&v| v == 0.0));
        xm += &x.view();
    }
    xm /= n as f64;
    for (g, b) in xm.iter().zip([2.0, -1.0, 0.0]) {
        assert!((g - sigmoid(b)).abs() < 0.015);
    }

    let z = BihmModel::zeros(&[4, 2]).unwrap();
    let mut xm = Array1::<f64>::zeros(4);
    for _ in 0..n {
        xm += &z.sample_p(&mut rng).0.view();
    }
    xm /= n as f64;
    assert!(xm.iter().all(|v| (v - 0.5).abs() < 0.015));
}

#[test]
fn dream_marginal_matches_enumeration() {
    let m = tiny(6, &[2, 2, 1]);
    let configs = enumerate_binary(2);
    let exact: Vec<f64> = configs
        .rows()
        .into_iter()
        .map(|r| {
            enumerate(&m, &BinaryVector::from_f64(r.as_slice().unwrap()).unwrap())
                .unwrap()
                .log_px()
                .exp()
        })
        .collect();
    assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let mut counts = [0usize; 4];
    let mut rng = RngState::new(7);
    let n = 100_000;
    for _ in 0..n {
        let x = m.sample_p(&mut rng).0.to_bits();
        counts[x[0] as usize + 2 * x[1] as usize] += 1;
    }
    for (c, e) in counts.iter().zip(&exact) {
        assert!((*c as f64 / n as f64 - e).abs() < 0.01);
    }
}

#[test]
fn zero_variance_weights_equal_evidence() {
    let m = factorized();
    let x = bits(&[1, 0, 1]);
    let log_px = enumerate(&m, &x).unwrap().log_px();
    let b = sample_q(&m, &x, 50, &mut RngState::new(8)).unwrap();
    for lw in b.log_w.iter() {
        assert!((lw - log_px).abs() < 1e-12);
    }
    assert!((b.elbo() - log_px).abs() < 1e-12);
    let (a, d) = b.conditional_kl_estimates();
    assert!(a < 1e-12 && d < 1e-12);
    let nll = estimate_nll(&m, &x, 100, &mut RngState::new(9)).unwrap();
    assert!((nll + log_px).abs() < 1e-12);
}

#[test]
fn single_factor_weight_by_hand() {
    // x, h1 one bit each; only the visible bias is nonzero.
    let mut m = BihmModel::zeros(&[1, 1]).unwrap();
    m.generative[0].biases[0] = 0.8;
    let b = sample_q(&m, &bits(&[1]), 10, &mut RngState::new(10)).unwrap();
    // log σ(0.8) + log ½ − log ½
    for lw in b.log_w.iter() {
        assert!((lw - (0.8 - softplus(0.8))).abs() < 1e-15);
    }
    assert_eq!(log_weights(&m, &bits(&[1]), &b.states).unwrap(), b.log_w);
}

#[test]
fn mean_weight_under_q_is_evidence() {
    for seed in 0..5 {
        let m = tiny(20 + seed, &[4, 3, 2]);
        let x = bits(&[1, 1, 0, 1]);
        let e = enumerate(&m, &x).unwrap();
        let lw = e.log_w();
        let terms: Vec<f64> = e.log_q.iter().zip(lw.iter()).map(|(a, b)| a + b).collect();
        assert!((log_sum_exp(&terms) - e.log_px()).abs() < 1e-12);
        assert!((log_sum_exp(e.log_q.as_slice().unwrap())).abs() < 1e-12);
    }
}

#[test]
fn exact_elbo_gap_is_posterior_kl() {
    let m = tiny(30, &[3, 2, 1]);
    let x = bits(&[0, 1, 0]);
    let e = enumerate(&m, &x).unwrap();
    let log_px = e.log_px();
    let q = DiscreteDistribution::new(e.log_q.iter().map(|v| v.exp()).collect()).unwrap();
    let post = DiscreteDistribution::new(e.log_joint.iter().map(|v| (v - log_px).exp()).collect()).unwrap();
    assert!((e.elbo() - (log_px - kl(&q, &post).unwrap())).abs() < 1e-12);
    let (kqp, kpq) = e.conditional_kls();
    assert!((kqp - kl(&q, &post).unwrap()).abs() < 1e-12);
    assert!((kpq - kl(&post, &q).unwrap()).abs() < 1e-12);
}

#[test]
fn oracle_uniform_model() {
    let m = BihmModel::zeros(&[6, 3, 2]).unwrap();
    let r = exact_oracle(&m, &bits(&[1, 0, 0, 1, 1, 0])).unwrap();
    assert!((r.log_px + uniform_bits_nll(6)).abs() < 1e-12);
    assert!((r.elbo - r.log_px).abs() < 1e-12);
    assert!(r.kl_qp < 1e-12 && r.kl_pq < 1e-12);
    let nll = estimate_nll(&m, &bits(&[1, 0, 0, 1, 1, 0]), 100, &mut RngState::new(1)).unwrap();
    assert!((nll - uniform_bits_nll(6)).abs() < 1e-12);
}

#[test]
fn oracle_two_term_sum_by_hand() {
    let mut m = BihmModel::zeros(&[2, 1]).unwrap();
    m.prior.logits[0] = 0.4;
    m.generative[0].weights = array![[1.5], [-2.0]];
    m.generative[0].biases = array![-0.5, 0.3];
    let x = bits(&[1, 0]);
    let ln_sig = |z: f64| z - softplus(z);
    let ln_one_minus = |z: f64| -softplus(z);
    // h = 0: logits (−0.5, 0.3); h = 1: logits (1.0, −1.7).
    let a = ln_one_minus(0.4) + ln_sig(-0.5) + ln_one_minus(0.3);
    let b = ln_sig(0.4) + ln_sig(1.0) + ln_one_minus(-1.7);
    let expected = (a.exp() + b.exp()).ln();
    let r = exact_oracle(&m, &x).unwrap();
    assert!((r.log_px - expected).abs() < 1e-14);
}

#[test]
fn oracle_tempered_curve_and_losses() {
    let m = tiny(40, &[4, 3, 2]);
    let x = bits(&[0, 1, 1, 0]);
    let r = exact_oracle(&m, &x).unwrap();
    assert_eq!(r.tempered.len(), 20);
    let mut prev = r.elbo;
    for &(_, v) in &r.tempered {
        assert!(v >= prev - 1e-12);
        prev = v;
    }
    assert!((prev - r.log_px).abs() < 1e-12);
    let half = r.tempered[9].1;
    assert!(r.elbo <= half && half <= r.log_px);
    assert!((r.bhattacharyya_loss + 0.5 * half).abs() < 1e-15);
    let res = r.kl_qp * r.kl_pq / (r.kl_qp + r.kl_pq);
    assert!((r.resistor_loss - res).abs() < 1e-15);
    assert!((r.chernoff_approx_loss - (0.2 * r.bhattacharyya_loss + 0.8 * res)).abs() < 1e-14);
}

#[test]
fn oracle_refuses_large_latent_spaces() {
    let m = BihmModel::zeros(&[2, 15, 6]).unwrap();
    assert!(matches!(
        exact_oracle(&m, &bits(&[0, 1])),
        Err(crate::Error::Resource(_))
    ));
}

#[test]
fn large_k_estimates_match_oracle() {
    let m = tiny(50, &[4, 3, 2]);
    let x = bits(&[1, 0, 1, 1]);
    let r = exact_oracle(&m, &x).unwrap();
    let b = sample_q(&m, &x, 10_000, &mut RngState::new(51)).unwrap();
    let (a, d) = b.conditional_kl_estimates();
    assert!((a / r.kl_qp - 1.0).abs() < 0.05, "{a} vs {}", r.kl_qp);
    assert!((d / r.kl_pq - 1.0).abs() < 0.05, "{d} vs {}", r.kl_pq);
    let nll = estimate_nll(&m, &x, 10_000, &mut RngState::new(52)).unwrap();
    assert!((nll / -r.log_px - 1.0).abs() < 0.01);
}

#[test]
fn layerwise_single_layer_is_tempered_bound() {
    let m = tiny(60, &[4, 3]);
    let x = bits(&[1, 1, 0, 0]);
    let b = sample_q(&m, &x, 64, &mut RngState::new(61)).unwrap();
    for t in [0.25, 0.5, 1.0] {
        let r = layerwise_tempered_bound(&m, &x, &b, &LayerTemperatures::Fixed(vec![t])).unwrap();
        assert!((r.value - b.tempered_bound(t).unwrap()).abs() < 1e-12);
        assert_eq!(r.ess, b.ess());
    }
    let e = enumerate(&m, &x).unwrap();
    let terms = e.layerwise(&LayerTemperatures::Fixed(vec![0.5])).unwrap();
    assert!((terms[0].bound - e.tempered(0.5).unwrap()).abs() < 1e-12);
}

#[test]
fn layerwise_terms_decompose_log_weight() {
    let m = tiny(62, &[4, 3, 2]);
    let x = bits(&[0, 1, 1, 1]);
    let b = sample_q(&m, &x, 32, &mut RngState::new(63)).unwrap();
    // At t → 0 every term is the layer's mean log-ratio, so they sum to the ELBO.
    let r = layerwise_tempered_bound(&m, &x, &b, &LayerTemperatures::Fixed(vec![0.0, 0.0])).unwrap();
    assert!((r.value - b.elbo()).abs() < 1e-12);
    // At ½ the shared-particle comparison with the joint term.
    let r = layerwise_tempered_bound(&m, &x, &b, &LayerTemperatures::Fixed(vec![0.5, 0.5])).unwrap();
    let joint = b.tempered_bound(0.5).unwrap();
    assert!(r.value.is_finite() && joint.is_finite());
    assert!(r.value >= b.elbo() - 1e-12);
    assert!(matches!(
        layerwise_tempered_bound(&m, &x, &b, &LayerTemperatures::Fixed(vec![0.5])),
        Err(crate::Error::Dimension(_))
    ));
    assert!(layerwise_tempered_bound(&m, &x, &b, &LayerTemperatures::Fixed(vec![0.5, 1.5])).is_err());
}

#[test]
fn optimized_temperatures_differ_across_layers() {
    // Layer 1's log-ratio has a strongly skewed distribution, layer 2's a mild one.
    let mut m = tiny(64, &[4, 3, 3]);
    m.generative[0].weights.mapv_inplace(|v| 4.0 * v);
    m.recognition[1].weights.mapv_inplace(|v| 0.2 * v);
    let x = bits(&[1, 0, 1, 0]);
    let e = enumerate(&m, &x).unwrap();
    let terms = e.layerwise(&LayerTemperatures::Optimize).unwrap();
    let grid_argmin = |l: usize| {
        (0..=1000)
            .map(|i| i as f64 / 1000.0)
            .map(|t| {
                (
                    t,
                    e.layerwise(&LayerTemperatures::Fixed(vec![t; 2])).unwrap()[l].log_moment,
                )
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0
    };
    for (l, term) in terms.iter().enumerate() {
        assert!((term.t - grid_argmin(l)).abs() <= 1.5e-3);
    }
    assert!((terms[0].t - terms[1].t).abs() >= 1e-3, "{:?}", terms);
}

#[test]
fn stale_batch_is_rejected() {
    let m = tiny(70, &[3, 2]);
    let x = bits(&[1, 0, 0]);
    let b = sample_q(&m, &x, 5, &mut RngState::new(71)).unwrap();
    assert!(grad_loss(&m, &x, &b, Objective::Elbo).is_ok());
    let mut other = m.clone();
    other.prior.logits[0] += 0.1;
    assert!(matches!(
        grad_loss(&other, &x, &b, Objective::Elbo),
        Err(crate::Error::Consistency(_))
    ));
}

fn flat_log_prob_grads(m: &BihmModel, x: &BinaryVector, b: &ParticleBatch, cp: f64, cq: f64) -> Vec<f64> {
    let k = b.num_particles();
    let eval = evaluate(m, x, &b.states).unwrap();
    let mut g = m.zeros_like();
    accumulate_with_coefficients(
        &mut g,
        x,
        &b.states,
        &eval,
        &Array1::from_elem(k, cp),
        &Array1::from_elem(k, cq),
    );
    g.to_flat()
}

#[test]
fn uniform_weight_elbo_gradient() {
    let m = factorized();
    let x = bits(&[0, 1, 1]);
    let b = sample_q(&m, &x, 8, &mut RngState::new(72)).unwrap();
    let g = grad_loss(&m, &x, &b, Objective::Elbo).unwrap().to_flat();
    let k = b.num_particles() as f64;
    let want = flat_log_prob_grads(&m, &x, &b, -1.0 / k, -1.0 / k);
    for (a, w) in g.iter().zip(want) {
        assert!((a - w).abs() < 1e-12);
    }
}

#[test]
fn single_particle_wake_sleep_gradient() {
    let m = tiny(73, &[3, 2, 2]);
    let x = bits(&[1, 1, 0]);
    let b = sample_q(&m, &x, 1, &mut RngState::new(74)).unwrap();
    let want = flat_log_prob_grads(&m, &x, &b, -1.0, -1.0);
    for obj in [Objective::Elbo, Objective::Tempered(0.3), Objective::Bhattacharyya] {
        let scale = if obj == Objective::Bhattacharyya { 0.5 } else { 1.0 };
        let g = grad_loss(&m, &x, &b, obj).unwrap().to_flat();
        for (a, w) in g.iter().zip(&want) {
            assert!((a - scale * w).abs() < 1e-12);
        }
    }
    // A single particle carries no Resistor signal.
    let g = grad_loss(&m, &x, &b, Objective::Resistor).unwrap();
    assert!(g.to_flat().iter().all(|&v| v == 0.0));
}

#[test]
fn suite_passes_and_detects_corruption() {
    let mut opts = SuiteOptions::new(2024);
    opts.bound_models = 5;
    opts.fd_instances = 10;
    opts.gradient_batches = 2000;
    let outcomes = checks::run_suite(&opts).unwrap();
    for o in &outcomes {
        assert!(o.passed, "{}: {}", o.name, o.detail);
    }
    opts.corrupt_gradient = true;
    assert!(!checks::check_layer_gradients(&opts).unwrap().passed);
    assert!(checks::check_is_gradients(&opts).unwrap().iter().all(|o| !o.passed));
}

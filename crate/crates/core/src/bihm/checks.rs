//! Self-checks of every estimator against the enumeration oracle on tiny models.

use ndarray::Array1;

use super::gradient::{accumulate_with_coefficients, grad_loss};
use super::model::{BihmModel, Side};
use super::objective::{self, Objective};
use super::oracle::{enumerate, expected_particle_loss};
use super::particles::{evaluate, sample_q, sample_states};
use crate::error::Result;
use crate::rng::RngState;
use crate::sbn::BinaryVector;

/// Outcome of one invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Knobs of the suite. `corrupt_gradient` perturbs every analytic gradient
/// before comparison and must make the gradient checks fail.
#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    pub corrupt_gradient: bool,
    pub bound_models: usize,
    pub fd_instances: usize,
    pub gradient_batches: usize,
}

impl SuiteOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            corrupt_gradient: false,
            bound_models: 20,
            fd_instances: 100,
            gradient_batches: 10_000,
        }
    }
}

pub const BOUND_TOL: f64 = 1e-9;
pub const FD_REL_TOL: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-5;
pub const SE_MULTIPLIER: f64 = 3.0;
/// Absolute floor added to the standard-error band (covers finite-difference error).
pub const SE_FLOOR: f64 = 1e-6;

const CORRUPTION: f64 = 1e-2;

fn random_x(d: usize, rng: &mut RngState) -> BinaryVector {
    let bits: Vec<u8> = (0..d).map(|_| rng.bernoulli(0.5) as u8).collect();
    BinaryVector::from_bits(&bits).expect("binary")
}

/// A random model with at most `max_bits` latent bits.
fn random_tiny(rng: &mut RngState, max_bits: usize) -> Result<(BihmModel, BinaryVector)> {
    loop {
        let depth = 1 + rng.below(3);
        let mut sizes = vec![2 + rng.below(5)];
        for _ in 0..depth {
            sizes.push(1 + rng.below(5));
        }
        if sizes[1..].iter().sum::<usize>() > max_bits {
            continue;
        }
        let m = BihmModel::random(&sizes, 1.5, rng)?;
        let x = random_x(sizes[0], rng);
        return Ok((m, x));
    }
}

/// Exact bound chain and the tempered curve's monotonicity on random tiny models.
pub fn check_bound_chain(opts: &SuiteOptions) -> Result<CheckOutcome> {
    let mut rng = RngState::new(opts.seed).fork(1);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..opts.bound_models {
        let (m, x) = random_tiny(&mut rng, 14)?;
        let e = enumerate(&m, &x)?;
        let log_px = e.log_px();
        let elbo = e.elbo();
        let half = e.tempered(0.5)?;
        let mut viol: f64 = (elbo - half).max(half - log_px);
        let mut prev = elbo;
        for i in 1..=20 {
            let v = e.tempered(i as f64 / 20.0)?;
            viol = viol.max(prev - v);
            prev = v;
        }
        // E_q[w] = p(x).
        viol = viol.max((prev - log_px).abs());
        worst = worst.max(viol);
    }
    Ok(CheckOutcome {
        name: "bound chain",
        passed: worst <= BOUND_TOL,
        detail: format!("worst violation {worst:.3e} over {} models", opts.bound_models),
    })
}

/// `Σ_k cp_k log p(x,h^k) + Σ_k cq_k log q(h^k|x)` for fixed particles.
fn weighted_log_probs(
    m: &BihmModel,
    x: &BinaryVector,
    states: &super::LayerStates,
    cp: &Array1<f64>,
    cq: &Array1<f64>,
) -> f64 {
    let e = evaluate(m, x, states).expect("valid shapes");
    e.log_joint().dot(cp) + e.log_q().dot(cq)
}

/// Analytic gradients of weighted particle log-probabilities against
/// central finite differences, on random instances.
pub fn check_layer_gradients(opts: &SuiteOptions) -> Result<CheckOutcome> {
    let mut rng = RngState::new(opts.seed).fork(2);
    let mut worst: f64 = 0.0;
    for _ in 0..opts.fd_instances {
        let (m, x) = random_tiny(&mut rng, 10)?;
        let k = 1 + rng.below(4);
        let states = sample_states(&m, &x, k, &mut rng)?;
        let cp = Array1::from_shape_fn(k, |_| rng.uniform() * 2.0 - 1.0);
        let cq = Array1::from_shape_fn(k, |_| rng.uniform() * 2.0 - 1.0);
        let eval = evaluate(&m, &x, &states)?;
        let mut g = m.zeros_like();
        accumulate_with_coefficients(&mut g, &x, &states, &eval, &cp, &cq);
        let mut analytic = g.to_flat();
        if opts.corrupt_gradient {
            analytic.iter_mut().for_each(|v| *v += CORRUPTION);
        }
        let theta = m.to_flat();
        let mut probe = m.clone();
        for (i, &a) in analytic.iter().enumerate() {
            let mut plus = theta.clone();
            plus[i] += FD_STEP;
            probe.set_flat(&plus)?;
            let fp = weighted_log_probs(&probe, &x, &states, &cp, &cq);
            let mut minus = theta.clone();
            minus[i] -= FD_STEP;
            probe.set_flat(&minus)?;
            let fm = weighted_log_probs(&probe, &x, &states, &cp, &cq);
            let fd = (fp - fm) / (2.0 * FD_STEP);
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1.0);
            worst = worst.max(rel);
        }
    }
    Ok(CheckOutcome {
        name: "layer gradients vs finite differences",
        passed: worst <= FD_REL_TOL,
        detail: format!("worst relative error {worst:.3e} over {} instances", opts.fd_instances),
    })
}

/// Per-coordinate comparison of a Monte-Carlo mean gradient with an exact target.
#[derive(Clone, Debug)]
pub struct GradientComparison {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub exact: Vec<f64>,
}

impl GradientComparison {
    /// Largest `|mean − exact| / (3·SE + floor)`; at most 1 means every coordinate passes.
    pub fn worst_ratio(&self) -> f64 {
        self.mean
            .iter()
            .zip(&self.std_err)
            .zip(&self.exact)
            .map(|((m, s), e)| (m - e).abs() / (SE_MULTIPLIER * s + SE_FLOOR))
            .fold(0.0, f64::max)
    }
}

/// Layer sizes, observation and particle count of the gradient-check model.
pub const GRADIENT_MODEL: [usize; 3] = [3, 2, 1];
pub const GRADIENT_X: [u8; 3] = [1, 0, 1];
pub const GRADIENT_K: usize = 4;

/// Averages `grad_loss` over `batches` independent particle batches and
/// compares it with finite differences of the exact expected loss.
pub fn compare_is_gradient(
    model: &BihmModel,
    x: &BinaryVector,
    k: usize,
    objective: Objective,
    batches: usize,
    rng: &mut RngState,
    corrupt: bool,
) -> Result<GradientComparison> {
    let dim = model.num_params();
    let mut sum = vec![0.0; dim];
    let mut sum_sq = vec![0.0; dim];
    for _ in 0..batches {
        let batch = sample_q(model, x, k, rng)?;
        let mut g = grad_loss(model, x, &batch, objective)?.to_flat();
        if corrupt {
            g.iter_mut().for_each(|v| *v += CORRUPTION);
        }
        for ((s, s2), v) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(g) {
            *s += v;
            *s2 += v * v;
        }
    }
    let n = batches as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_err = sum_sq
        .iter()
        .zip(&mean)
        .map(|(s2, m)| ((s2 / n - m * m).max(0.0) * n / (n - 1.0).max(1.0) / n).sqrt())
        .collect();

    let theta = model.to_flat();
    let sides = model.flat_sides();
    let mut probe = model.clone();
    let mut exact = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut eval_at = |delta: f64| -> Result<f64> {
            let mut th = theta.clone();
            th[i] += delta;
            probe.set_flat(&th)?;
            let e = expected_particle_loss(&probe, model, x, k, objective)?;
            Ok(match sides[i] {
                Side::Generative => e.loss,
                Side::Recognition => e.surrogate,
            })
        };
        let fd = (eval_at(FD_STEP)? - eval_at(-FD_STEP)?) / (2.0 * FD_STEP);
        exact.push(fd);
    }
    Ok(GradientComparison { mean, std_err, exact })
}

/// Importance-sampled gradients of the four training objectives against the exact expected loss.
pub fn check_is_gradients(opts: &SuiteOptions) -> Result<Vec<CheckOutcome>> {
    let mut rng = RngState::new(opts.seed).fork(3);
    let model = BihmModel::random(&GRADIENT_MODEL, 1.0, &mut rng)?;
    let x = BinaryVector::from_bits(&GRADIENT_X)?;
    [
        ("IS gradient: elbo", Objective::Elbo),
        ("IS gradient: bhattacharyya", Objective::Bhattacharyya),
        ("IS gradient: resistor", Objective::Resistor),
        ("IS gradient: chernoff-approx(0.2)", Objective::ChernoffApprox(0.2)),
    ]
    .into_iter()
    .enumerate()
    .map(|(i, (name, obj))| {
        let mut r = rng.fork(i as u64);
        let c = compare_is_gradient(
            &model,
            &x,
            GRADIENT_K,
            obj,
            opts.gradient_batches,
            &mut r,
            opts.corrupt_gradient,
        )?;
        let w = c.worst_ratio();
        Ok(CheckOutcome {
            name,
            passed: w <= 1.0,
            detail: format!("worst |mean − exact| / (3·SE + {SE_FLOOR:e}) = {w:.3}"),
        })
    })
    .collect()
}

/// The IS evidence estimate approaches `log p(x)` as `K` grows.
pub fn check_estimator_consistency(opts: &SuiteOptions) -> Result<CheckOutcome> {
    let mut rng = RngState::new(opts.seed).fork(4);
    let model = BihmModel::random(&[5, 3, 2], 1.5, &mut rng)?;
    let x = random_x(5, &mut rng);
    let log_px = enumerate(&model, &x)?.log_px();
    let ks = [10usize, 100, 1000, 10_000];
    let mut medians = Vec::new();
    for (j, &k) in ks.iter().enumerate() {
        let mut errs: Vec<f64> = (0..100u64)
            .map(|s| {
                let mut r = rng.fork(1000 * j as u64 + s);
                let b = sample_q(&model, &x, k, &mut r)?;
                Ok((objective::tempered_bound(b.log_weights(), 1.0)? - log_px).abs())
            })
            .collect::<Result<_>>()?;
        errs.sort_by(f64::total_cmp);
        medians.push(0.5 * (errs[49] + errs[50]));
    }
    let passed = medians.windows(2).all(|w| w[1] < w[0]);
    Ok(CheckOutcome {
        name: "estimator consistency",
        passed,
        detail: format!(
            "median |error| at K = {ks:?}: {}",
            medians
                .iter()
                .map(|m| format!("{m:.3e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    })
}

/// Nonnegative conditional-KL estimates and `ESS ∈ [1, K]` on sampled batches.
pub fn check_batch_invariants(opts: &SuiteOptions) -> Result<CheckOutcome> {
    let mut rng = RngState::new(opts.seed).fork(5);
    let mut ok = true;
    for _ in 0..200 {
        let (m, x) = random_tiny(&mut rng, 12)?;
        let k = 1 + rng.below(50);
        let b = sample_q(&m, &x, k, &mut rng)?;
        let (a, d) = b.conditional_kl_estimates();
        let e = b.ess();
        ok &= a >= 0.0 && d >= 0.0 && (1.0..=k as f64).contains(&e);
    }
    Ok(CheckOutcome {
        name: "batch invariants",
        passed: ok,
        detail: "conditional KL estimates ≥ 0 and ESS in [1, K] on 200 batches".into(),
    })
}

/// Runs every check in order.
pub fn run_suite(opts: &SuiteOptions) -> Result<Vec<CheckOutcome>> {
    let mut out = vec![check_bound_chain(opts)?, check_layer_gradients(opts)?];
    out.extend(check_is_gradients(opts)?);
    out.push(check_estimator_consistency(opts)?);
    out.push(check_batch_invariants(opts)?);
    Ok(out)
}

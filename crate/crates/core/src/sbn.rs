//! Conditional Bernoulli layers of a sigmoid belief network.
//!
//! A layer models `p(child | parent) = Π_j Bernoulli(child_j; σ(W parent + b)_j)`.
//! Row-batched variants operate on `(K × dim)` matrices whose rows are
//! independent particles.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};

use crate::error::{Error, Result};
use crate::numeric::{sigmoid, sigmoid_softplus};
use crate::rng::RngState;

/// A vector with entries in `{0, 1}`, stored as `f64` for arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryVector(Array1<f64>);

impl BinaryVector {
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::domain(format!("non-binary entry {b}")));
        }
        Ok(Self(bits.iter().map(|&b| b as f64).collect()))
    }

    pub fn from_f64(values: &[f64]) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::domain(format!("non-binary entry {v}")));
        }
        Ok(Self(Array1::from(values.to_vec())))
    }

    pub fn zeros(len: usize) -> Self {
        Self(Array1::zeros(len))
    }

    pub fn ones(len: usize) -> Self {
        Self(Array1::ones(len))
    }

    pub(crate) fn from_array_unchecked(a: Array1<f64>) -> Self {
        Self(a)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.0.iter().map(|&v| v as u8).collect()
    }
}

/// Affine map into Bernoulli logits: `weights` is `(child_dim × parent_dim)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

/// Factorized Bernoulli prior over the top layer.
#[derive(Clone, Debug, PartialEq)]
pub struct TopPriorParams {
    pub logits: Array1<f64>,
}

impl LayerParams {
    pub fn new(weights: Array2<f64>, biases: Array1<f64>) -> Result<Self> {
        if weights.nrows() != biases.len() {
            return Err(Error::dim(format!(
                "weights have {} rows but biases have length {}",
                weights.nrows(),
                biases.len()
            )));
        }
        if weights.iter().chain(biases.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("layer parameters must be finite"));
        }
        Ok(Self { weights, biases })
    }

    pub fn zeros(child_dim: usize, parent_dim: usize) -> Self {
        Self {
            weights: Array2::zeros((child_dim, parent_dim)),
            biases: Array1::zeros(child_dim),
        }
    }

    pub fn child_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn parent_dim(&self) -> usize {
        self.weights.ncols()
    }

    fn check_parent(&self, len: usize) -> Result<()> {
        if len != self.parent_dim() {
            return Err(Error::dim(format!(
                "parent length {len}, layer expects {}",
                self.parent_dim()
            )));
        }
        Ok(())
    }

    fn check_child(&self, len: usize) -> Result<()> {
        if len != self.child_dim() {
            return Err(Error::dim(format!(
                "child length {len}, layer expects {}",
                self.child_dim()
            )));
        }
        Ok(())
    }

    pub fn conditional_logits(&self, parent: &BinaryVector) -> Result<Array1<f64>> {
        self.check_parent(parent.len())?;
        Ok(self.weights.dot(parent.as_array()) + &self.biases)
    }

    pub fn log_prob(&self, parent: &BinaryVector, child: &BinaryVector) -> Result<f64> {
        self.check_child(child.len())?;
        let logits = self.conditional_logits(parent)?;
        Ok(bernoulli_log_prob(logits.view(), child.view()))
    }

    pub fn sample(&self, parent: &BinaryVector, rng: &mut RngState) -> Result<BinaryVector> {
        let logits = self.conditional_logits(parent)?;
        Ok(BinaryVector(sample_bernoulli(logits.view(), rng)))
    }

    /// Gradient of `log_prob` with respect to `(weights, biases)`.
    pub fn grad_log_prob(&self, parent: &BinaryVector, child: &BinaryVector) -> Result<(Array2<f64>, Array1<f64>)> {
        self.check_child(child.len())?;
        let logits = self.conditional_logits(parent)?;
        let delta: Array1<f64> = Zip::from(child.as_array())
            .and(&logits)
            .map_collect(|&c, &z| c - sigmoid(z));
        let outer = delta
            .view()
            .insert_axis(Axis(1))
            .dot(&parent.as_array().view().insert_axis(Axis(0)));
        Ok((outer, delta))
    }

    /// Row-batched logits `parents · Wᵀ + b` for `(K × parent_dim)` input.
    pub fn logits_rows(&self, parents: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = parents.dot(&self.weights.t());
        out += &self.biases;
        out
    }

    /// Number of scalar parameters.
    pub fn num_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

impl TopPriorParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            logits: Array1::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.logits.len()
    }

    pub fn log_prob(&self, child: &BinaryVector) -> Result<f64> {
        if child.len() != self.dim() {
            return Err(Error::dim(format!(
                "child length {}, prior expects {}",
                child.len(),
                self.dim()
            )));
        }
        Ok(bernoulli_log_prob(self.logits.view(), child.view()))
    }

    pub fn sample(&self, rng: &mut RngState) -> BinaryVector {
        BinaryVector(sample_bernoulli(self.logits.view(), rng))
    }

    pub fn grad_log_prob(&self, child: &BinaryVector) -> Result<Array1<f64>> {
        if child.len() != self.dim() {
            return Err(Error::dim("child length does not match prior"));
        }
        Ok(Zip::from(child.as_array())
            .and(&self.logits)
            .map_collect(|&c, &z| c - sigmoid(z)))
    }
}

/// `Σ_j c_j z_j − softplus(z_j)`, the Bernoulli log-likelihood in logit form.
pub fn bernoulli_log_prob(logits: ArrayView1<'_, f64>, child: ArrayView1<'_, f64>) -> f64 {
    Zip::from(&logits)
        .and(&child)
        .fold(0.0, |acc, &z, &c| acc + c * z - sigmoid_softplus(z).1)
}

pub fn sample_bernoulli(logits: ArrayView1<'_, f64>, rng: &mut RngState) -> Array1<f64> {
    logits
        .iter()
        .map(|&z| if rng.bernoulli(sigmoid(z)) { 1.0 } else { 0.0 })
        .collect()
}

/// Per-row log-probabilities of `children` under `logits`; replaces `logits`
/// in place with `σ(logits)` so callers can reuse the means for gradients.
pub fn log_prob_rows_into_sigmoid(logits: &mut Array2<f64>, children: ArrayView2<'_, f64>) -> Array1<f64> {
    let mut out = Array1::zeros(logits.nrows());
    Zip::from(logits.rows_mut())
        .and(children.rows())
        .and(&mut out)
        .for_each(|mut z_row, c_row, o| {
            let mut acc = 0.0;
            let mut prod = 1.0;
            for (j, (z, &c)) in z_row.iter_mut().zip(c_row.iter()).enumerate() {
                // softplus(z) = max(z, 0) + log(1 + e) with e = exp(−|z|); the
                // log terms are accumulated as a product, flushed before overflow.
                let e = (-z.abs()).exp();
                let one_plus = 1.0 + e;
                acc += c * *z - z.max(0.0);
                prod *= one_plus;
                if j % PRODUCT_FLUSH == PRODUCT_FLUSH - 1 {
                    acc -= prod.ln();
                    prod = 1.0;
                }
                *z = if *z >= 0.0 { 1.0 / one_plus } else { e / one_plus };
            }
            *o = acc - prod.ln();
        });
    out
}

/// Factors in `(1, 2]` multiplied before taking a logarithm (`2^512` is finite).
const PRODUCT_FLUSH: usize = 512;

/// Row-wise Bernoulli draws from logits.
pub fn sample_rows(logits: ArrayView2<'_, f64>, rng: &mut RngState) -> Array2<f64> {
    logits.mapv(|z| if rng.bernoulli(sigmoid(z)) { 1.0 } else { 0.0 })
}

/// Broadcasts a single row to `k` identical rows.
pub fn repeat_row(row: ArrayView1<'_, f64>, k: usize) -> Array2<f64> {
    let mut out = Array2::zeros((k, row.len()));
    for mut r in out.rows_mut() {
        r.assign(&row);
    }
    out
}

/// Enumerates `{0,1}^d` in binary counting order (`d ≤ 30`).
pub fn enumerate_binary(d: usize) -> Array2<f64> {
    let n = 1usize << d;
    let mut out = Array2::zeros((n, d));
    for i in 0..n {
        let mut row = out.slice_mut(s![i, ..]);
        for j in 0..d {
            row[j] = ((i >> j) & 1) as f64;
        }
    }
    out
}

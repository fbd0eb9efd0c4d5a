use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::sbn::{BinaryVector, LayerParams, TopPriorParams};

/// Paired top-down generative and bottom-up recognition stacks over
/// `layer_sizes = [x_dim, h1_dim, …, hL_dim]`.
///
/// `generative[l]` parameterizes `p(h_l | h_{l+1})` with `h_0 = x`, so it has
/// shape `(sizes[l] × sizes[l+1])`; `prior` covers `p(h_L)`.
/// `recognition[l]` parameterizes `q(h_{l+1} | h_l)` with shape
/// `(sizes[l+1] × sizes[l])`.
///
/// The same type doubles as a gradient container (see [`GradientSet`]).
#[derive(Clone, Debug, PartialEq)]
pub struct BihmModel {
    layer_sizes: Vec<usize>,
    pub prior: TopPriorParams,
    pub generative: Vec<LayerParams>,
    pub recognition: Vec<LayerParams>,
}

/// Gradients share the model's parameter shapes.
pub type GradientSet = BihmModel;

/// Which side of the model a tensor belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Generative,
    Recognition,
}

/// A named, shaped view of one parameter tensor.
pub struct TensorRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub side: Side,
    pub is_weight_matrix: bool,
    pub data: &'a [f64],
}

pub struct TensorMut<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub side: Side,
    pub is_weight_matrix: bool,
    pub data: &'a mut [f64],
}

impl BihmModel {
    /// All-zero parameters: every conditional is uniform.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::domain("need at least one latent layer"));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::domain("layer sizes must be positive"));
        }
        let depth = layer_sizes.len() - 1;
        let generative = (0..depth)
            .map(|l| LayerParams::zeros(layer_sizes[l], layer_sizes[l + 1]))
            .collect();
        let recognition = (0..depth)
            .map(|l| LayerParams::zeros(layer_sizes[l + 1], layer_sizes[l]))
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            prior: TopPriorParams::zeros(layer_sizes[depth]),
            generative,
            recognition,
        })
    }

    /// Assembles a model from explicit parameters, checking every shape.
    pub fn from_parts(
        layer_sizes: &[usize],
        prior: TopPriorParams,
        generative: Vec<LayerParams>,
        recognition: Vec<LayerParams>,
    ) -> Result<Self> {
        let model = Self {
            layer_sizes: layer_sizes.to_vec(),
            prior,
            generative,
            recognition,
        };
        let reference = Self::zeros(layer_sizes)?;
        let ours: Vec<Vec<usize>> = model.tensors().into_iter().map(|t| t.shape).collect();
        let want: Vec<Vec<usize>> = reference.tensors().into_iter().map(|t| t.shape).collect();
        if ours != want {
            return Err(Error::dim(format!(
                "parameter shapes {ours:?} do not match layer sizes {layer_sizes:?}"
            )));
        }
        Ok(model)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.layer_sizes).expect("sizes already validated")
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn x_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    /// Number of latent layers `L`.
    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn latent_bits(&self) -> usize {
        self.layer_sizes[1..].iter().sum()
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    /// Tensors in canonical order: prior, generative layers, recognition layers.
    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = vec![TensorRef {
            name: "gen.prior.logits".into(),
            shape: vec![self.prior.logits.len()],
            side: Side::Generative,
            is_weight_matrix: false,
            data: self.prior.logits.as_slice().expect("contiguous"),
        }];
        for (prefix, side, layers) in [
            ("gen", Side::Generative, &self.generative),
            ("rec", Side::Recognition, &self.recognition),
        ] {
            for (l, layer) in layers.iter().enumerate() {
                out.push(TensorRef {
                    name: format!("{prefix}.{l}.weights"),
                    shape: layer.weights.shape().to_vec(),
                    side,
                    is_weight_matrix: true,
                    data: layer.weights.as_slice().expect("contiguous"),
                });
                out.push(TensorRef {
                    name: format!("{prefix}.{l}.biases"),
                    shape: vec![layer.biases.len()],
                    side,
                    is_weight_matrix: false,
                    data: layer.biases.as_slice().expect("contiguous"),
                });
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = vec![TensorMut {
            name: "gen.prior.logits".into(),
            shape: vec![self.prior.logits.len()],
            side: Side::Generative,
            is_weight_matrix: false,
            data: self.prior.logits.as_slice_mut().expect("contiguous"),
        }];
        for (prefix, side, layers) in [
            ("gen", Side::Generative, &mut self.generative),
            ("rec", Side::Recognition, &mut self.recognition),
        ] {
            for (l, layer) in layers.iter_mut().enumerate() {
                let shape = layer.weights.shape().to_vec();
                let blen = layer.biases.len();
                out.push(TensorMut {
                    name: format!("{prefix}.{l}.weights"),
                    shape,
                    side,
                    is_weight_matrix: true,
                    data: layer.weights.as_slice_mut().expect("contiguous"),
                });
                out.push(TensorMut {
                    name: format!("{prefix}.{l}.biases"),
                    shape: vec![blen],
                    side,
                    is_weight_matrix: false,
                    data: layer.biases.as_slice_mut().expect("contiguous"),
                });
            }
        }
        out
    }

    /// Concatenation of all tensors in canonical order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.data.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::dim(format!(
                "flat vector has {} entries, model has {}",
                flat.len(),
                self.num_params()
            )));
        }
        let mut off = 0;
        for t in self.tensors_mut() {
            let n = t.data.len();
            t.data.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    /// Side of each flat coordinate.
    pub fn flat_sides(&self) -> Vec<Side> {
        self.tensors()
            .iter()
            .flat_map(|t| std::iter::repeat_n(t.side, t.data.len()))
            .collect()
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.data.iter_mut().zip(b.data) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.data.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    pub(crate) fn check_x(&self, x: &BinaryVector) -> Result<()> {
        if x.len() != self.x_dim() {
            return Err(Error::dim(format!(
                "observation length {}, model expects {}",
                x.len(),
                self.x_dim()
            )));
        }
        Ok(())
    }

    /// Top-down ancestral ("dream") sample: returns `x` and `[h_1, …, h_L]`.
    pub fn sample_p(&self, rng: &mut RngState) -> (BinaryVector, Vec<BinaryVector>) {
        let depth = self.depth();
        let mut latents = vec![BinaryVector::zeros(0); depth];
        latents[depth - 1] = self.prior.sample(rng);
        for l in (1..depth).rev() {
            latents[l - 1] = self.generative[l]
                .sample(&latents[l], rng)
                .expect("shapes validated at construction");
        }
        let x = self.generative[0]
            .sample(&latents[0], rng)
            .expect("shapes validated at construction");
        (x, latents)
    }

    /// Random model with entries uniform in `±scale`; used by tests and the oracle suite.
    pub fn random(layer_sizes: &[usize], scale: f64, rng: &mut RngState) -> Result<Self> {
        let mut m = Self::zeros(layer_sizes)?;
        for t in m.tensors_mut() {
            for v in t.data.iter_mut() {
                *v = scale * (2.0 * rng.uniform() - 1.0);
            }
        }
        Ok(m)
    }
}

/// Latent states for `K` particles, one `(K × h_l)` matrix per latent layer.
pub type LayerStates = Vec<Array2<f64>>;

pub(crate) fn column_sums(a: &Array2<f64>) -> Array1<f64> {
    a.sum_axis(ndarray::Axis(0))
}

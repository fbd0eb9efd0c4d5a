//! Mini-batch training with Adam and proximal L1, evaluation, metrics and checkpoints.

mod checkpoint;
mod optimizer;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::bihm::{
    accumulate_grad, estimate_nll, layerwise_terms, objective, sample_q_with_eval, BihmModel, LayerTemperatures,
    Objective,
};
use crate::data_io::BinaryDataset;
use crate::error::{Error, Result};
use crate::numeric::logit;
use crate::rng::RngState;

pub use checkpoint::{from_bytes, load_checkpoint, save_checkpoint, to_bytes, Checkpoint, MAGIC};
pub use optimizer::{shrink_weights, Adam, BETA1, BETA2, EPSILON};

/// Examples per parallel work unit. Gradients are summed within a chunk and
/// then across chunks in index order, so results do not depend on the
/// number of workers.
pub const REDUCTION_CHUNK: usize = 10;
/// Clamp on the visible generative bias at initialization.
pub const VISIBLE_BIAS_CLAMP: f64 = 5.0;

const SHUFFLE_TAG: u64 = 0x5348_5546;
const PARTICLE_TAG: u64 = 0x5041_5254;
const VALID_TAG: u64 = 0x5641_4c49;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub layer_sizes: Vec<usize>,
    pub objective: Objective,
    pub learning_rate: f64,
    pub l1: f64,
    pub particles: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Particles for validation NLL.
    pub eval_particles: usize,
    /// Validation NLL is computed every this many epochs and after the last one; 0 disables it.
    pub eval_every: usize,
}

impl TrainConfig {
    pub fn new(layer_sizes: Vec<usize>, objective: Objective, seed: u64) -> Self {
        Self {
            layer_sizes,
            objective,
            learning_rate: 0.001,
            l1: 1e-3,
            particles: 100,
            epochs: 70,
            batch_size: 100,
            seed,
            eval_particles: 100,
            eval_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return Err(Error::domain(format!("invalid layer sizes {:?}", self.layer_sizes)));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain("learning rate must be a nonnegative number"));
        }
        if !(self.l1 >= 0.0 && self.l1.is_finite()) {
            return Err(Error::domain("l1 must be a nonnegative number"));
        }
        if self.particles == 0 || self.batch_size == 0 || self.eval_particles == 0 {
            return Err(Error::domain("particle counts and batch size must be positive"));
        }
        Ok(())
    }
}

/// Per-epoch record. Wall-clock time is kept out of the serialized form so
/// metrics files are reproducible; it is emitted separately.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_nll: Option<f64>,
    pub mean_ess: f64,
    /// Mean per-layer tempered terms at `t_l = ½` over the epoch's training particles.
    pub per_layer: Option<Vec<f64>>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl MetricsRow {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,valid_nll,mean_ess,per_layer";

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    pub fn to_csv(&self) -> String {
        let nll = self.valid_nll.map(|v| v.to_string()).unwrap_or_default();
        let layers = self
            .per_layer
            .as_ref()
            .map(|v| v.iter().map(f64::to_string).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        format!(
            "{},{},{},{},{}",
            self.epoch, self.train_loss, nll, self.mean_ess, layers
        )
    }
}

/// Glorot-uniform weights, zero hidden biases, and visible generative biases
/// at the clamped logit of each pixel's training mean.
pub fn init_model(config: &TrainConfig, data: &BinaryDataset, rng: &mut RngState) -> Result<BihmModel> {
    config.validate()?;
    if data.dim() != config.layer_sizes[0] {
        return Err(Error::dim(format!(
            "data has {} dimensions, model expects {}",
            data.dim(),
            config.layer_sizes[0]
        )));
    }
    let means = data.pixel_means()?;
    let mut model = BihmModel::zeros(&config.layer_sizes)?;
    for t in model.tensors_mut().into_iter().filter(|t| t.is_weight_matrix) {
        let bound = glorot_bound(t.shape[1], t.shape[0]);
        for w in t.data.iter_mut() {
            *w = bound * (2.0 * rng.uniform() - 1.0);
        }
    }
    for (b, m) in model.generative[0].biases.iter_mut().zip(means) {
        *b = logit(m).clamp(-VISIBLE_BIAS_CLAMP, VISIBLE_BIAS_CLAMP);
    }
    Ok(model)
}

/// `√(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

struct ChunkSums {
    grad: BihmModel,
    loss: f64,
    ess: f64,
    layers: Vec<f64>,
}

fn weight_stats(model: &BihmModel) -> String {
    model
        .tensors()
        .iter()
        .map(|t| {
            let max = t.data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let nonfinite = t.data.iter().filter(|v| !v.is_finite()).count();
            format!("{} max|w|={max:.3e} nonfinite={nonfinite}", t.name)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Loss and gradient sums over `order[lo..hi]`, each example with its own particle stream.
fn chunk_sums(
    model: &BihmModel,
    data: &BinaryDataset,
    order: &[usize],
    lo: usize,
    hi: usize,
    config: &TrainConfig,
    epoch_rng: &RngState,
) -> Result<ChunkSums> {
    let depth = model.depth();
    let mut acc = ChunkSums {
        grad: model.zeros_like(),
        loss: 0.0,
        ess: 0.0,
        layers: vec![0.0; depth],
    };
    let temps = LayerTemperatures::Fixed(vec![0.5; depth]);
    for (pos, &idx) in order.iter().enumerate().take(hi).skip(lo) {
        let x = data.example(idx);
        let mut rng = epoch_rng.fork(pos as u64);
        let (batch, eval) = sample_q_with_eval(model, &x, config.particles, &mut rng)?;
        let lw = batch.log_weights();
        acc.loss += objective::loss(config.objective, lw)?;
        acc.ess += objective::ess(lw);
        let k = lw.len();
        let mass = vec![-(k as f64).ln(); k];
        for (a, t) in acc
            .layers
            .iter_mut()
            .zip(layerwise_terms(&eval.layer_log_ratios(), &mass, &temps)?)
        {
            *a += t.bound;
        }
        accumulate_grad(&mut acc.grad, &x, &batch.states, &eval, config.objective, 1.0)?;
    }
    Ok(acc)
}

/// One pass over `data` in an epoch-seeded order. `epoch` is 1-based.
/// Validation is left to the caller; the returned row has `valid_nll = None`.
pub fn train_epoch(
    model: &mut BihmModel,
    optimizer: &mut Adam,
    data: &BinaryDataset,
    config: &TrainConfig,
    epoch: usize,
) -> Result<MetricsRow> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::domain("empty training set"));
    }
    let start = Instant::now();
    let root = RngState::new(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    root.fork(SHUFFLE_TAG).fork(epoch as u64).shuffle(&mut order);
    let epoch_rng = root.fork(PARTICLE_TAG).fork(epoch as u64);

    let depth = model.depth();
    let (mut loss_sum, mut ess_sum) = (0.0, 0.0);
    let mut layer_sum = vec![0.0; depth];
    for (b, batch_start) in (0..data.len()).step_by(config.batch_size).enumerate() {
        let batch_end = (batch_start + config.batch_size).min(data.len());
        let starts: Vec<usize> = (batch_start..batch_end).step_by(REDUCTION_CHUNK).collect();
        let parts = starts
            .par_iter()
            .map(|&lo| {
                let hi = (lo + REDUCTION_CHUNK).min(batch_end);
                chunk_sums(model, data, &order, lo, hi, config, &epoch_rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut grad = model.zeros_like();
        let mut batch_loss = 0.0;
        for p in &parts {
            grad.add_scaled(&p.grad, 1.0);
            batch_loss += p.loss;
            ess_sum += p.ess;
            for (a, v) in layer_sum.iter_mut().zip(&p.layers) {
                *a += v;
            }
        }
        let n = (batch_end - batch_start) as f64;
        grad.scale(1.0 / n);
        if !batch_loss.is_finite() || !grad.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                batch: b,
                diagnostic: format!("batch loss {batch_loss}; {}", weight_stats(model)),
            });
        }
        loss_sum += batch_loss;
        optimizer.update(model, &grad, config.learning_rate);
        shrink_weights(model, config.learning_rate * config.l1);
        if !model.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                batch: b,
                diagnostic: format!("parameters after update; {}", weight_stats(model)),
            });
        }
    }
    let n = data.len() as f64;
    Ok(MetricsRow {
        epoch,
        train_loss: loss_sum / n,
        valid_nll: None,
        mean_ess: ess_sum / n,
        per_layer: Some(layer_sum.into_iter().map(|v| v / n).collect()),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Mean of [`estimate_nll`] over `data`; example `i` draws from `rng.fork(i)`.
pub fn evaluate(model: &BihmModel, data: &BinaryDataset, k: usize, rng: &RngState) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::domain("empty evaluation set"));
    }
    let starts: Vec<usize> = (0..data.len()).step_by(REDUCTION_CHUNK).collect();
    let parts = starts
        .par_iter()
        .map(|&lo| {
            (lo..(lo + REDUCTION_CHUNK).min(data.len()))
                .map(|i| estimate_nll(model, &data.example(i), k, &mut rng.fork(i as u64)))
                .sum::<Result<f64>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.iter().sum::<f64>() / data.len() as f64)
}

/// Model, optimizer and progress of one run.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub config: TrainConfig,
    pub model: BihmModel,
    pub optimizer: Adam,
    pub epoch: usize,
}

impl Trainer {
    /// Fresh run initialized from the training data.
    pub fn new(config: TrainConfig, train: &BinaryDataset) -> Result<Self> {
        let model = init_model(&config, train, &mut RngState::new(config.seed).fork(0))?;
        Ok(Self {
            optimizer: Adam::new(&model),
            model,
            config,
            epoch: 0,
        })
    }

    pub fn from_checkpoint(config: TrainConfig, c: Checkpoint) -> Result<Self> {
        if c.model.layer_sizes() != config.layer_sizes.as_slice() {
            return Err(Error::Consistency(format!(
                "checkpoint layer sizes {:?} differ from config {:?}",
                c.model.layer_sizes(),
                config.layer_sizes
            )));
        }
        Ok(Self {
            config,
            model: c.model,
            optimizer: c.optimizer,
            epoch: c.epoch,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model: self.model.clone(),
            optimizer: self.optimizer.clone(),
            objective: self.config.objective,
            seed: self.config.seed,
            epoch: self.epoch,
        }
    }

    /// Trains one epoch and, when scheduled, evaluates on `valid`.
    pub fn step_epoch(&mut self, train: &BinaryDataset, valid: Option<&BinaryDataset>) -> Result<MetricsRow> {
        let epoch = self.epoch + 1;
        let mut row = train_epoch(&mut self.model, &mut self.optimizer, train, &self.config, epoch)?;
        self.epoch = epoch;
        let every = self.config.eval_every;
        if let Some(v) = valid {
            if every > 0 && (epoch.is_multiple_of(every) || epoch == self.config.epochs) {
                let start = Instant::now();
                let rng = RngState::new(self.config.seed).fork(VALID_TAG);
                row.valid_nll = Some(evaluate(&self.model, v, self.config.eval_particles, &rng)?);
                row.wall_seconds += start.elapsed().as_secs_f64();
            }
        }
        Ok(row)
    }
}

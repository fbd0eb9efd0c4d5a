//! Bound objectives raise the exact evidence of a small dataset; the Resistor
//! objective, which carries no evidence term, shrinks the exact posterior mismatch.

use helmholtz::bihm::{enumerate, exact_oracle, Objective};
use helmholtz::data_io::{BinaryDataset, Split};
use helmholtz::trainer::{TrainConfig, Trainer};
use helmholtz::RngState;
use ndarray::Array2;

const EXAMPLES: usize = 20;
const DIM: usize = 6;

/// Two noisy prototypes, so a single latent bit already helps.
fn dataset() -> BinaryDataset {
    let mut rng = RngState::new(11);
    let protos = [[1u8, 1, 1, 0, 0, 0], [0, 0, 1, 1, 1, 1]];
    let flat: Vec<u8> = (0..EXAMPLES)
        .flat_map(|i| protos[i % 2].to_vec())
        .map(|b| if rng.bernoulli(0.05) { 1 - b } else { b })
        .collect();
    BinaryDataset::new(Split::Train, Array2::from_shape_vec((EXAMPLES, DIM), flat).unwrap()).unwrap()
}

fn mean_log_px(trainer: &Trainer, data: &BinaryDataset) -> f64 {
    (0..data.len())
        .map(|i| exact_oracle(&trainer.model, &data.example(i)).unwrap().log_px)
        .sum::<f64>()
        / data.len() as f64
}

/// Mean exact `D1·D2/(D1+D2)` between `q(h|x)` and `p(h|x)`.
fn mean_resistor(trainer: &Trainer, data: &BinaryDataset) -> f64 {
    (0..data.len())
        .map(|i| {
            let (a, b) = enumerate(&trainer.model, &data.example(i)).unwrap().conditional_kls();
            if a + b == 0.0 {
                0.0
            } else {
                a * b / (a + b)
            }
        })
        .sum::<f64>()
        / data.len() as f64
}

fn trained(objective: Objective, data: &BinaryDataset) -> (Trainer, Trainer) {
    let mut config = TrainConfig::new(vec![DIM, 3, 2], objective, 5);
    config.learning_rate = 0.02;
    config.l1 = 0.0;
    config.particles = 20;
    config.batch_size = 5;
    config.epochs = 40;
    let initial = Trainer::new(config.clone(), data).unwrap();
    let mut trainer = initial.clone();
    for _ in 0..config.epochs {
        trainer.step_epoch(data, None).unwrap();
    }
    (initial, trainer)
}

fn improves(objective: Objective) {
    let data = dataset();
    let (initial, trainer) = trained(objective, &data);
    let (before, after) = (mean_log_px(&initial, &data), mean_log_px(&trainer, &data));
    assert!(after > before + 0.5, "{objective}: {before:.3} -> {after:.3}");
}

#[test]
fn elbo_improves() {
    improves(Objective::Elbo);
}

#[test]
fn tempered_improves() {
    improves(Objective::Tempered(0.7));
}

#[test]
fn bhattacharyya_improves() {
    improves(Objective::Bhattacharyya);
}

#[test]
fn resistor_aligns_posteriors() {
    let data = dataset();
    let (initial, trainer) = trained(Objective::Resistor, &data);
    let (before, after) = (mean_resistor(&initial, &data), mean_resistor(&trainer, &data));
    assert!(after < 0.5 * before, "{before:.4} -> {after:.4}");
}

#[test]
fn chernoff_approx_improves() {
    improves(Objective::ChernoffApprox(0.2));
}

#![allow(dead_code)]

use csnk_core::tensor_net::{Activation, Batch, Loss, Model, Tensor, Targets};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub model: Model,
    pub loss: Loss,
    pub batch: Batch,
    pub w: Vec<f64>,
}

pub const SMOOTH: [Activation; 5] = [
    Activation::Sigmoid,
    Activation::Tanh,
    Activation::Sin,
    Activation::Elu,
    Activation::None,
];

/// Random two-layer net with at most `5·5 + 5 + 5·3 + 3 = 48` parameters.
pub fn random_instance(seed: u64, activations: &[Activation], losses: &[Loss]) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loss = losses[rng.random_range(0..losses.len())];
    let activation = activations[rng.random_range(0..activations.len())];
    let d = rng.random_range(2..=5);
    let hidden = rng.random_range(2..=5);
    let out = if loss == Loss::Logistic { 1 } else { rng.random_range(2..=3) };
    let rows = rng.random_range(1..=6);
    let model = Model::mlp(&[d, hidden, out], activation, None).unwrap();
    let batch = random_batch(&mut rng, loss, rows, d, out);
    let w = (0..model.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    Instance { model, loss, batch, w }
}

pub fn random_batch(rng: &mut ChaCha8Rng, loss: Loss, rows: usize, d: usize, out: usize) -> Batch {
    let x = Tensor::from_vec(vec![rows, d], (0..rows * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
    let targets = match loss {
        Loss::Mse => Targets::Values(
            Tensor::from_vec(vec![rows, out], (0..rows * out).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap(),
        ),
        Loss::Logistic => Targets::Labels((0..rows).map(|_| rng.random_range(0..2)).collect()),
        _ => Targets::Labels((0..rows).map(|_| rng.random_range(0..out)).collect()),
    };
    Batch::new(x, targets).unwrap()
}

pub fn random_direction(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

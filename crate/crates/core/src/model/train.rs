//! Mini-batch training with momentum SGD or Adam, validation tracking and
//! best-checkpoint selection. Deterministic given the seed.

use crate::action::ActionClass;
use crate::model::dataset::Dataset;
use crate::model::layout::Params;
use crate::model::network::{loss_and_grad, predict, ModelInput};
use crate::model::{FusionConfig, ModelError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Sgd { lr: f64, momentum: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Sgd { lr: 1e-2, momentum: 0.9 }
    }
}

impl Optimizer {
    pub fn adam(lr: f64) -> Optimizer {
        Optimizer::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Optimizer state over the flat parameter vector.
enum OptState {
    Sgd { velocity: Vec<f64> },
    Adam { m: Vec<f64>, v: Vec<f64>, t: u64 },
}

impl OptState {
    fn new(opt: &Optimizer, len: usize) -> OptState {
        match opt {
            Optimizer::Sgd { .. } => OptState::Sgd { velocity: vec![0.0; len] },
            Optimizer::Adam { .. } => OptState::Adam {
                m: vec![0.0; len],
                v: vec![0.0; len],
                t: 0,
            },
        }
    }

    fn step(&mut self, opt: &Optimizer, params: &mut [f64], grad: &[f64]) {
        match (self, opt) {
            (OptState::Sgd { velocity }, Optimizer::Sgd { lr, momentum }) => {
                for i in 0..params.len() {
                    velocity[i] = momentum * velocity[i] - lr * grad[i];
                    params[i] += velocity[i];
                }
            }
            (OptState::Adam { m, v, t }, Optimizer::Adam { lr, beta1, beta2, eps }) => {
                *t += 1;
                let bc1 = 1.0 - beta1.powi(*t as i32);
                let bc2 = 1.0 - beta2.powi(*t as i32);
                for i in 0..params.len() {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
                    let mhat = m[i] / bc1;
                    let vhat = v[i] / bc2;
                    params[i] -= lr * mhat / (vhat.sqrt() + eps);
                }
            }
            _ => unreachable!("optimizer state mismatch"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub shuffle_seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 30,
            batch_size: 16,
            optimizer: Optimizer::default(),
            shuffle_seed: 0,
        }
    }
}

/// One row of the metric log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

#[derive(Debug)]
pub struct TrainedModel {
    /// Parameters at the best validation accuracy.
    pub params: Params,
    pub metrics: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
}

/// Classify every sample of a split; returns accuracy.
pub fn evaluate_accuracy(params: &Params, data: &Dataset) -> Result<f64, ModelError> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let correct = predict_dataset(params, data)?
        .iter()
        .zip(&data.samples)
        .filter(|(pred, s)| **pred == s.label)
        .count();
    Ok(correct as f64 / data.len() as f64)
}

/// Predicted label per sample, in order.
pub fn predict_dataset(params: &Params, data: &Dataset) -> Result<Vec<ActionClass>, ModelError> {
    data.samples
        .par_iter()
        .map(|s| {
            let input = s.to_input(&data.stats);
            predict(params, &input).map(|p| p.label)
        })
        .collect()
}

/// Train from scratch (or continue from `resume`) on the train split,
/// validating each epoch and returning the best-validation parameters.
pub fn train(
    config: &FusionConfig,
    train_set: &Dataset,
    val_set: &Dataset,
    opts: &TrainOptions,
    resume: Option<Params>,
) -> Result<TrainedModel, ModelError> {
    config.validate()?;
    train_set.check_shapes(config)?;
    val_set.check_shapes(config)?;
    if train_set.is_empty() {
        return Err(ModelError::Dataset("empty training split".into()));
    }
    let missing = train_set.missing_classes();
    if !missing.is_empty() {
        return Err(ModelError::Dataset(format!(
            "classes missing from training split: {}",
            missing
                .iter()
                .map(|c| c.name())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }

    let mut params = match resume {
        Some(p) => {
            if p.config != *config {
                return Err(ModelError::Config(
                    "resume checkpoint config differs from requested config".into(),
                ));
            }
            p
        }
        None => Params::init(config)?,
    };
    let mut state = OptState::new(&opts.optimizer, params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.shuffle_seed);

    let mut best = params.clone();
    let mut best_val = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut metrics = Vec::with_capacity(opts.epochs);

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        let mut seen = 0usize;
        for chunk in order.chunks(opts.batch_size.max(1)) {
            let inputs: Vec<ModelInput> = chunk
                .iter()
                .map(|&i| train_set.samples[i].to_input(&train_set.stats))
                .collect();
            let batch: Vec<(&ModelInput, ActionClass)> = inputs
                .iter()
                .zip(chunk.iter().map(|&i| train_set.samples[i].label))
                .collect();
            let out = loss_and_grad(&params, &batch)?;
            state.step(&opts.optimizer, &mut params.flat, &out.grad);
            loss_sum += out.loss * chunk.len() as f64;
            correct += out.correct;
            seen += chunk.len();
        }
        if !params.all_finite() {
            return Err(ModelError::NonFinite {
                place: format!("parameters after epoch {epoch}"),
            });
        }

        let val_acc = evaluate_accuracy(&params, val_set)?;
        let row = EpochMetrics {
            epoch,
            train_loss: loss_sum / seen as f64,
            train_acc: correct as f64 / seen as f64,
            val_acc,
        };
        metrics.push(row);
        if val_acc > best_val {
            best_val = val_acc;
            best = params.clone();
            best_epoch = epoch;
        }
    }

    Ok(TrainedModel {
        params: best,
        metrics,
        best_epoch,
        best_val_acc: best_val.max(0.0),
    })
}

/// Single-batch steps until the training set is fit or `max_steps` is hit.
/// Returns (steps taken, final training accuracy, per-step losses).
pub fn overfit(
    config: &FusionConfig,
    data: &Dataset,
    opts: &TrainOptions,
    max_steps: usize,
) -> Result<(usize, f64, Vec<f64>, Params), ModelError> {
    config.validate()?;
    data.check_shapes(config)?;
    let mut params = Params::init(config)?;
    let mut state = OptState::new(&opts.optimizer, params.len());

    let inputs: Vec<ModelInput> = data
        .samples
        .iter()
        .map(|s| s.to_input(&data.stats))
        .collect();
    let batch: Vec<(&ModelInput, ActionClass)> = inputs
        .iter()
        .zip(data.samples.iter().map(|s| s.label))
        .collect();

    let mut losses = Vec::new();
    for step in 0..max_steps {
        let out = loss_and_grad(&params, &batch)?;
        losses.push(out.loss);
        if out.correct == batch.len() {
            return Ok((step, 1.0, losses, params));
        }
        state.step(&opts.optimizer, &mut params.flat, &out.grad);
    }
    let final_out = loss_and_grad(&params, &batch)?;
    Ok((
        max_steps,
        final_out.correct as f64 / batch.len() as f64,
        losses,
        params,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dataset::CompactSample;
    use crate::model::IMU_STEP_DIM;

    fn tiny_config() -> FusionConfig {
        FusionConfig {
            window_len: 6,
            side: 8,
            tubelet_t: 3,
            patch: 4,
            embed_dim: 8,
            heads: 2,
            depth: 1,
            ffn_mult: 2,
            imu_group: 3,
            feature_dim: 4,
            seed: 11,
            ..FusionConfig::default()
        }
    }

    /// Two trivially separable pseudo-classes on all 15 labels.
    fn toy_dataset(config: &FusionConfig, per_class: usize, seed: u64) -> Dataset {
        use rand::{RngExt, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame_len = config.window_len * config.side * config.side;
        let mut samples = Vec::new();
        for class in ActionClass::ALL {
            for _ in 0..per_class {
                let base = 10 + class.index() as i32 * 15;
                let frames: Vec<u8> = (0..frame_len)
                    .map(|_| (base + rng.random_range(-5..6)) as u8)
                    .collect();
                let imu: Vec<f32> = (0..config.window_len * IMU_STEP_DIM)
                    .map(|_| {
                        (class.index() as f32 / 15.0) + rng.random_range(-0.01..0.01)
                    })
                    .collect();
                samples.push(CompactSample {
                    frames_top: frames.clone(),
                    frames_bottom: frames,
                    imu,
                    label: class,
                });
            }
        }
        Dataset::new(samples)
    }

    #[test]
    fn missing_class_is_a_dataset_error() {
        let config = tiny_config();
        let mut data = toy_dataset(&config, 1, 0);
        data.samples.retain(|s| s.label != ActionClass::Poking);
        let err = train(&config, &data, &data, &TrainOptions::default(), None).unwrap_err();
        assert!(err.to_string().contains("poking"), "{err}");
    }

    #[test]
    fn training_is_deterministic_under_seed() {
        let config = tiny_config();
        let data = toy_dataset(&config, 2, 1);
        let opts = TrainOptions {
            epochs: 2,
            batch_size: 8,
            ..TrainOptions::default()
        };
        let a = train(&config, &data, &data, &opts, None).unwrap();
        let b = train(&config, &data, &data, &opts, None).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.params.flat, b.params.flat);
    }

    #[test]
    fn tiny_set_is_learnable() {
        let config = tiny_config();
        let data = toy_dataset(&config, 2, 2);
        let opts = TrainOptions {
            epochs: 1,
            batch_size: 30,
            optimizer: Optimizer::adam(3e-3),
            ..TrainOptions::default()
        };
        let (_steps, acc, losses, _) = overfit(&config, &data, &opts, 150).unwrap();
        assert_eq!(acc, 1.0, "failed to fit toy set, losses tail {:?}", &losses[losses.len().saturating_sub(3)..]);
    }

    #[test]
    fn resume_with_mismatched_config_fails() {
        let config = tiny_config();
        let data = toy_dataset(&config, 1, 3);
        let other = FusionConfig { seed: 99, ..config.clone() };
        let params = Params::init(&other).unwrap();
        let err = train(
            &config,
            &data,
            &data,
            &TrainOptions { epochs: 1, ..TrainOptions::default() },
            Some(params),
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::Config(_)));
    }
}

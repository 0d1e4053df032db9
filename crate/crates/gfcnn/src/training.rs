//! Loss, optimizer, mini-batch training loop, and evaluation metrics.
//!
//! Training is plain mini-batch gradient descent under ADAM: every epoch
//! shuffles the training set with a dedicated seeded stream, batches are
//! averaged per-sample gradients, and one ADAM step is taken per batch.
//! Dropout draws come from their own stream, so (model seed, data seed,
//! config) pins the trained parameters bit for bit. The loop is
//! single-threaded; batches are summed in fixed sample order.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, LabeledSample};
use crate::error::{Error, Result};
use crate::model::{GradientSet, Model};
use crate::seeds::{self, Purpose};

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Probability of dropping a hidden unit; 0 disables dropout.
    pub dropout_p: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Seed of the shuffle and dropout streams.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.005,
            epochs: 20,
            batch_size: 100,
            dropout_p: 0.5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Reject out-of-range hyperparameters.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Config(format!(
                "dropout probability must be in [0, 1), got {}",
                self.dropout_p
            )));
        }
        for (name, beta) in [("beta1", self.adam_beta1), ("beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::Config(format!(
                    "{name} must be in [0, 1), got {beta}"
                )));
            }
        }
        if !(self.adam_epsilon.is_finite() && self.adam_epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.adam_epsilon
            )));
        }
        Ok(())
    }
}

/// Numerically stabilized softmax cross-entropy.
///
/// Returns the loss −log softmax(logits)[label] and its gradient with
/// respect to the logits, softmax(logits) − onehot(label). The maximum logit
/// is subtracted before exponentiation, so the exponentials can never
/// overflow no matter how large the logits grow.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    assert!(label < logits.len(), "label out of range");
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let loss = z.ln() - (logits[label] - max);
    let mut grad: Vec<f64> = exps.iter().map(|&e| e / z).collect();
    grad[label] -= 1.0;
    (loss, grad)
}

/// ADAM accumulators, one pair of moment tensors per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    step: u64,
}

impl OptimizerState {
    /// Zeroed accumulators for tensors of the given lengths.
    pub fn new(tensor_lens: &[usize]) -> OptimizerState {
        OptimizerState {
            first_moment: tensor_lens.iter().map(|&l| vec![0.0; l]).collect(),
            second_moment: tensor_lens.iter().map(|&l| vec![0.0; l]).collect(),
            step: 0,
        }
    }

    /// Zeroed accumulators shaped like a model's parameters.
    pub fn for_model(m: &Model) -> OptimizerState {
        OptimizerState::new(&m.tensor_lens())
    }

    /// Number of steps taken so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One ADAM update over raw parameter slices: moments are updated in place
/// and every parameter moves by −lr·m̂/(√v̂ + ε) with bias-corrected moments.
pub fn adam_step_slices(
    state: &mut OptimizerState,
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    cfg: &TrainConfig,
) -> Result<()> {
    if params.len() != state.first_moment.len() || grads.len() != state.first_moment.len() {
        return Err(Error::Dimension(format!(
            "optimizer tracks {} tensors, got {} parameter and {} gradient tensors",
            state.first_moment.len(),
            params.len(),
            grads.len()
        )));
    }
    state.step += 1;
    let b1 = cfg.adam_beta1;
    let b2 = cfg.adam_beta2;
    let bias1 = 1.0 - b1.powi(state.step as i32);
    let bias2 = 1.0 - b2.powi(state.step as i32);
    for ((theta, grad), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut().zip(&mut state.second_moment))
    {
        if theta.len() != m.len() || grad.len() != m.len() {
            return Err(Error::Dimension(format!(
                "tensor of {} entries does not match optimizer state of {}",
                theta.len(),
                m.len()
            )));
        }
        for i in 0..theta.len() {
            let g = grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            theta[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
        }
    }
    Ok(())
}

/// One ADAM update of a model's parameters from a gradient set.
pub fn adam_step(
    state: &mut OptimizerState,
    model: &mut Model,
    grads: &GradientSet,
    cfg: &TrainConfig,
) -> Result<()> {
    let grad_slices: Vec<&[f64]> = grads.tensors().iter().map(|t| t.as_slice()).collect();
    adam_step_slices(state, &mut model.tensors_mut(), &grad_slices, cfg)
}

/// Mean loss and mean gradient over a batch of samples. Gradients are summed
/// in the given sample order and divided by the batch length; dropout masks
/// come from `dropout_rng` in the same order.
pub fn batch_gradient(
    model: &Model,
    batch: &[&LabeledSample],
    dropout_p: f64,
    dropout_rng: &mut ChaCha8Rng,
) -> Result<(f64, GradientSet)> {
    assert!(!batch.is_empty(), "empty batch");
    let mut total = GradientSet::zeros_like(model);
    let mut loss_sum = 0.0;
    for sample in batch {
        let (logits, trace) = model.forward_train(&sample.signal, dropout_p, dropout_rng)?;
        let (loss, grad_logits) = softmax_cross_entropy(&logits, sample.label);
        loss_sum += loss;
        let grads = model.backward(&trace, &grad_logits)?;
        total.accumulate(&grads);
    }
    let k = batch.len() as f64;
    total.scale(1.0 / k);
    Ok((loss_sum / k, total))
}

/// Per-class prediction counts from one evaluation pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuracyStats {
    pub correct: usize,
    pub total: usize,
    pub num_classes: usize,
    /// Row-major C×C counts: entry (true label, predicted label).
    pub confusion: Vec<usize>,
}

impl AccuracyStats {
    /// Fraction of correctly classified samples.
    pub fn fraction(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// What a training run and/or evaluation produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Mean training loss per epoch, in epoch order.
    pub epoch_loss: Vec<f64>,
    /// Test-split accuracy; `None` until an evaluation ran.
    pub accuracy: Option<AccuracyStats>,
}

impl Metrics {
    /// Metrics with nothing recorded yet.
    pub fn empty() -> Metrics {
        Metrics {
            epoch_loss: Vec::new(),
            accuracy: None,
        }
    }
}

/// Train a model on the training split. Returns the trained model and the
/// per-epoch mean training loss; run [`evaluate`] for test accuracy.
pub fn train(mut model: Model, data: &Dataset, cfg: &TrainConfig) -> Result<(Model, Metrics)> {
    cfg.validate()?;
    let samples = data.train();
    if samples.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    for s in samples {
        if s.label >= model.num_classes() {
            return Err(Error::Config(format!(
                "label {} out of range for {} classes",
                s.label,
                model.num_classes()
            )));
        }
    }
    let mut shuffle_rng =
        ChaCha8Rng::seed_from_u64(seeds::child(cfg.seed, 0, 0, Purpose::Shuffle));
    let mut dropout_rng =
        ChaCha8Rng::seed_from_u64(seeds::child(cfg.seed, 0, 0, Purpose::Dropout));
    let mut opt = OptimizerState::for_model(&model);
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    let mut indices: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..cfg.epochs {
        indices.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch_indices in indices.chunks(cfg.batch_size) {
            let batch: Vec<&LabeledSample> =
                batch_indices.iter().map(|&i| &samples[i]).collect();
            let (mean_loss, grads) =
                batch_gradient(&model, &batch, cfg.dropout_p, &mut dropout_rng)?;
            loss_sum += mean_loss * batch.len() as f64;
            adam_step(&mut opt, &mut model, &grads, cfg)?;
        }
        epoch_loss.push(loss_sum / samples.len() as f64);
    }
    Ok((
        model,
        Metrics {
            epoch_loss,
            accuracy: None,
        },
    ))
}

/// Classify the test split in eval mode. The predicted class is the argmax
/// of the logits, ties resolved to the lowest index.
pub fn evaluate(model: &Model, data: &Dataset) -> Result<Metrics> {
    let samples = data.test();
    if samples.is_empty() {
        return Err(Error::Config("test set is empty".into()));
    }
    let c = model.num_classes();
    let mut correct = 0;
    let mut confusion = vec![0usize; c * c];
    for s in samples {
        if s.label >= c {
            return Err(Error::Config(format!(
                "label {} out of range for {c} classes",
                s.label
            )));
        }
        let logits = model.forward_eval(&s.signal)?;
        let mut pred = 0;
        for (k, &v) in logits.iter().enumerate() {
            if v > logits[pred] {
                pred = k;
            }
        }
        if pred == s.label {
            correct += 1;
        }
        confusion[s.label * c + pred] += 1;
    }
    Ok(Metrics {
        epoch_loss: Vec::new(),
        accuracy: Some(AccuracyStats {
            correct,
            total: samples.len(),
            num_classes: c,
            confusion,
        }),
    })
}

/// Write metrics as CSV: an `epoch,loss` header, one row per epoch, and a
/// final `test_accuracy,<value>` row when an evaluation ran.
pub fn write_metrics_csv(metrics: &Metrics, out: &mut impl Write) -> Result<()> {
    writeln!(out, "epoch,loss")?;
    for (epoch, loss) in metrics.epoch_loss.iter().enumerate() {
        writeln!(out, "{},{loss}", epoch + 1)?;
    }
    if let Some(acc) = &metrics.accuracy {
        writeln!(out, "test_accuracy,{}", acc.fraction())?;
    }
    Ok(())
}

//! SGD training loop with basis-path regularization, learning-rate
//! schedules, label corruption, and generalization-gap measurement.
//!
//! One training run is strictly sequential and fully determined by
//! (config, dataset, seed); independent runs in a sweep may execute
//! concurrently, each owning its network and RNG.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::network::{backward, forward, Matrix, Network, NetworkSpec};
use crate::pathspace::{enumerate_basis_paths, BasisPathSet};
use crate::regularizer::{reg_gradient, weight_decay_gradient, RegConfig};

const DIVERGENCE_THRESHOLD: f64 = 1e10;

/// Learning-rate schedule over the whole run of T steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Schedule {
    Constant,
    /// eta_t = eta_0 * power^(t/T); the rate decays to eta_0 * power by the
    /// final step.
    Exponential { power: f64 },
}

impl Schedule {
    pub fn rate(&self, eta0: f64, step: usize, total_steps: usize) -> f64 {
        match self {
            Schedule::Constant => eta0,
            Schedule::Exponential { power } => {
                let t = if total_steps <= 1 { 0.0 } else { step as f64 / (total_steps - 1) as f64 };
                eta0 * power.powf(t)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    Squared,
}

/// Training-run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub schedule: Schedule,
    pub seed: u64,
    pub loss: LossKind,
    pub reg: RegConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 128,
            learning_rate: 0.05,
            schedule: Schedule::Exponential { power: 0.01 },
            seed: 0,
            loss: LossKind::CrossEntropy,
            reg: RegConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Domain("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Domain("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Domain(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        self.reg.validate()
    }
}

/// Per-epoch training statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_error: f64,
    pub test_loss: f64,
    pub test_error: f64,
    /// |test_error - train_error|.
    pub gap: f64,
}

/// Full record of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub epochs: Vec<EpochStats>,
}

impl RunRecord {
    pub fn final_stats(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

/// Initialize weights uniformly in [-a, a] with a = 1/sqrt(h_{l-1}),
/// deterministic given the seed.
pub fn init_weights(spec: &NetworkSpec, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..spec.depth)
        .map(|l| {
            let (rows, cols) = spec.weight_shape(l);
            let a = 1.0 / (rows as f64).sqrt();
            let data = (0..rows * cols).map(|_| rng.random_range(-a..a)).collect();
            Matrix::from_vec(rows, cols, data).unwrap()
        })
        .collect();
    Network::new(*spec, weights).expect("initialized weights are valid")
}

/// Replace exactly `floor(fraction * n)` labels with uniform draws over the
/// other K-1 classes; deterministic given the seed.
pub fn corrupt_labels(dataset: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Domain(format!("corruption fraction must be in [0,1], got {}", fraction)));
    }
    let n = dataset.len();
    let k = dataset.num_classes();
    let count = (fraction * n as f64).floor() as usize;
    if count > 0 && k < 2 {
        return Err(Error::Domain("label corruption needs at least 2 classes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let mut labels = dataset.labels().to_vec();
    for &i in indices.iter().take(count) {
        let old = labels[i];
        let draw = rng.random_range(0..k - 1);
        labels[i] = if draw >= old { draw + 1 } else { draw };
    }
    let features: Vec<f64> = (0..n).flat_map(|i| dataset.features_of(i).iter().copied()).collect();
    Dataset::new(features, labels, dataset.num_features(), k)
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Per-sample loss value and gradient with respect to the K linear outputs.
fn loss_and_grad(kind: LossKind, output: &[f64], label: usize) -> (f64, Vec<f64>) {
    match kind {
        LossKind::CrossEntropy => {
            let probs = softmax(output);
            let loss = -(probs[label].max(1e-300)).ln();
            let mut grad = probs;
            grad[label] -= 1.0;
            (loss, grad)
        }
        LossKind::Squared => {
            let mut loss = 0.0;
            let mut grad = Vec::with_capacity(output.len());
            for (j, &o) in output.iter().enumerate() {
                let target = if j == label { 1.0 } else { 0.0 };
                loss += 0.5 * (o - target) * (o - target);
                grad.push(o - target);
            }
            (loss, grad)
        }
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Mean loss and 0-1 error rate under the argmax decision rule.
pub fn evaluate(net: &Network, dataset: &Dataset, loss: LossKind) -> Result<(f64, f64)> {
    if dataset.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty dataset".into()));
    }
    let mut total_loss = 0.0;
    let mut errors = 0usize;
    for i in 0..dataset.len() {
        let (out, _) = forward(net, dataset.features_of(i))?;
        let (l, _) = loss_and_grad(loss, &out, dataset.label_of(i));
        total_loss += l;
        if argmax(&out) != dataset.label_of(i) {
            errors += 1;
        }
    }
    let n = dataset.len() as f64;
    Ok((total_loss / n, errors as f64 / n))
}

/// Run SGD with basis-path regularization: per step, draw a mini-batch,
/// accumulate the mean loss gradient, add the regularizer gradient, and
/// update `w <- w - eta_t (g + h)`.
///
/// Basis-path values are recomputed from current weights every step. The
/// run aborts with a divergence error when the batch loss turns non-finite
/// or exceeds 1e10.
pub fn train(
    net: &Network,
    train_set: &Dataset,
    test_set: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<(Network, RunRecord)> {
    cfg.validate()?;
    let spec = *net.spec();
    if train_set.num_features() != spec.input_dim {
        return Err(Error::Data(format!(
            "dataset has {} features, network expects {}",
            train_set.num_features(),
            spec.input_dim
        )));
    }
    if train_set.num_classes() > spec.output_dim {
        return Err(Error::Data(format!(
            "dataset has {} classes, network has {} outputs",
            train_set.num_classes(),
            spec.output_dim
        )));
    }
    if train_set.is_empty() {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }

    let basis: Option<BasisPathSet> = if cfg.reg.lambda1 > 0.0 || cfg.reg.lambda2 > 0.0 {
        Some(enumerate_basis_paths(&spec))
    } else {
        None
    };

    let n = train_set.len();
    let batches_per_epoch = n.div_ceil(cfg.batch_size);
    let total_steps = cfg.epochs * batches_per_epoch;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = net.clone();
    let mut record = RunRecord { epochs: Vec::with_capacity(cfg.epochs) };
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let eta = cfg.schedule.rate(cfg.learning_rate, step, total_steps);
            let mut grads: Vec<Matrix> = (0..spec.depth)
                .map(|l| {
                    let (r, c) = spec.weight_shape(l);
                    Matrix::zeros(r, c)
                })
                .collect();
            let mut batch_loss = 0.0;
            for &i in batch {
                let (out, trace) = forward(&current, train_set.features_of(i))?;
                let (loss, grad_out) = loss_and_grad(cfg.loss, &out, train_set.label_of(i));
                batch_loss += loss;
                let sample_grads = backward(&current, &trace, &grad_out)?;
                for (g, sg) in grads.iter_mut().zip(&sample_grads) {
                    for (a, b) in g.as_mut_slice().iter_mut().zip(sg.as_slice()) {
                        *a += b;
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            batch_loss *= scale;
            if !batch_loss.is_finite() || batch_loss > DIVERGENCE_THRESHOLD {
                return Err(Error::Diverged { step, loss: batch_loss });
            }
            for g in &mut grads {
                for v in g.as_mut_slice() {
                    *v *= scale;
                }
            }
            if let Some(basis) = &basis {
                let reg = reg_gradient(&current, basis, &cfg.reg)?;
                for (g, rg) in grads.iter_mut().zip(&reg) {
                    for (a, b) in g.as_mut_slice().iter_mut().zip(rg.as_slice()) {
                        *a += b;
                    }
                }
            }
            if cfg.reg.weight_decay > 0.0 {
                let wd = weight_decay_gradient(&current, &cfg.reg);
                for (g, dg) in grads.iter_mut().zip(&wd) {
                    for (a, b) in g.as_mut_slice().iter_mut().zip(dg.as_slice()) {
                        *a += b;
                    }
                }
            }
            for (w, g) in current.weights_mut().iter_mut().zip(&grads) {
                for (a, b) in w.as_mut_slice().iter_mut().zip(g.as_slice()) {
                    *a -= eta * b;
                }
            }
            step += 1;
        }

        let (train_loss, train_error) = evaluate(&current, train_set, cfg.loss)?;
        if !train_loss.is_finite() || train_loss > DIVERGENCE_THRESHOLD {
            return Err(Error::Diverged { step, loss: train_loss });
        }
        let (test_loss, test_error) = match test_set {
            Some(ts) => evaluate(&current, ts, cfg.loss)?,
            None => (train_loss, train_error),
        };
        record.epochs.push(EpochStats {
            epoch,
            train_loss,
            train_error,
            test_loss,
            test_error,
            gap: (test_error - train_error).abs(),
        });
    }

    Ok((current, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::two_gaussians;
    use crate::measures::{bp_norm, path_norm, BasisPathValues};

    #[test]
    fn init_weights_deterministic_and_bounded() {
        let spec = NetworkSpec::new(3, 9, 16, 4).unwrap();
        let a = init_weights(&spec, 5);
        let b = init_weights(&spec, 5);
        assert_eq!(a, b);
        let c = init_weights(&spec, 6);
        assert_ne!(a, c);
        for l in 0..spec.depth {
            let bound = 1.0 / (spec.layer_size(l) as f64).sqrt();
            assert!(a.weight(l).as_slice().iter().all(|v| v.abs() <= bound));
        }
    }

    #[test]
    fn init_weights_mean_near_zero() {
        // 10^4 draws: mean within 3 sigma of 0 for uniform[-a, a]
        let spec = NetworkSpec::new(2, 100, 100, 1).unwrap();
        let net = init_weights(&spec, 11);
        let draws = net.weight(0).as_slice();
        assert_eq!(draws.len(), 10_000);
        let a = 1.0 / 10.0;
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let sigma = a / 3.0f64.sqrt() / (draws.len() as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma, "mean {} vs 3 sigma {}", mean, 3.0 * sigma);
    }

    #[test]
    fn corrupt_labels_counts() {
        let ds = two_gaussians(1000, 2, 2.0, 0.5, 1);
        let same = corrupt_labels(&ds, 0.0, 9).unwrap();
        assert_eq!(ds, same);

        let half = corrupt_labels(&ds, 0.5, 9).unwrap();
        let changed = ds.labels().iter().zip(half.labels()).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 500);

        let all = corrupt_labels(&ds, 1.0, 9).unwrap();
        assert!(ds.labels().iter().zip(all.labels()).all(|(a, b)| a != b));
    }

    #[test]
    fn corrupt_labels_deterministic() {
        let ds = two_gaussians(200, 2, 2.0, 0.5, 1);
        let a = corrupt_labels(&ds, 0.3, 4).unwrap();
        let b = corrupt_labels(&ds, 0.3, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluate_perfect_and_hand_checked() {
        // d=1, K=2, L=2 net routing the sign of x into the outputs
        let spec = NetworkSpec::new(2, 1, 2, 2).unwrap();
        let net = Network::new(
            spec,
            vec![
                Matrix::from_vec(1, 2, vec![1.0, -1.0]).unwrap(),
                Matrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap(),
            ],
        )
        .unwrap();
        // x > 0 -> output (0, x) -> class 1; x < 0 -> output (-x, 0) -> class 0
        let ds = Dataset::new(vec![1.0, -2.0, 3.0], vec![1, 0, 1], 1, 2).unwrap();
        let (_, err) = evaluate(&net, &ds, LossKind::CrossEntropy).unwrap();
        assert_eq!(err, 0.0);

        let (loss, err) = evaluate(&net, &ds.take(1), LossKind::Squared).unwrap();
        // output for x=1 is (0,1), target (0,1): loss 0
        assert!(loss.abs() < 1e-15);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn evaluate_uniform_logits_near_half_error() {
        // all-zero weights: every output 0, argmax always class 0
        let spec = NetworkSpec::new(2, 2, 4, 2).unwrap();
        let net = Network::new(
            spec,
            vec![Matrix::zeros(2, 4), Matrix::zeros(4, 2)],
        )
        .unwrap();
        let ds = two_gaussians(1000, 2, 2.0, 0.5, 3);
        let (_, err) = evaluate(&net, &ds, LossKind::CrossEntropy).unwrap();
        // balanced labels: error is exactly the fraction of class-1 samples
        assert!((err - 0.5).abs() < 0.05);
    }

    #[test]
    fn zero_reg_reduces_to_plain_sgd() {
        let spec = NetworkSpec::new(2, 2, 4, 2).unwrap();
        let net = init_weights(&spec, 1);
        let ds = two_gaussians(64, 2, 2.0, 0.5, 2);
        let cfg = TrainConfig { epochs: 3, batch_size: 16, seed: 7, ..TrainConfig::default() };
        let (w1, r1) = train(&net, &ds, None, &cfg).unwrap();
        let cfg_reg = TrainConfig {
            reg: RegConfig { lambda1: 0.0, lambda2: 0.0, include_skeleton_grad: false, weight_decay: 0.0 },
            ..cfg
        };
        let (w2, r2) = train(&net, &ds, None, &cfg_reg).unwrap();
        assert_eq!(w1, w2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn single_step_matches_hand_computation() {
        // d=H=K=1, L=2, squared loss, full batch of one sample
        let spec = NetworkSpec::new(2, 1, 1, 1).unwrap();
        let w0 = 0.5;
        let w1 = 0.8;
        let net = Network::new(
            spec,
            vec![Matrix::from_vec(1, 1, vec![w0]).unwrap(), Matrix::from_vec(1, 1, vec![w1]).unwrap()],
        )
        .unwrap();
        let ds = Dataset::new(vec![2.0], vec![0], 1, 1).unwrap();
        let eta = 0.1;
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 1,
            learning_rate: eta,
            schedule: Schedule::Constant,
            seed: 0,
            loss: LossKind::Squared,
            reg: RegConfig::default(),
        };
        let (trained, _) = train(&net, &ds, None, &cfg).unwrap();
        // out = w1 relu(w0 x) = 0.8, target 1, residual -0.2
        let residual = w1 * w0 * 2.0 - 1.0;
        let g0 = residual * w1 * 2.0;
        let g1 = residual * w0 * 2.0;
        assert!((trained.weight(0).get(0, 0) - (w0 - eta * g0)).abs() < 1e-12);
        assert!((trained.weight(1).get(0, 0) - (w1 - eta * g1)).abs() < 1e-12);
    }

    #[test]
    fn separable_task_reaches_zero_training_error() {
        let spec = NetworkSpec::new(2, 2, 8, 2).unwrap();
        let net = init_weights(&spec, 3);
        let ds = two_gaussians(200, 2, 3.0, 0.5, 4);
        // sanity oracle: a linear classifier on the mean direction separates
        let mut linear_errors = 0;
        for i in 0..ds.len() {
            let score: f64 = ds.features_of(i).iter().sum();
            let pred = usize::from(score > 0.0);
            if pred != ds.label_of(i) {
                linear_errors += 1;
            }
        }
        assert!(linear_errors as f64 / (ds.len() as f64) < 0.02, "task should be (near) separable");

        let cfg = TrainConfig { epochs: 200, batch_size: 32, seed: 5, ..TrainConfig::default() };
        let (_, record) = train(&net, &ds, None, &cfg).unwrap();
        assert_eq!(record.final_stats().unwrap().train_error, 0.0);
    }

    #[test]
    fn determinism_full_record() {
        let spec = NetworkSpec::new(3, 2, 4, 2).unwrap();
        let net = init_weights(&spec, 1);
        let train_set = two_gaussians(100, 2, 2.0, 0.6, 2);
        let test_set = two_gaussians(50, 2, 2.0, 0.6, 3);
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 16,
            seed: 9,
            reg: RegConfig { lambda1: 1e-4, lambda2: 0.0, include_skeleton_grad: false, weight_decay: 0.0 },
            ..TrainConfig::default()
        };
        let (w1, r1) = train(&net, &train_set, Some(&test_set), &cfg).unwrap();
        let (w2, r2) = train(&net, &train_set, Some(&test_set), &cfg).unwrap();
        assert_eq!(w1, w2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn measures_invariant_under_rescaling_after_training() {
        let spec = NetworkSpec::new(3, 2, 4, 2).unwrap();
        let net = init_weights(&spec, 2);
        let ds = two_gaussians(100, 2, 2.0, 0.6, 2);
        let cfg = TrainConfig { epochs: 10, batch_size: 32, seed: 1, ..TrainConfig::default() };
        let (trained, _) = train(&net, &ds, None, &cfg).unwrap();

        let basis = enumerate_basis_paths(&spec);
        let phi0 = bp_norm(&BasisPathValues::from_network(&trained, &basis)).unwrap();
        let omega0 = path_norm(&trained);
        let (loss0, err0) = evaluate(&trained, &ds, cfg.loss).unwrap();
        let l2_0 = crate::measures::weight_l2_norm(&trained);

        let mut rescaled = trained.clone();
        rescaled.rescale_node(1, 3, 2.3).unwrap();
        rescaled.rescale_node(2, 0, 0.4).unwrap();
        let phi1 = bp_norm(&BasisPathValues::from_network(&rescaled, &basis)).unwrap();
        let omega1 = path_norm(&rescaled);
        let (loss1, err1) = evaluate(&rescaled, &ds, cfg.loss).unwrap();
        let l2_1 = crate::measures::weight_l2_norm(&rescaled);

        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-30);
        assert!(rel(phi0, phi1) < 1e-9);
        assert!(rel(omega0, omega1) < 1e-9);
        assert!(rel(loss0, loss1) < 1e-9);
        assert_eq!(err0, err1);
        assert!((l2_0 - l2_1).abs() > 1e-9);
    }

    #[test]
    fn divergence_detected() {
        let spec = NetworkSpec::new(2, 2, 4, 2).unwrap();
        let net = init_weights(&spec, 1);
        let ds = two_gaussians(64, 2, 2.0, 0.5, 2);
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 64,
            learning_rate: 1e6,
            schedule: Schedule::Constant,
            loss: LossKind::Squared,
            ..TrainConfig::default()
        };
        let err = train(&net, &ds, None, &cfg).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err}");
    }
}

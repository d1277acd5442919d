use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::layer::{Cache, Layer};
use super::loss::{loss_cross_entropy, loss_cross_entropy_from_probs, loss_mse};
use super::network::Network;
use super::scalar::Scalar;
use super::schedule::{PlateauTracker, TrainConfig};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// RNG stream id for parameter initialization.
pub const INIT_STREAM: u64 = 1;
/// RNG stream id for the training loop (shuffling, dropout).
pub const TRAIN_STREAM: u64 = 2;

/// Seeded generator on a dedicated stream, so initialization and training
/// draw from independent sequences of the same seed.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub enum Targets<S: Scalar> {
    Classes(Vec<usize>),
    Values(Tensor<S>),
}

/// Inputs with aligned targets; rows index samples.
#[derive(Debug, Clone)]
pub struct DataSet<S: Scalar> {
    inputs: Tensor<S>,
    targets: Targets<S>,
}

impl<S: Scalar> DataSet<S> {
    pub fn new(inputs: Tensor<S>, targets: Targets<S>) -> Result<Self> {
        let n = inputs.n_rows();
        if n == 0 {
            return Err(Error::Validation("dataset has no samples".into()));
        }
        let t_len = match &targets {
            Targets::Classes(c) => c.len(),
            Targets::Values(v) => v.n_rows(),
        };
        if t_len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: t_len,
            });
        }
        Ok(Self { inputs, targets })
    }

    /// Autoencoder-style dataset: the target of every sample is itself.
    pub fn reconstruction(inputs: Tensor<S>) -> Result<Self> {
        let t = inputs.clone();
        Self::new(inputs, Targets::Values(t))
    }

    pub fn len(&self) -> usize {
        self.inputs.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn inputs(&self) -> &Tensor<S> {
        &self.inputs
    }

    pub fn targets(&self) -> &Targets<S> {
        &self.targets
    }

    fn gather(&self, idx: &[usize]) -> Result<(Tensor<S>, Targets<S>)> {
        let x = self.inputs.gather_rows(idx)?;
        let t = match &self.targets {
            Targets::Classes(c) => Targets::Classes(idx.iter().map(|&i| c[i]).collect()),
            Targets::Values(v) => Targets::Values(v.gather_rows(idx)?),
        };
        Ok((x, t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
    pub improved: bool,
    pub lr_reduced: bool,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

/// Loss of a network output under the given kind. When the network's final
/// layer is a softmax and the loss is cross-entropy, the pair is fused: the
/// loss reads the emitted probabilities and the returned gradient applies
/// *below* the softmax (`upto` = layer count - 1), keeping the backward
/// path numerically stable.
fn output_loss<S: Scalar>(
    net: &Network<S>,
    output: &Tensor<S>,
    targets: &Targets<S>,
) -> Result<(f64, Tensor<S>, usize)> {
    let n_layers = net.layers().len();
    match targets {
        Targets::Classes(classes) => {
            if matches!(net.layers().last(), Some(Layer::Softmax)) {
                let (loss, grad) = loss_cross_entropy_from_probs(output, classes)?;
                Ok((loss, grad, n_layers - 1))
            } else {
                let (loss, grad) = loss_cross_entropy(output, classes)?;
                Ok((loss, grad, n_layers))
            }
        }
        Targets::Values(t) => {
            let (loss, grad) = loss_mse(output, t)?;
            Ok((loss, grad, n_layers))
        }
    }
}

/// Train-mode forward plus loss; used by the fit loop and the gradient
/// checker so both see the identical objective.
pub(crate) fn forward_loss<S: Scalar>(
    net: &mut Network<S>,
    inputs: &Tensor<S>,
    targets: &Targets<S>,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<Cache<S>>, Tensor<S>, usize)> {
    let (out, caches) = net.forward_train(inputs, rng)?;
    let (loss, grad, upto) = output_loss(net, &out, targets)?;
    Ok((loss, caches, grad, upto))
}

/// Mean loss of a frozen network over a dataset, evaluated in eval mode in
/// deterministic chunks.
pub fn evaluate_loss<S: Scalar>(
    net: &Network<S>,
    data: &DataSet<S>,
    batch_size: usize,
) -> Result<f64> {
    let n = data.len();
    let idx: Vec<usize> = (0..n).collect();
    let mut weighted = 0.0f64;
    for chunk in idx.chunks(batch_size.max(1)) {
        let (x, t) = data.gather(chunk)?;
        let out = net.forward_eval(&x)?;
        let (loss, _, _) = output_loss(net, &out, &t)?;
        weighted += loss * chunk.len() as f64;
    }
    Ok(weighted / n as f64)
}

/// Mini-batch training with the Adam optimizer, LR-on-plateau scheduling,
/// and early stopping sharing one best-loss tracker. Deterministic for a
/// given seed: one ChaCha stream drives shuffling and dropout in a fixed
/// order. Returns the network restored to its best-epoch snapshot.
pub fn fit<S: Scalar>(
    net: &mut Network<S>,
    train: &DataSet<S>,
    val: &DataSet<S>,
    cfg: &TrainConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed, TRAIN_STREAM);
    let mut adam = AdamState::new(cfg.initial_lr, &net.param_shapes())?;
    let mut tracker = PlateauTracker::new(cfg);
    let mut history = Vec::new();
    let mut best_snapshot = net.snapshot();
    let mut best_epoch = 0usize;
    let mut stopped_early = false;

    let n = train.len();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut train_loss_acc = 0.0f64;
        for chunk in order.chunks(cfg.batch_size) {
            let (x, t) = train.gather(chunk)?;
            let (loss, caches, grad, upto) = forward_loss(net, &x, &t, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            train_loss_acc += loss * chunk.len() as f64;
            let grads = net.backward(&caches, upto, grad)?;
            let mut params = net.params_mut();
            adam.step(&mut params, &grads)?;
        }
        let train_loss = train_loss_acc / n as f64;
        if !train_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: train_loss,
            });
        }

        let val_loss = evaluate_loss(net, val, cfg.batch_size)?;
        let decision = tracker.observe(val_loss);
        if decision.improved {
            best_snapshot = net.snapshot();
            best_epoch = epoch;
        }
        if decision.lr_reduced {
            adam.lr = tracker.lr();
        }
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
            lr: tracker.lr(),
            improved: decision.improved,
            lr_reduced: decision.lr_reduced,
        });
        if decision.stop {
            stopped_early = true;
            break;
        }
    }

    net.restore(&best_snapshot)?;
    Ok(FitResult {
        history,
        best_epoch,
        best_val_loss: tracker.best_loss(),
        stopped_early,
    })
}

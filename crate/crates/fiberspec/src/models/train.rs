use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::nn::fit::{fit, seeded_rng, DataSet, FitResult, Targets, INIT_STREAM};
use crate::nn::network::Network;
use crate::nn::schedule::TrainConfig;
use crate::nn::tensor::Tensor;

use super::autoencoder::{build_autoencoder, AutoencoderSpec};
use super::classifier::{build_classifier, ClassifierSpec};

/// Classifier training defaults: initial LR 1e-3, batch 128, LR factor 0.2
/// with patience 5, early stop patience 7.
pub fn classifier_train_config() -> TrainConfig {
    TrainConfig::default()
}

/// Autoencoder training defaults differ only in batch size 16 and LR
/// factor 0.5.
pub fn autoencoder_train_config() -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        lr_factor: 0.5,
        ..TrainConfig::default()
    }
}

fn lift_for_conv(data: &DataSet<f32>) -> Result<DataSet<f32>> {
    let inputs = data.inputs();
    let (n, len) = (inputs.n_rows(), inputs.row_size());
    let lifted = match inputs.shape().len() {
        2 => inputs.clone().reshape(vec![n, 1, len])?,
        3 => inputs.clone(),
        _ => {
            return Err(Error::shape(
                "classifier inputs",
                "[batch, channels] or [batch, 1, channels]",
                format!("{:?}", inputs.shape()),
            ))
        }
    };
    DataSet::new(lifted, data.targets().clone())
}

fn check_class_targets(data: &DataSet<f32>, n_classes: usize, what: &str) -> Result<BTreeSet<usize>> {
    let Targets::Classes(labels) = data.targets() else {
        return Err(Error::Validation(format!(
            "{what} targets must be class labels"
        )));
    };
    let mut seen = BTreeSet::new();
    for &l in labels {
        if l >= n_classes {
            return Err(Error::LabelOutOfRange {
                label: l,
                n_classes,
            });
        }
        seen.insert(l);
    }
    Ok(seen)
}

fn check_input_len(data: &DataSet<f32>, expected: usize, what: &str) -> Result<()> {
    let got = match data.inputs().shape() {
        [_, len] => *len,
        [_, 1, len] => *len,
        other => {
            return Err(Error::shape(
                what,
                format!("spectra of length {expected}"),
                format!("{other:?}"),
            ))
        }
    };
    if got != expected {
        return Err(Error::shape(what, expected, got));
    }
    Ok(())
}

/// Builds a fresh classifier from the seed in `cfg` and trains it with
/// cross-entropy. The training set must contain at least two distinct
/// classes.
pub fn train_classifier(
    spec: &ClassifierSpec,
    train: &DataSet<f32>,
    val: &DataSet<f32>,
    cfg: &TrainConfig,
) -> Result<(Network<f32>, FitResult)> {
    spec.validate()?;
    cfg.validate()?;
    check_input_len(train, spec.input_len, "classifier training spectra")?;
    check_input_len(val, spec.input_len, "classifier validation spectra")?;
    let seen = check_class_targets(train, spec.n_classes, "classifier training")?;
    check_class_targets(val, spec.n_classes, "classifier validation")?;
    if seen.len() < 2 {
        return Err(Error::Validation(format!(
            "classifier training needs at least 2 distinct classes, got {}",
            seen.len()
        )));
    }
    let train = lift_for_conv(train)?;
    let val = lift_for_conv(val)?;
    let mut net: Network<f32> =
        build_classifier(spec, &mut seeded_rng(cfg.seed, INIT_STREAM))?;
    let result = fit(&mut net, &train, &val, cfg)?;
    Ok((net, result))
}

/// Builds and trains the autoencoder against its own inputs under MSE.
pub fn train_autoencoder(
    spec: &AutoencoderSpec,
    train: &DataSet<f32>,
    val: &DataSet<f32>,
    cfg: &TrainConfig,
) -> Result<(Network<f32>, FitResult)> {
    spec.validate()?;
    cfg.validate()?;
    check_input_len(train, spec.input_len, "autoencoder training spectra")?;
    check_input_len(val, spec.input_len, "autoencoder validation spectra")?;
    for (data, what) in [(train, "training"), (val, "validation")] {
        if !matches!(data.targets(), Targets::Values(_)) {
            return Err(Error::Validation(format!(
                "autoencoder {what} targets must be value rows (use a reconstruction dataset)"
            )));
        }
    }
    let mut net: Network<f32> =
        build_autoencoder(spec, &mut seeded_rng(cfg.seed, INIT_STREAM))?;
    let result = fit(&mut net, train, val, cfg)?;
    Ok((net, result))
}

/// Reconstruction dataset over flat `[n, len]` spectra rows.
pub fn reconstruction_dataset(spectra: Tensor<f32>) -> Result<DataSet<f32>> {
    DataSet::reconstruction(spectra)
}

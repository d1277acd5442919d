use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::layer::LayerSpec;
use crate::nn::network::Network;
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor;

/// Pixel classifier architecture: two valid 1D convolutions with ReLU, a
/// wide dense layer regularized by batchnorm and dropout, and a softmax
/// output over the textile classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSpec {
    pub input_len: usize,
    pub conv_filters: [usize; 2],
    pub kernel: usize,
    pub dense_units: usize,
    pub dropout: f64,
    pub n_classes: usize,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        Self {
            input_len: 400,
            conv_filters: [20, 32],
            kernel: 5,
            dense_units: 128,
            dropout: 0.5,
            n_classes: 12,
        }
    }
}

impl ClassifierSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::SpecInvalid(format!(
                "classifier needs at least 2 classes, got {}",
                self.n_classes
            )));
        }
        if self.kernel == 0 || self.conv_filters.iter().any(|&f| f == 0) || self.dense_units == 0
        {
            return Err(Error::SpecInvalid(
                "kernel, filter counts, and dense_units must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::SpecInvalid(format!(
                "dropout {} must be in [0, 1)",
                self.dropout
            )));
        }
        let shrink = 2 * (self.kernel - 1);
        if self.input_len <= shrink {
            return Err(Error::SpecInvalid(format!(
                "input_len {} leaves no samples after two kernel-{} convolutions",
                self.input_len, self.kernel
            )));
        }
        Ok(())
    }

    /// Lengths after each valid convolution (stride 1, no padding).
    pub fn conv_out_lens(&self) -> (usize, usize) {
        let l1 = self.input_len - self.kernel + 1;
        (l1, l1 - self.kernel + 1)
    }

    pub fn flatten_width(&self) -> usize {
        self.conv_out_lens().1 * self.conv_filters[1]
    }

    pub fn layer_specs(&self) -> Result<Vec<LayerSpec>> {
        self.validate()?;
        Ok(vec![
            LayerSpec::Conv1d {
                in_channels: 1,
                out_channels: self.conv_filters[0],
                kernel: self.kernel,
                stride: 1,
                padding: 0,
            },
            LayerSpec::Relu,
            LayerSpec::Conv1d {
                in_channels: self.conv_filters[0],
                out_channels: self.conv_filters[1],
                kernel: self.kernel,
                stride: 1,
                padding: 0,
            },
            LayerSpec::Relu,
            LayerSpec::Flatten,
            LayerSpec::Dense {
                in_features: self.flatten_width(),
                out_features: self.dense_units,
            },
            LayerSpec::BatchNorm1d {
                features: self.dense_units,
                eps: 1e-5,
                momentum: 0.1,
            },
            LayerSpec::Dropout { rate: self.dropout },
            LayerSpec::Relu,
            LayerSpec::Dense {
                in_features: self.dense_units,
                out_features: self.n_classes,
            },
            LayerSpec::Softmax,
        ])
    }
}

pub fn build_classifier<S: Scalar>(
    spec: &ClassifierSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Network<S>> {
    Network::build(&spec.layer_specs()?, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PixelPrediction {
    pub class: usize,
    pub probs: Vec<f32>,
}

/// Reshapes flat spectra `[n, len]` to the layout the network's first layer
/// expects (`[n, 1, len]` for a convolutional front end).
fn shape_for_input<S: Scalar>(net: &Network<S>, spectra: &Tensor<S>) -> Result<Tensor<S>> {
    if spectra.shape().len() != 2 {
        return Err(Error::shape(
            "model input",
            "[batch, channels]",
            format!("{:?}", spectra.shape()),
        ));
    }
    let n = spectra.n_rows();
    let len = spectra.row_size();
    match net.layers().first().map(|l| l.spec()) {
        Some(LayerSpec::Conv1d {
            in_channels: 1, ..
        }) => spectra.clone().reshape(vec![n, 1, len]),
        _ => Ok(spectra.clone()),
    }
}

/// Eval-mode class prediction per spectrum. Argmax breaks ties toward the
/// lowest class index; the probability row is returned alongside.
pub fn predict_pixels(net: &Network<f32>, spectra: &Tensor<f32>) -> Result<Vec<PixelPrediction>> {
    let x = shape_for_input(net, spectra)?;
    let out = net.forward_eval(&x)?;
    if out.shape().len() != 2 {
        return Err(Error::shape(
            "classifier output",
            "[batch, classes]",
            format!("{:?}", out.shape()),
        ));
    }
    let mut preds = Vec::with_capacity(out.n_rows());
    for r in 0..out.n_rows() {
        let row = out.row(r);
        let mut class = 0usize;
        let mut best = row[0];
        for (i, &p) in row.iter().enumerate().skip(1) {
            if p > best {
                best = p;
                class = i;
            }
        }
        preds.push(PixelPrediction {
            class,
            probs: row.to_vec(),
        });
    }
    Ok(preds)
}

/// Persists classifier weights with the class label list and the weight
/// initialization scheme recorded in the metadata block.
pub fn save_classifier(
    net: &Network<f32>,
    labels: &[String],
    path: &std::path::Path,
) -> Result<()> {
    if labels.iter().any(|l| l.contains(',') || l.contains('\n')) {
        return Err(Error::Validation(
            "class labels must not contain commas or newlines".into(),
        ));
    }
    let mut meta = std::collections::BTreeMap::new();
    meta.insert("kind".to_string(), "classifier".to_string());
    meta.insert("labels".to_string(), labels.join(","));
    meta.insert("init".to_string(), "kaiming_uniform".to_string());
    crate::nn::checkpoint::save_network(net, &meta, path)
}

pub fn load_classifier(path: &std::path::Path) -> Result<(Network<f32>, Vec<String>)> {
    let (net, meta) = crate::nn::checkpoint::load_network(path)?;
    let labels = meta
        .get("labels")
        .ok_or_else(|| Error::HeaderMismatch("classifier checkpoint missing labels".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    Ok((net, labels))
}

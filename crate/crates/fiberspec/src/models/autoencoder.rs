use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::layer::LayerSpec;
use crate::nn::network::Network;
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor;

/// Dense autoencoder with a mirrored decoder: the encoder runs the hidden
/// widths down to the latent size, the decoder runs them back up, ReLU on
/// every hidden layer (latent included) and a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoencoderSpec {
    pub input_len: usize,
    pub hidden: Vec<usize>,
    pub latent: usize,
}

impl Default for AutoencoderSpec {
    fn default() -> Self {
        Self {
            input_len: 400,
            hidden: vec![100, 100],
            latent: 20,
        }
    }
}

impl AutoencoderSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_len == 0 || self.latent == 0 {
            return Err(Error::SpecInvalid(
                "input_len and latent width must be positive".into(),
            ));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::SpecInvalid("hidden widths must be positive".into()));
        }
        Ok(())
    }

    /// Full width sequence input → hidden… → latent → mirrored hidden… → input.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_len];
        w.extend(&self.hidden);
        w.push(self.latent);
        w.extend(self.hidden.iter().rev());
        w.push(self.input_len);
        w
    }

    pub fn layer_specs(&self) -> Result<Vec<LayerSpec>> {
        self.validate()?;
        let widths = self.widths();
        let mut specs = Vec::new();
        for (i, pair) in widths.windows(2).enumerate() {
            specs.push(LayerSpec::Dense {
                in_features: pair[0],
                out_features: pair[1],
            });
            if i + 2 < widths.len() {
                specs.push(LayerSpec::Relu);
            }
        }
        Ok(specs)
    }
}

pub fn build_autoencoder<S: Scalar>(
    spec: &AutoencoderSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Network<S>> {
    Network::build(&spec.layer_specs()?, rng)
}

/// Per-spectrum mean squared error between input and reconstruction,
/// accumulated and reported in 64-bit regardless of the weight precision.
pub fn reconstruction_error<S: Scalar>(
    net: &Network<S>,
    spectra: &Tensor<S>,
) -> Result<Vec<f64>> {
    let out = net.forward_eval(spectra)?;
    if out.shape() != spectra.shape() {
        return Err(Error::shape(
            "reconstruction",
            format!("{:?}", spectra.shape()),
            format!("{:?}", out.shape()),
        ));
    }
    let n = spectra.n_rows();
    let w = spectra.row_size();
    let mut res = Vec::with_capacity(n);
    for r in 0..n {
        let x = spectra.row(r);
        let y = out.row(r);
        let mut acc = 0.0f64;
        for (a, b) in x.iter().zip(y) {
            let d = a.to_f64() - b.to_f64();
            acc += d * d;
        }
        res.push(acc / w as f64);
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::fit::{seeded_rng, INIT_STREAM};
    use crate::nn::layer::Layer;

    #[test]
    fn default_widths_and_parameter_count() {
        let spec = AutoencoderSpec::default();
        assert_eq!(spec.widths(), [400, 100, 100, 20, 100, 100, 400]);
        let net: Network<f32> =
            build_autoencoder(&spec, &mut seeded_rng(1, INIT_STREAM)).unwrap();
        // 40100 + 10100 + 2020 + 2100 + 10100 + 40400
        assert_eq!(net.n_params(), 104_820);
        // linear output: last layer is dense, not relu
        assert!(matches!(net.layers().last(), Some(Layer::Dense(_))));
    }

    #[test]
    fn latent_layer_width_is_twenty() {
        let specs = AutoencoderSpec::default().layer_specs().unwrap();
        let narrowest = specs
            .iter()
            .filter_map(|s| match s {
                LayerSpec::Dense { out_features, .. } => Some(*out_features),
                _ => None,
            })
            .min()
            .unwrap();
        assert_eq!(narrowest, 20);
    }

    #[test]
    fn zero_weight_net_reconstructs_its_output_bias() {
        let spec = AutoencoderSpec {
            input_len: 6,
            hidden: vec![4],
            latent: 3,
        };
        let mut net: Network<f32> = Network::new(
            spec.layer_specs()
                .unwrap()
                .iter()
                .map(|s| s.build_zeroed().unwrap())
                .collect(),
        );
        let bias = [0.5f32, -0.25, 0.0, 1.0, 0.75, -1.5];
        if let Some(Layer::Dense(d)) = net.layers_mut().last_mut() {
            d.bias.data_mut().copy_from_slice(&bias);
        }
        let x = Tensor::new(vec![2, 6], vec![0.1; 12]).unwrap();
        let out = net.forward_eval(&x).unwrap();
        assert_eq!(out.row(0), bias);
        assert_eq!(out.row(1), bias);

        // closed form: RE = mean((x - b)^2)
        let res = reconstruction_error(&net, &x).unwrap();
        let want: f64 = bias
            .iter()
            .map(|&b| (0.1f32 as f64 - b as f64).powi(2))
            .sum::<f64>()
            / 6.0;
        assert!((res[0] - want).abs() < 1e-12);

        // feeding the bias itself back reproduces it exactly: RE is 0
        let xb = Tensor::new(vec![1, 6], bias.to_vec()).unwrap();
        let res = reconstruction_error(&net, &xb).unwrap();
        assert_eq!(res, [0.0]);
    }

    #[test]
    fn re_is_nonnegative_for_random_nets() {
        let net: Network<f32> =
            build_autoencoder(&AutoencoderSpec::default(), &mut seeded_rng(9, INIT_STREAM))
                .unwrap();
        let x = Tensor::new(
            vec![5, 400],
            (0..2000).map(|i| ((i as f32) * 0.013).sin().abs()).collect(),
        )
        .unwrap();
        let res = reconstruction_error(&net, &x).unwrap();
        assert_eq!(res.len(), 5);
        assert!(res.iter().all(|&r| r >= 0.0 && r.is_finite()));
    }

    #[test]
    fn wrong_length_rejected() {
        let net: Network<f32> =
            build_autoencoder(&AutoencoderSpec::default(), &mut seeded_rng(2, INIT_STREAM))
                .unwrap();
        let x = Tensor::new(vec![1, 399], vec![0.0; 399]).unwrap();
        assert!(matches!(
            reconstruction_error(&net, &x),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}

use rand_chacha::ChaCha8Rng;

use super::layer::{Cache, Layer, LayerSpec};
use super::scalar::Scalar;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// An ordered stack of layers. One owner mutates it during training;
/// eval-mode forward passes borrow it immutably and are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<S: Scalar> {
    layers: Vec<Layer<S>>,
}

impl<S: Scalar> Network<S> {
    pub fn new(layers: Vec<Layer<S>>) -> Self {
        Self { layers }
    }

    /// Builds and initializes every layer from its spec with the given RNG.
    pub fn build(specs: &[LayerSpec], rng: &mut ChaCha8Rng) -> Result<Self> {
        let layers = specs
            .iter()
            .map(|s| s.build(rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<S>] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec()).collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.params())
            .map(|(_, t)| t.len())
            .sum()
    }

    /// Trainable parameters, flattened in layer order.
    pub fn params(&self) -> Vec<&Tensor<S>> {
        self.layers
            .iter()
            .flat_map(|l| l.params())
            .map(|(_, t)| t)
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<S>> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.params_mut())
            .map(|(_, t)| t)
            .collect()
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        self.params().iter().map(|t| t.shape().to_vec()).collect()
    }

    /// "layer{i}.{name}" for every state tensor, matching [`state_tensors`].
    pub fn state_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            for (name, _) in l.state() {
                out.push(format!("layer{i}.{name}"));
            }
        }
        out
    }

    pub fn state_tensors(&self) -> Vec<&Tensor<S>> {
        self.layers
            .iter()
            .flat_map(|l| l.state())
            .map(|(_, t)| t)
            .collect()
    }

    pub fn state_tensors_mut(&mut self) -> Vec<&mut Tensor<S>> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.state_mut())
            .map(|(_, t)| t)
            .collect()
    }

    /// Copies every state tensor (parameters plus batchnorm buffers).
    pub fn snapshot(&self) -> Vec<Tensor<S>> {
        self.state_tensors().into_iter().cloned().collect()
    }

    pub fn restore(&mut self, snapshot: &[Tensor<S>]) -> Result<()> {
        let mut targets = self.state_tensors_mut();
        if targets.len() != snapshot.len() {
            return Err(Error::LengthMismatch {
                expected: targets.len(),
                got: snapshot.len(),
            });
        }
        for (dst, src) in targets.iter_mut().zip(snapshot) {
            if dst.shape() != src.shape() {
                return Err(Error::shape(
                    "snapshot tensor",
                    format!("{:?}", dst.shape()),
                    format!("{:?}", src.shape()),
                ));
            }
            dst.data_mut().copy_from_slice(src.data());
        }
        Ok(())
    }

    /// Train-mode pass through every layer, returning the output and the
    /// per-layer caches backprop needs.
    pub fn forward_train(
        &mut self,
        x: &Tensor<S>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Tensor<S>, Vec<Cache<S>>)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let (out, cache) = layer.forward_train(&cur, rng)?;
            check_finite(&out, i, layer.kind())?;
            caches.push(cache);
            cur = out;
        }
        Ok((cur, caches))
    }

    /// Pure eval-mode pass: dropout is the identity, batchnorm reads its
    /// running statistics, nothing is mutated.
    pub fn forward_eval(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let out = layer.forward_eval(&cur)?;
            check_finite(&out, i, layer.kind())?;
            cur = out;
        }
        Ok(cur)
    }

    /// Backpropagates `grad` from just above layer `upto - 1` down to the
    /// input, returning parameter gradients flattened in the same order as
    /// [`Network::params`] for the covered layers plus zeros elsewhere.
    /// `upto = layers.len()` covers the whole stack.
    pub fn backward(
        &self,
        caches: &[Cache<S>],
        upto: usize,
        grad: Tensor<S>,
    ) -> Result<Vec<Tensor<S>>> {
        if upto > self.layers.len() || caches.len() < upto {
            return Err(Error::IndexOutOfRange {
                index: upto,
                len: self.layers.len(),
            });
        }
        let mut per_layer: Vec<Vec<Tensor<S>>> = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            per_layer.push(
                l.params()
                    .iter()
                    .map(|(_, t)| Tensor::zeros(t.shape().to_vec()))
                    .collect(),
            );
        }
        let mut g = grad;
        for i in (0..upto).rev() {
            let (gin, pg) = self.layers[i].backward(&caches[i], &g)?;
            if !pg.is_empty() {
                per_layer[i] = pg;
            }
            g = gin;
        }
        Ok(per_layer.into_iter().flatten().collect())
    }
}

fn check_finite<S: Scalar>(t: &Tensor<S>, index: usize, kind: &str) -> Result<()> {
    if t.first_non_finite().is_some() {
        return Err(Error::NonFinite {
            context: format!("output of layer {index} ({kind})"),
        });
    }
    Ok(())
}

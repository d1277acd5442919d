use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::scalar::Scalar;
use super::tensor::{axpy, dot, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Architecture description of one layer, without parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Dense {
        in_features: usize,
        out_features: usize,
    },
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    Relu,
    BatchNorm1d {
        features: usize,
        eps: f64,
        momentum: f64,
    },
    Dropout {
        rate: f64,
    },
    Softmax,
    Flatten,
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::Relu => "relu",
            LayerSpec::BatchNorm1d { .. } => "batchnorm1d",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Softmax => "softmax",
            LayerSpec::Flatten => "flatten",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::Validation(reason));
        match *self {
            LayerSpec::Dense {
                in_features,
                out_features,
            } => {
                if in_features == 0 || out_features == 0 {
                    return bad(format!("dense {in_features}x{out_features} has a zero dim"));
                }
            }
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                ..
            } => {
                if in_channels == 0 || out_channels == 0 {
                    return bad("conv1d channel counts must be >= 1".into());
                }
                if kernel < 1 {
                    return bad("conv1d kernel size must be >= 1".into());
                }
                if stride < 1 {
                    return bad("conv1d stride must be >= 1".into());
                }
            }
            LayerSpec::BatchNorm1d { features, eps, momentum } => {
                if features == 0 {
                    return bad("batchnorm1d needs >= 1 feature".into());
                }
                if !(eps > 0.0) {
                    return bad(format!("batchnorm1d eps {eps} must be positive"));
                }
                if !(0.0..=1.0).contains(&momentum) {
                    return bad(format!("batchnorm1d momentum {momentum} must be in [0, 1]"));
                }
            }
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(&rate) {
                    return bad(format!("dropout rate {rate} must be in [0, 1)"));
                }
            }
            LayerSpec::Relu | LayerSpec::Softmax | LayerSpec::Flatten => {}
        }
        Ok(())
    }

    /// One-line key=value form used by the checkpoint architecture block.
    pub fn config_line(&self) -> String {
        match *self {
            LayerSpec::Dense {
                in_features,
                out_features,
            } => format!("layer dense in={in_features} out={out_features}"),
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => format!(
                "layer conv1d in_channels={in_channels} out_channels={out_channels} \
                 kernel={kernel} stride={stride} padding={padding}"
            ),
            LayerSpec::Relu => "layer relu".into(),
            LayerSpec::BatchNorm1d {
                features,
                eps,
                momentum,
            } => format!("layer batchnorm1d features={features} eps={eps} momentum={momentum}"),
            LayerSpec::Dropout { rate } => format!("layer dropout rate={rate}"),
            LayerSpec::Softmax => "layer softmax".into(),
            LayerSpec::Flatten => "layer flatten".into(),
        }
    }

    pub fn parse_config_line(line: &str) -> Result<Self> {
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap_or("");
        if tag != "layer" {
            return Err(Error::HeaderMismatch(format!(
                "expected a layer line, got {line:?}"
            )));
        }
        let kind = parts
            .next()
            .ok_or_else(|| Error::HeaderMismatch("layer line without a kind".into()))?;
        let mut kv = std::collections::BTreeMap::new();
        for p in parts {
            let (k, v) = p.split_once('=').ok_or_else(|| {
                Error::HeaderMismatch(format!("malformed layer parameter {p:?}"))
            })?;
            kv.insert(k.to_string(), v.to_string());
        }
        let get_usize = |k: &str| -> Result<usize> {
            kv.get(k)
                .ok_or_else(|| Error::HeaderMismatch(format!("{kind} line missing {k}")))?
                .parse()
                .map_err(|_| Error::HeaderMismatch(format!("{kind} {k} is not an integer")))
        };
        let get_f64 = |k: &str| -> Result<f64> {
            kv.get(k)
                .ok_or_else(|| Error::HeaderMismatch(format!("{kind} line missing {k}")))?
                .parse()
                .map_err(|_| Error::HeaderMismatch(format!("{kind} {k} is not a number")))
        };
        let spec = match kind {
            "dense" => LayerSpec::Dense {
                in_features: get_usize("in")?,
                out_features: get_usize("out")?,
            },
            "conv1d" => LayerSpec::Conv1d {
                in_channels: get_usize("in_channels")?,
                out_channels: get_usize("out_channels")?,
                kernel: get_usize("kernel")?,
                stride: get_usize("stride")?,
                padding: get_usize("padding")?,
            },
            "relu" => LayerSpec::Relu,
            "batchnorm1d" => LayerSpec::BatchNorm1d {
                features: get_usize("features")?,
                eps: get_f64("eps")?,
                momentum: get_f64("momentum")?,
            },
            "dropout" => LayerSpec::Dropout { rate: get_f64("rate")? },
            "softmax" => LayerSpec::Softmax,
            "flatten" => LayerSpec::Flatten,
            other => {
                return Err(Error::HeaderMismatch(format!("unknown layer kind {other:?}")))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds the layer with Kaiming-uniform weights (bound sqrt(6/fan_in)),
    /// zero biases, unit batchnorm scale. Sampling order is row-major, so a
    /// given seed always produces the same parameters.
    pub fn build<S: Scalar>(&self, rng: &mut ChaCha8Rng) -> Result<Layer<S>> {
        self.validate()?;
        let mut layer = self.build_zeroed()?;
        match &mut layer {
            Layer::Dense(d) => {
                let bound = (6.0 / d.in_features as f64).sqrt();
                for w in d.weight.data_mut() {
                    *w = S::from_f64(rng.gen_range(-bound..bound));
                }
            }
            Layer::Conv1d(c) => {
                let bound = (6.0 / (c.in_channels * c.kernel) as f64).sqrt();
                for w in c.weight.data_mut() {
                    *w = S::from_f64(rng.gen_range(-bound..bound));
                }
            }
            _ => {}
        }
        Ok(layer)
    }

    /// Builds the layer with all parameters zeroed (batchnorm scale and
    /// running variance at one); checkpoint loading fills them in.
    pub fn build_zeroed<S: Scalar>(&self) -> Result<Layer<S>> {
        self.validate()?;
        Ok(match *self {
            LayerSpec::Dense {
                in_features,
                out_features,
            } => Layer::Dense(Dense {
                in_features,
                out_features,
                weight: Tensor::zeros(vec![out_features, in_features]),
                bias: Tensor::zeros(vec![out_features]),
            }),
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => Layer::Conv1d(Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                weight: Tensor::zeros(vec![out_channels, in_channels, kernel]),
                bias: Tensor::zeros(vec![out_channels]),
            }),
            LayerSpec::Relu => Layer::Relu,
            LayerSpec::BatchNorm1d {
                features,
                eps,
                momentum,
            } => Layer::BatchNorm1d(BatchNorm1d {
                features,
                eps,
                momentum,
                gamma: Tensor::from_parts(vec![features], vec![S::ONE; features]),
                beta: Tensor::zeros(vec![features]),
                running_mean: Tensor::zeros(vec![features]),
                running_var: Tensor::from_parts(vec![features], vec![S::ONE; features]),
            }),
            LayerSpec::Dropout { rate } => Layer::Dropout(Dropout { rate }),
            LayerSpec::Softmax => Layer::Softmax,
            LayerSpec::Flatten => Layer::Flatten,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<S: Scalar> {
    pub in_features: usize,
    pub out_features: usize,
    /// [out_features, in_features]
    pub weight: Tensor<S>,
    pub bias: Tensor<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d<S: Scalar> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    /// [out_channels, in_channels, kernel]
    pub weight: Tensor<S>,
    pub bias: Tensor<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm1d<S: Scalar> {
    pub features: usize,
    pub eps: f64,
    pub momentum: f64,
    pub gamma: Tensor<S>,
    pub beta: Tensor<S>,
    pub running_mean: Tensor<S>,
    pub running_var: Tensor<S>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    pub rate: f64,
}

/// A layer with its parameters and, for batchnorm, its running statistics.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer<S: Scalar> {
    Dense(Dense<S>),
    Conv1d(Conv1d<S>),
    Relu,
    BatchNorm1d(BatchNorm1d<S>),
    Dropout(Dropout),
    Softmax,
    Flatten,
}

/// Intermediates captured by a train-mode forward pass for backprop.
#[derive(Debug)]
pub enum Cache<S: Scalar> {
    Dense { input: Tensor<S> },
    Conv1d { padded: Tensor<S> },
    Relu { mask: Vec<bool> },
    BatchNorm { xhat: Vec<f64>, inv_std: Vec<f64> },
    Dropout { mask: Vec<S> },
    Softmax { output: Tensor<S> },
    Flatten { input_shape: Vec<usize> },
    Passthrough,
}

impl<S: Scalar> Layer<S> {
    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Dense(d) => LayerSpec::Dense {
                in_features: d.in_features,
                out_features: d.out_features,
            },
            Layer::Conv1d(c) => LayerSpec::Conv1d {
                in_channels: c.in_channels,
                out_channels: c.out_channels,
                kernel: c.kernel,
                stride: c.stride,
                padding: c.padding,
            },
            Layer::Relu => LayerSpec::Relu,
            Layer::BatchNorm1d(b) => LayerSpec::BatchNorm1d {
                features: b.features,
                eps: b.eps,
                momentum: b.momentum,
            },
            Layer::Dropout(d) => LayerSpec::Dropout { rate: d.rate },
            Layer::Softmax => LayerSpec::Softmax,
            Layer::Flatten => LayerSpec::Flatten,
        }
    }

    pub fn kind(&self) -> &'static str {
        self.spec().kind()
    }

    /// Trainable parameter tensors in a fixed (name, tensor) order.
    pub fn params(&self) -> Vec<(&'static str, &Tensor<S>)> {
        match self {
            Layer::Dense(d) => vec![("weight", &d.weight), ("bias", &d.bias)],
            Layer::Conv1d(c) => vec![("weight", &c.weight), ("bias", &c.bias)],
            Layer::BatchNorm1d(b) => vec![("gamma", &b.gamma), ("beta", &b.beta)],
            _ => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<(&'static str, &mut Tensor<S>)> {
        match self {
            Layer::Dense(d) => vec![("weight", &mut d.weight), ("bias", &mut d.bias)],
            Layer::Conv1d(c) => vec![("weight", &mut c.weight), ("bias", &mut c.bias)],
            Layer::BatchNorm1d(b) => vec![("gamma", &mut b.gamma), ("beta", &mut b.beta)],
            _ => vec![],
        }
    }

    /// All persistent tensors: trainable parameters plus batchnorm running
    /// statistics. This is what snapshots and checkpoints carry.
    pub fn state(&self) -> Vec<(&'static str, &Tensor<S>)> {
        match self {
            Layer::BatchNorm1d(b) => vec![
                ("gamma", &b.gamma),
                ("beta", &b.beta),
                ("running_mean", &b.running_mean),
                ("running_var", &b.running_var),
            ],
            _ => self.params(),
        }
    }

    pub fn state_mut(&mut self) -> Vec<(&'static str, &mut Tensor<S>)> {
        match self {
            Layer::BatchNorm1d(b) => vec![
                ("gamma", &mut b.gamma),
                ("beta", &mut b.beta),
                ("running_mean", &mut b.running_mean),
                ("running_var", &mut b.running_var),
            ],
            _ => self.params_mut(),
        }
    }

    /// Train-mode forward. Needs the RNG only for dropout; batchnorm updates
    /// its running statistics as a side effect.
    pub fn forward_train(
        &mut self,
        x: &Tensor<S>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Tensor<S>, Cache<S>)> {
        match self {
            Layer::Dense(d) => Ok((dense_forward(d, x)?, Cache::Dense { input: x.clone() })),
            Layer::Conv1d(c) => {
                let padded = pad_input(c, x)?;
                let out = conv_forward(c, &padded);
                Ok((out, Cache::Conv1d { padded }))
            }
            Layer::Relu => {
                let mask: Vec<bool> = x.data().iter().map(|&v| v > S::ZERO).collect();
                let out = Tensor::from_parts(
                    x.shape().to_vec(),
                    x.data().iter().map(|&v| v.max(S::ZERO)).collect(),
                );
                Ok((out, Cache::Relu { mask }))
            }
            Layer::BatchNorm1d(b) => batchnorm_forward_train(b, x),
            Layer::Dropout(d) => {
                let keep_scale = S::from_f64(1.0 / (1.0 - d.rate));
                let mut mask = Vec::with_capacity(x.len());
                let mut data = Vec::with_capacity(x.len());
                for &v in x.data() {
                    let m = if rng.gen::<f64>() >= d.rate {
                        keep_scale
                    } else {
                        S::ZERO
                    };
                    mask.push(m);
                    data.push(v * m);
                }
                Ok((
                    Tensor::from_parts(x.shape().to_vec(), data),
                    Cache::Dropout { mask },
                ))
            }
            Layer::Softmax => {
                let out = softmax_forward(x)?;
                Ok((out.clone(), Cache::Softmax { output: out }))
            }
            Layer::Flatten => {
                let shape = x.shape().to_vec();
                let out = flatten_forward(x)?;
                Ok((out, Cache::Flatten { input_shape: shape }))
            }
        }
    }

    /// Eval-mode forward: pure, no RNG, no side effects. Dropout becomes the
    /// identity and batchnorm reads its running statistics.
    pub fn forward_eval(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        match self {
            Layer::Dense(d) => dense_forward(d, x),
            Layer::Conv1d(c) => {
                let padded = pad_input(c, x)?;
                Ok(conv_forward(c, &padded))
            }
            Layer::Relu => Ok(Tensor::from_parts(
                x.shape().to_vec(),
                x.data().iter().map(|&v| v.max(S::ZERO)).collect(),
            )),
            Layer::BatchNorm1d(b) => batchnorm_forward_eval(b, x),
            Layer::Dropout(_) => Ok(x.clone()),
            Layer::Softmax => softmax_forward(x),
            Layer::Flatten => flatten_forward(x),
        }
    }

    /// Backward pass from a train-mode cache. Returns the gradient w.r.t.
    /// the layer input and the parameter gradients in [`Layer::params`]
    /// order.
    pub fn backward(&self, cache: &Cache<S>, grad_out: &Tensor<S>) -> Result<(Tensor<S>, Vec<Tensor<S>>)> {
        match (self, cache) {
            (Layer::Dense(d), Cache::Dense { input }) => dense_backward(d, input, grad_out),
            (Layer::Conv1d(c), Cache::Conv1d { padded }) => conv_backward(c, padded, grad_out),
            (Layer::Relu, Cache::Relu { mask }) => {
                let data = grad_out
                    .data()
                    .iter()
                    .zip(mask)
                    .map(|(&g, &m)| if m { g } else { S::ZERO })
                    .collect();
                Ok((Tensor::from_parts(grad_out.shape().to_vec(), data), vec![]))
            }
            (Layer::BatchNorm1d(b), Cache::BatchNorm { xhat, inv_std }) => {
                batchnorm_backward(b, xhat, inv_std, grad_out)
            }
            (Layer::Dropout(_), Cache::Dropout { mask }) => {
                let data = grad_out
                    .data()
                    .iter()
                    .zip(mask)
                    .map(|(&g, &m)| g * m)
                    .collect();
                Ok((Tensor::from_parts(grad_out.shape().to_vec(), data), vec![]))
            }
            (Layer::Softmax, Cache::Softmax { output }) => {
                let rows = output.n_rows();
                let w = output.row_size();
                let mut data = vec![S::ZERO; output.len()];
                for r in 0..rows {
                    let y = output.row(r);
                    let g = grad_out.row(r);
                    let mut s = 0.0f64;
                    for i in 0..w {
                        s += g[i].to_f64() * y[i].to_f64();
                    }
                    for i in 0..w {
                        data[r * w + i] = S::from_f64(y[i].to_f64() * (g[i].to_f64() - s));
                    }
                }
                Ok((Tensor::from_parts(output.shape().to_vec(), data), vec![]))
            }
            (Layer::Flatten, Cache::Flatten { input_shape }) => Ok((
                Tensor::from_parts(input_shape.clone(), grad_out.data().to_vec()),
                vec![],
            )),
            _ => Err(Error::Validation(format!(
                "backward cache does not belong to this {} layer",
                self.kind()
            ))),
        }
    }
}

fn dense_forward<S: Scalar>(d: &Dense<S>, x: &Tensor<S>) -> Result<Tensor<S>> {
    if x.shape().len() != 2 || x.shape()[1] != d.in_features {
        return Err(Error::shape(
            "dense input",
            format!("[batch, {}]", d.in_features),
            format!("{:?}", x.shape()),
        ));
    }
    let n = x.n_rows();
    let mut data = Vec::with_capacity(n * d.out_features);
    for r in 0..n {
        let row = x.row(r);
        for o in 0..d.out_features {
            let w = d.weight.row(o);
            data.push(d.bias.data()[o] + dot(w, row));
        }
    }
    Ok(Tensor::from_parts(vec![n, d.out_features], data))
}

fn dense_backward<S: Scalar>(
    d: &Dense<S>,
    input: &Tensor<S>,
    grad_out: &Tensor<S>,
) -> Result<(Tensor<S>, Vec<Tensor<S>>)> {
    let n = input.n_rows();
    if grad_out.shape() != [n, d.out_features] {
        return Err(Error::shape(
            "dense grad",
            format!("[{n}, {}]", d.out_features),
            format!("{:?}", grad_out.shape()),
        ));
    }
    let mut dw = Tensor::zeros(vec![d.out_features, d.in_features]);
    let mut db = Tensor::zeros(vec![d.out_features]);
    let mut dx = Tensor::zeros(vec![n, d.in_features]);
    for r in 0..n {
        let xrow = input.row(r);
        let grow = grad_out.row(r);
        let inf = d.in_features;
        for o in 0..d.out_features {
            let g = grow[o];
            db.data_mut()[o] += g;
            axpy(g, xrow, &mut dw.data_mut()[o * inf..(o + 1) * inf]);
            axpy(
                g,
                d.weight.row(o),
                &mut dx.data_mut()[r * inf..(r + 1) * inf],
            );
        }
    }
    Ok((dx, vec![dw, db]))
}

fn pad_input<S: Scalar>(c: &Conv1d<S>, x: &Tensor<S>) -> Result<Tensor<S>> {
    if x.shape().len() != 3 || x.shape()[1] != c.in_channels {
        return Err(Error::shape(
            "conv1d input",
            format!("[batch, {}, length]", c.in_channels),
            format!("{:?}", x.shape()),
        ));
    }
    let (n, ch, len) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let plen = len + 2 * c.padding;
    if plen < c.kernel {
        return Err(Error::shape(
            "conv1d padded length",
            format!(">= kernel {}", c.kernel),
            plen,
        ));
    }
    if c.padding == 0 {
        return Ok(x.clone());
    }
    let mut data = vec![S::ZERO; n * ch * plen];
    for b in 0..n {
        for f in 0..ch {
            let src = &x.data()[(b * ch + f) * len..(b * ch + f + 1) * len];
            let at = (b * ch + f) * plen + c.padding;
            data[at..at + len].copy_from_slice(src);
        }
    }
    Ok(Tensor::from_parts(vec![n, ch, plen], data))
}

fn conv_out_len(plen: usize, kernel: usize, stride: usize) -> usize {
    (plen - kernel) / stride + 1
}

/// Cross-correlation (no kernel flip): y[f][i] = b[f] + sum over c, k of
/// K[f][c][k] * x[c][i*stride + k].
fn conv_forward<S: Scalar>(c: &Conv1d<S>, padded: &Tensor<S>) -> Tensor<S> {
    let (n, ch, plen) = (padded.shape()[0], padded.shape()[1], padded.shape()[2]);
    let out_len = conv_out_len(plen, c.kernel, c.stride);
    let mut data = vec![S::ZERO; n * c.out_channels * out_len];
    for b in 0..n {
        for f in 0..c.out_channels {
            let bias = c.bias.data()[f];
            let orow = &mut data[(b * c.out_channels + f) * out_len..][..out_len];
            for (i, o) in orow.iter_mut().enumerate() {
                let mut acc = bias;
                for ci in 0..ch {
                    let xrow = &padded.data()[(b * ch + ci) * plen..][..plen];
                    let krow = &c.weight.data()[(f * ch + ci) * c.kernel..][..c.kernel];
                    let base = i * c.stride;
                    for (k, &kv) in krow.iter().enumerate() {
                        acc += kv * xrow[base + k];
                    }
                }
                *o = acc;
            }
        }
    }
    Tensor::from_parts(vec![n, c.out_channels, out_len], data)
}

fn conv_backward<S: Scalar>(
    c: &Conv1d<S>,
    padded: &Tensor<S>,
    grad_out: &Tensor<S>,
) -> Result<(Tensor<S>, Vec<Tensor<S>>)> {
    let (n, ch, plen) = (padded.shape()[0], padded.shape()[1], padded.shape()[2]);
    let out_len = conv_out_len(plen, c.kernel, c.stride);
    if grad_out.shape() != [n, c.out_channels, out_len] {
        return Err(Error::shape(
            "conv1d grad",
            format!("[{n}, {}, {out_len}]", c.out_channels),
            format!("{:?}", grad_out.shape()),
        ));
    }
    let mut dw = Tensor::zeros(vec![c.out_channels, c.in_channels, c.kernel]);
    let mut db = Tensor::zeros(vec![c.out_channels]);
    let mut dpad = vec![S::ZERO; padded.len()];
    for b in 0..n {
        for f in 0..c.out_channels {
            let grow = &grad_out.data()[(b * c.out_channels + f) * out_len..][..out_len];
            for (i, &g) in grow.iter().enumerate() {
                db.data_mut()[f] += g;
                let base = i * c.stride;
                for ci in 0..ch {
                    let xrow = &padded.data()[(b * ch + ci) * plen..][..plen];
                    let dxrow = &mut dpad[(b * ch + ci) * plen..][..plen];
                    let kw = &mut dw.data_mut()[(f * ch + ci) * c.kernel..][..c.kernel];
                    let kr = &c.weight.data()[(f * ch + ci) * c.kernel..][..c.kernel];
                    for k in 0..c.kernel {
                        kw[k] += g * xrow[base + k];
                        dxrow[base + k] += g * kr[k];
                    }
                }
            }
        }
    }
    // strip the padding columns back off
    let len = plen - 2 * c.padding;
    let dx = if c.padding == 0 {
        Tensor::from_parts(vec![n, ch, plen], dpad)
    } else {
        let mut data = Vec::with_capacity(n * ch * len);
        for b in 0..n {
            for ci in 0..ch {
                let at = (b * ch + ci) * plen + c.padding;
                data.extend_from_slice(&dpad[at..at + len]);
            }
        }
        Tensor::from_parts(vec![n, ch, len], data)
    };
    Ok((dx, vec![dw, db]))
}

fn batchnorm_forward_train<S: Scalar>(
    b: &mut BatchNorm1d<S>,
    x: &Tensor<S>,
) -> Result<(Tensor<S>, Cache<S>)> {
    check_bn_input(b, x)?;
    let (n, f) = (x.shape()[0], x.shape()[1]);
    let nf = n as f64;
    let mut mean = vec![0.0f64; f];
    let mut var = vec![0.0f64; f];
    for r in 0..n {
        for (j, m) in mean.iter_mut().enumerate() {
            *m += x.data()[r * f + j].to_f64();
        }
    }
    for m in mean.iter_mut() {
        *m /= nf;
    }
    for r in 0..n {
        for (j, v) in var.iter_mut().enumerate() {
            let d = x.data()[r * f + j].to_f64() - mean[j];
            *v += d * d;
        }
    }
    // biased variance normalizes the batch; the unbiased version feeds the
    // running statistics
    let mut inv_std = vec![0.0f64; f];
    for j in 0..f {
        var[j] /= nf;
        inv_std[j] = 1.0 / (var[j] + b.eps).sqrt();
    }
    let mut xhat = vec![0.0f64; n * f];
    let mut out = vec![S::ZERO; n * f];
    for r in 0..n {
        for j in 0..f {
            let h = (x.data()[r * f + j].to_f64() - mean[j]) * inv_std[j];
            xhat[r * f + j] = h;
            out[r * f + j] =
                S::from_f64(b.gamma.data()[j].to_f64() * h + b.beta.data()[j].to_f64());
        }
    }
    let unbias = if n > 1 { nf / (nf - 1.0) } else { 1.0 };
    for j in 0..f {
        let rm = b.running_mean.data()[j].to_f64();
        let rv = b.running_var.data()[j].to_f64();
        b.running_mean.data_mut()[j] =
            S::from_f64((1.0 - b.momentum) * rm + b.momentum * mean[j]);
        b.running_var.data_mut()[j] =
            S::from_f64((1.0 - b.momentum) * rv + b.momentum * var[j] * unbias);
    }
    Ok((
        Tensor::from_parts(vec![n, f], out),
        Cache::BatchNorm { xhat, inv_std },
    ))
}

fn batchnorm_forward_eval<S: Scalar>(b: &BatchNorm1d<S>, x: &Tensor<S>) -> Result<Tensor<S>> {
    check_bn_input(b, x)?;
    let (n, f) = (x.shape()[0], x.shape()[1]);
    let mut out = vec![S::ZERO; n * f];
    for r in 0..n {
        for j in 0..f {
            let inv = 1.0 / (b.running_var.data()[j].to_f64() + b.eps).sqrt();
            let h = (x.data()[r * f + j].to_f64() - b.running_mean.data()[j].to_f64()) * inv;
            out[r * f + j] =
                S::from_f64(b.gamma.data()[j].to_f64() * h + b.beta.data()[j].to_f64());
        }
    }
    Ok(Tensor::from_parts(vec![n, f], out))
}

fn check_bn_input<S: Scalar>(b: &BatchNorm1d<S>, x: &Tensor<S>) -> Result<()> {
    if x.shape().len() != 2 || x.shape()[1] != b.features {
        return Err(Error::shape(
            "batchnorm1d input",
            format!("[batch, {}]", b.features),
            format!("{:?}", x.shape()),
        ));
    }
    Ok(())
}

fn batchnorm_backward<S: Scalar>(
    b: &BatchNorm1d<S>,
    xhat: &[f64],
    inv_std: &[f64],
    grad_out: &Tensor<S>,
) -> Result<(Tensor<S>, Vec<Tensor<S>>)> {
    let (n, f) = (grad_out.shape()[0], grad_out.shape()[1]);
    if xhat.len() != n * f || f != b.features {
        return Err(Error::shape("batchnorm grad", xhat.len(), n * f));
    }
    let nf = n as f64;
    let mut dgamma = vec![0.0f64; f];
    let mut dbeta = vec![0.0f64; f];
    let mut sum_dxhat = vec![0.0f64; f];
    let mut sum_dxhat_xhat = vec![0.0f64; f];
    for r in 0..n {
        for j in 0..f {
            let g = grad_out.data()[r * f + j].to_f64();
            let h = xhat[r * f + j];
            dgamma[j] += g * h;
            dbeta[j] += g;
            let dxh = g * b.gamma.data()[j].to_f64();
            sum_dxhat[j] += dxh;
            sum_dxhat_xhat[j] += dxh * h;
        }
    }
    let mut dx = vec![S::ZERO; n * f];
    for r in 0..n {
        for j in 0..f {
            let g = grad_out.data()[r * f + j].to_f64();
            let dxh = g * b.gamma.data()[j].to_f64();
            let h = xhat[r * f + j];
            let v = inv_std[j] / nf * (nf * dxh - sum_dxhat[j] - h * sum_dxhat_xhat[j]);
            dx[r * f + j] = S::from_f64(v);
        }
    }
    let dg = Tensor::from_parts(vec![f], dgamma.into_iter().map(S::from_f64).collect());
    let db = Tensor::from_parts(vec![f], dbeta.into_iter().map(S::from_f64).collect());
    Ok((Tensor::from_parts(vec![n, f], dx), vec![dg, db]))
}

/// Row-wise softmax over the last axis, stabilized by max subtraction.
fn softmax_forward<S: Scalar>(x: &Tensor<S>) -> Result<Tensor<S>> {
    if x.shape().is_empty() || x.shape().last() == Some(&0) {
        return Err(Error::shape("softmax input", "non-empty last axis", format!("{:?}", x.shape())));
    }
    let w = *x.shape().last().unwrap();
    let rows = x.len() / w;
    let mut data = vec![S::ZERO; x.len()];
    for r in 0..rows {
        let row = &x.data()[r * w..(r + 1) * w];
        let mut mx = row[0];
        for &v in row {
            mx = mx.max(v);
        }
        let mxf = mx.to_f64();
        let mut exps = vec![0.0f64; w];
        let mut sum = 0.0f64;
        for (i, &v) in row.iter().enumerate() {
            let e = (v.to_f64() - mxf).exp();
            exps[i] = e;
            sum += e;
        }
        for i in 0..w {
            data[r * w + i] = S::from_f64(exps[i] / sum);
        }
    }
    Ok(Tensor::from_parts(x.shape().to_vec(), data))
}

fn flatten_forward<S: Scalar>(x: &Tensor<S>) -> Result<Tensor<S>> {
    if x.shape().len() < 2 {
        return Err(Error::shape("flatten input", "rank >= 2", format!("{:?}", x.shape())));
    }
    Ok(Tensor::from_parts(
        vec![x.n_rows(), x.row_size()],
        x.data().to_vec(),
    ))
}

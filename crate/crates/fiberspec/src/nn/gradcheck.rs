use rand::seq::index::sample;

use super::fit::{forward_loss, seeded_rng, Targets};
use super::network::Network;
use super::tensor::Tensor;
use crate::error::Result;

/// How many parameter coordinates the finite-difference sweep probes when
/// the network is too large to check exhaustively.
const SUBSAMPLE: usize = 400;

/// Central-difference validation of the analytic gradients, in f64. Every
/// forward pass reruns under a freshly seeded RNG so dropout draws the same
/// masks; batchnorm runs in train mode on the fixed batch. Returns
/// max |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
pub fn gradient_check(
    net: &mut Network<f64>,
    inputs: &Tensor<f64>,
    targets: &Targets<f64>,
    step: f64,
    seed: u64,
) -> Result<f64> {
    let start_state = net.snapshot();

    let mut rng = seeded_rng(seed, 0xFD);
    let (_, caches, grad, upto) = forward_loss(net, inputs, targets, &mut rng)?;
    let analytic = net.backward(&caches, upto, grad)?;

    let sizes: Vec<usize> = analytic.iter().map(|t| t.len()).collect();
    let total: usize = sizes.iter().sum();
    let picked: Vec<usize> = if total <= SUBSAMPLE {
        (0..total).collect()
    } else {
        let mut pick_rng = seeded_rng(seed, 0xFE);
        let mut v = sample(&mut pick_rng, total, SUBSAMPLE).into_vec();
        v.sort_unstable();
        v
    };

    let mut max_rel = 0.0f64;
    for flat in picked {
        // locate the tensor owning this flat coordinate
        let mut t_idx = 0;
        let mut offset = flat;
        while offset >= sizes[t_idx] {
            offset -= sizes[t_idx];
            t_idx += 1;
        }
        let a = analytic[t_idx].data()[offset];
        let orig = net.params()[t_idx].data()[offset];

        net.params_mut()[t_idx].data_mut()[offset] = orig + step;
        let mut rng = seeded_rng(seed, 0xFD);
        let (loss_hi, _, _, _) = forward_loss(net, inputs, targets, &mut rng)?;

        net.params_mut()[t_idx].data_mut()[offset] = orig - step;
        let mut rng = seeded_rng(seed, 0xFD);
        let (loss_lo, _, _, _) = forward_loss(net, inputs, targets, &mut rng)?;

        net.params_mut()[t_idx].data_mut()[offset] = orig;
        let numeric = (loss_hi - loss_lo) / (2.0 * step);
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        max_rel = max_rel.max(rel);
    }

    net.restore(&start_state)?;
    Ok(max_rel)
}

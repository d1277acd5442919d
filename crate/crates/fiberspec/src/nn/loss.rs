use super::scalar::Scalar;
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropy,
    Mse,
}

/// Mean over the batch of -log softmax(logits)[target], evaluated through
/// log-sum-exp so saturated logits stay finite. The gradient w.r.t. the
/// logits is (softmax - one_hot) / batch.
pub fn loss_cross_entropy<S: Scalar>(
    logits: &Tensor<S>,
    targets: &[usize],
) -> Result<(f64, Tensor<S>)> {
    let (n, c) = check_class_batch(logits, targets)?;
    let mut grad = vec![S::ZERO; n * c];
    let mut loss = 0.0f64;
    for r in 0..n {
        let row = logits.row(r);
        let mut mx = row[0].to_f64();
        for &v in row {
            mx = mx.max(v.to_f64());
        }
        let mut sum = 0.0f64;
        for &v in row {
            sum += (v.to_f64() - mx).exp();
        }
        let lse = mx + sum.ln();
        loss += lse - row[targets[r]].to_f64();
        for i in 0..c {
            let p = (row[i].to_f64() - lse).exp();
            let y = if i == targets[r] { 1.0 } else { 0.0 };
            grad[r * c + i] = S::from_f64((p - y) / n as f64);
        }
    }
    Ok((loss / n as f64, Tensor::from_parts(vec![n, c], grad)))
}

/// Cross-entropy taken on probabilities that already went through a softmax
/// layer. Returns the loss and the gradient w.r.t. the softmax *input*,
/// which is the same (p - one_hot)/batch expression; training injects it
/// below the softmax instead of backpropagating through it.
pub fn loss_cross_entropy_from_probs<S: Scalar>(
    probs: &Tensor<S>,
    targets: &[usize],
) -> Result<(f64, Tensor<S>)> {
    let (n, c) = check_class_batch(probs, targets)?;
    let mut grad = vec![S::ZERO; n * c];
    let mut loss = 0.0f64;
    for r in 0..n {
        let row = probs.row(r);
        let p_t = row[targets[r]].to_f64();
        loss += -(p_t.max(f64::MIN_POSITIVE)).ln();
        for i in 0..c {
            let y = if i == targets[r] { 1.0 } else { 0.0 };
            grad[r * c + i] = S::from_f64((row[i].to_f64() - y) / n as f64);
        }
    }
    Ok((loss / n as f64, Tensor::from_parts(vec![n, c], grad)))
}

fn check_class_batch<S: Scalar>(scores: &Tensor<S>, targets: &[usize]) -> Result<(usize, usize)> {
    if scores.shape().len() != 2 {
        return Err(Error::shape(
            "class scores",
            "[batch, classes]",
            format!("{:?}", scores.shape()),
        ));
    }
    let (n, c) = (scores.shape()[0], scores.shape()[1]);
    if c < 2 {
        return Err(Error::Validation(format!(
            "classification needs >= 2 classes, got {c}"
        )));
    }
    if targets.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: targets.len(),
        });
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= c) {
        return Err(Error::IndexOutOfRange { index: t, len: c });
    }
    Ok((n, c))
}

/// Mean squared error over all elements; gradient 2(output - target)/N.
pub fn loss_mse<S: Scalar>(output: &Tensor<S>, target: &Tensor<S>) -> Result<(f64, Tensor<S>)> {
    if output.shape() != target.shape() {
        return Err(Error::shape(
            "mse target",
            format!("{:?}", output.shape()),
            format!("{:?}", target.shape()),
        ));
    }
    let n = output.len() as f64;
    let mut loss = 0.0f64;
    let mut grad = vec![S::ZERO; output.len()];
    for (i, (&o, &t)) in output.data().iter().zip(target.data()).enumerate() {
        let d = o.to_f64() - t.to_f64();
        loss += d * d;
        grad[i] = S::from_f64(2.0 * d / n);
    }
    Ok((
        loss / n,
        Tensor::from_parts(output.shape().to_vec(), grad),
    ))
}

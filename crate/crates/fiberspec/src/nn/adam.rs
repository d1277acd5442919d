use super::scalar::Scalar;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Adam with bias correction. Moments are shaped like the parameters they
/// track; the per-element update runs in f64 before narrowing back.
#[derive(Debug, Clone)]
pub struct AdamState<S: Scalar> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Tensor<S>>,
    v: Vec<Tensor<S>>,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(lr: f64, param_shapes: &[Vec<usize>]) -> Result<Self> {
        if !lr.is_finite() || lr < 0.0 {
            return Err(Error::Validation(format!(
                "learning rate {lr} must be finite and >= 0"
            )));
        }
        Ok(Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: param_shapes.iter().map(|s| Tensor::zeros(s.clone())).collect(),
            v: param_shapes.iter().map(|s| Tensor::zeros(s.clone())).collect(),
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over every parameter tensor. A non-finite gradient aborts
    /// before anything (parameters, moments, step counter) is touched.
    pub fn step(&mut self, params: &mut [&mut Tensor<S>], grads: &[Tensor<S>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::LengthMismatch {
                expected: self.m.len(),
                got: params.len().max(grads.len()),
            });
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != self.m[i].shape() {
                return Err(Error::shape(
                    format!("adam parameter {i}"),
                    format!("{:?}", self.m[i].shape()),
                    format!("{:?} vs grad {:?}", p.shape(), g.shape()),
                ));
            }
            if let Some(j) = g.first_non_finite() {
                return Err(Error::NonFinite {
                    context: format!("gradient tensor {i} element {j}"),
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for i in 0..self.m.len() {
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            let p = params[i].data_mut();
            let g = grads[i].data();
            for j in 0..p.len() {
                let gj = g[j].to_f64();
                let mj = self.beta1 * m[j].to_f64() + (1.0 - self.beta1) * gj;
                let vj = self.beta2 * v[j].to_f64() + (1.0 - self.beta2) * gj * gj;
                m[j] = S::from_f64(mj);
                v[j] = S::from_f64(vj);
                let m_hat = mj / bc1;
                let v_hat = vj / bc2;
                p[j] = S::from_f64(p[j].to_f64() - self.lr * m_hat / (v_hat.sqrt() + self.eps));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(v: f64) -> Tensor<f64> {
        Tensor::new(vec![1], vec![v]).unwrap()
    }

    #[test]
    fn zero_gradient_is_a_fixed_point_with_decaying_moments() {
        let mut adam = AdamState::new(0.01, &[vec![1]]).unwrap();
        let mut p = scalar_param(3.0);
        // prime the moments with one real gradient
        adam.step(&mut [&mut p], &[scalar_param(1.0)]).unwrap();
        let p_after = p.data()[0];
        let m1 = adam.m[0].data()[0];
        adam.step(&mut [&mut p], &[scalar_param(0.0)]).unwrap();
        let m2 = adam.m[0].data()[0];
        assert!((m2 - m1 * 0.9).abs() < 1e-15, "first moment decays by beta1");
        // the decayed moment still moves the parameter; a zero-moment state does not
        let mut fresh = AdamState::new(0.01, &[vec![1]]).unwrap();
        let mut q = scalar_param(3.0);
        fresh.step(&mut [&mut q], &[scalar_param(0.0)]).unwrap();
        assert_eq!(q.data()[0], 3.0);
        assert!(p.data()[0] != p_after);
    }

    #[test]
    fn first_step_magnitude_is_close_to_lr() {
        for &g in &[0.7, -0.3, 12.0, -1e-3] {
            let lr = 1e-3;
            let mut adam = AdamState::new(lr, &[vec![1]]).unwrap();
            let mut p = scalar_param(0.0);
            adam.step(&mut [&mut p], &[scalar_param(g)]).unwrap();
            // bias-corrected first step: lr * g / (|g| + eps)
            let want = lr * g.abs() / (g.abs() + 1e-8);
            assert!((p.data()[0].abs() - want).abs() < 1e-15);
            // deviation from lr itself is bounded by lr * eps / |g|
            assert!((p.data()[0].abs() - lr).abs() <= 2.0 * lr * 1e-8 / g.abs());
            assert_eq!(p.data()[0] < 0.0, g > 0.0, "moves against the gradient");
        }
    }

    #[test]
    fn constant_gradient_update_magnitudes_shrink() {
        let mut adam = AdamState::new(0.05, &[vec![1]]).unwrap();
        let mut p = scalar_param(0.0);
        let g = scalar_param(2.5);
        adam.step(&mut [&mut p], &[g.clone()]).unwrap();
        let first = p.data()[0].abs();
        let before = p.data()[0];
        adam.step(&mut [&mut p], &[g]).unwrap();
        let second = (p.data()[0] - before).abs();
        assert!(second <= first + 1e-12, "second {second} vs first {first}");
    }

    #[test]
    fn non_finite_gradient_aborts_without_touching_state() {
        let mut adam = AdamState::new(0.01, &[vec![2]]).unwrap();
        let mut p = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap();
        let bad = Tensor::from_parts(vec![2], vec![0.1, f64::NAN]);
        let err = adam.step(&mut [&mut p], &[bad]);
        assert!(matches!(err, Err(Error::NonFinite { .. })));
        assert_eq!(p.data(), &[1.0, 2.0]);
        assert_eq!(adam.step_count(), 0);
        assert!(adam.m[0].data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_lr_is_a_null_update() {
        let mut adam = AdamState::new(0.0, &[vec![1]]).unwrap();
        let mut p = scalar_param(1.5);
        adam.step(&mut [&mut p], &[scalar_param(42.0)]).unwrap();
        assert_eq!(p.data()[0], 1.5);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn negative_lr_rejected() {
        assert!(AdamState::<f32>::new(-0.1, &[vec![1]]).is_err());
        assert!(AdamState::<f32>::new(f64::NAN, &[vec![1]]).is_err());
    }
}

use crate::error::{Error, Result};

/// Position along the fixed preprocessing order. Transitions only move
/// forward; an operation may skip stages but never revisit one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Raw,
    Reflectance,
    Snv,
    Smoothed,
    Derivative,
}

impl Stage {
    pub(crate) fn check_before(self, next: Stage, op: &str) -> Result<()> {
        if self < next {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "{op} expects input earlier than the {next:?} stage, got {self:?}"
            )))
        }
    }
}

/// One per-pixel signal vector, 400 channels on the default grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    stage: Stage,
}

impl Spectrum {
    pub fn new(values: Vec<f64>, stage: Stage) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("spectrum channel {i}"),
            });
        }
        Ok(Self { values, stage })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stages_order_forward() {
        assert!(Stage::Raw < Stage::Reflectance);
        assert!(Stage::Reflectance < Stage::Snv);
        assert!(Stage::Snv < Stage::Smoothed);
        assert!(Stage::Smoothed < Stage::Derivative);
        assert!(Stage::Reflectance.check_before(Stage::Snv, "snv").is_ok());
        assert!(Stage::Snv.check_before(Stage::Snv, "snv").is_err());
        assert!(Stage::Derivative.check_before(Stage::Snv, "snv").is_err());
    }

    #[test]
    fn non_finite_values_rejected() {
        assert!(Spectrum::new(vec![1.0, f64::NAN], Stage::Raw).is_err());
        assert!(Spectrum::new(vec![1.0, f64::INFINITY], Stage::Raw).is_err());
        assert!(Spectrum::new(vec![1.0, 2.0], Stage::Raw).is_ok());
    }

    #[test]
    fn mean_is_arithmetic() {
        let s = Spectrum::new(vec![0.0, 1.0, 2.0], Stage::Reflectance).unwrap();
        assert_eq!(s.mean(), 1.0);
    }
}

use super::spectrum::{Spectrum, Stage};
use crate::error::{Error, Result};

/// Standard normal variate: center and scale one spectrum by its own mean
/// and sample standard deviation (n-1 divisor). Removes per-spectrum
/// baseline offset and multiplicative gain.
pub fn snv(x: &Spectrum) -> Result<Spectrum> {
    x.stage().check_before(Stage::Snv, "snv")?;
    Spectrum::new(snv_values(x.values())?, Stage::Snv)
}

pub fn snv_values(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::Validation(format!(
            "snv needs at least 2 channels, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n - 1.0)).sqrt();
    if !(sd > 1e-12) {
        return Err(Error::ZeroVariance);
    }
    Ok(x.iter().map(|v| (v - mean) / sd).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_two_three_standardizes_to_unit_steps() {
        // mean 2, sample sd 1
        let out = snv_values(&[1.0, 2.0, 3.0]).unwrap();
        for (got, want) in out.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_input_is_zero_variance() {
        assert!(matches!(
            snv_values(&[5.0, 5.0, 5.0]),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn single_channel_rejected() {
        assert!(snv_values(&[1.0]).is_err());
    }

    #[test]
    fn stage_advances_to_snv() {
        let s = Spectrum::new(vec![0.1, 0.4, 0.3], Stage::Reflectance).unwrap();
        assert_eq!(snv(&s).unwrap().stage(), Stage::Snv);
        let done = snv(&s).unwrap();
        assert!(snv(&done).is_err());
    }

    fn spread_vec() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-3.0f64..3.0, 4..40)
            .prop_filter("needs variance", |v| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() > 1e-6
            })
    }

    proptest! {
        #[test]
        fn output_has_zero_mean_unit_sample_sd(x in spread_vec()) {
            let out = snv_values(&x).unwrap();
            let n = out.len() as f64;
            let mean = out.iter().sum::<f64>() / n;
            let sd = (out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((sd - 1.0).abs() < 1e-9);
        }

        #[test]
        fn affine_invariance(x in spread_vec(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
            let mapped: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let lhs = snv_values(&mapped).unwrap();
            let rhs = snv_values(&x).unwrap();
            for (l, r) in lhs.iter().zip(&rhs) {
                prop_assert!((l - r).abs() < 1e-9);
            }
        }
    }
}

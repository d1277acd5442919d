use crate::error::{Error, Result};

/// Fixed-width binning of reconstruction errors per group, sharing one
/// axis from zero to 1.05 times the largest observed value.
#[derive(Debug, Clone, PartialEq)]
pub struct ReHistogram {
    pub upper: f64,
    pub n_bins: usize,
    /// Group name with its per-bin counts, in input order.
    pub groups: Vec<(String, Vec<usize>)>,
    pub threshold: Option<f64>,
}

pub const DEFAULT_BINS: usize = 50;

impl ReHistogram {
    pub fn bin_width(&self) -> f64 {
        self.upper / self.n_bins as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.n_bins)
            .map(|i| self.upper * i as f64 / self.n_bins as f64)
            .collect()
    }
}

pub fn re_histogram(
    groups: &[(String, Vec<f64>)],
    threshold: Option<f64>,
    n_bins: usize,
) -> Result<ReHistogram> {
    if n_bins == 0 {
        return Err(Error::Validation("histogram needs at least one bin".into()));
    }
    if groups.is_empty() {
        return Err(Error::Validation("histogram needs at least one group".into()));
    }
    let mut max = 0.0f64;
    for (name, values) in groups {
        if values.is_empty() {
            return Err(Error::Validation(format!(
                "histogram group {name:?} has no values"
            )));
        }
        for &v in values {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NonFinite {
                    context: format!("reconstruction error {v} in group {name:?}"),
                });
            }
            max = max.max(v);
        }
    }
    // all-zero input still needs a positive axis
    let upper = if max > 0.0 { 1.05 * max } else { 1.0 };
    let mut binned = Vec::with_capacity(groups.len());
    for (name, values) in groups {
        let mut counts = vec![0usize; n_bins];
        for &v in values {
            let i = ((v / upper) * n_bins as f64) as usize;
            counts[i.min(n_bins - 1)] += 1;
        }
        binned.push((name.clone(), counts));
    }
    Ok(ReHistogram {
        upper,
        n_bins,
        groups: binned,
        threshold,
    })
}

/// Median with the usual midpoint rule for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

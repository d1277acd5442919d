use crate::error::{Error, Result};

/// Class-by-class count grid; rows index the true label, columns the
/// predicted label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn zeros(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn count(&self, true_label: usize, pred_label: usize) -> usize {
        self.counts[true_label * self.n_classes + pred_label]
    }

    pub fn row(&self, true_label: usize) -> &[usize] {
        &self.counts[true_label * self.n_classes..(true_label + 1) * self.n_classes]
    }

    pub fn add(&mut self, true_label: usize, pred_label: usize) -> Result<()> {
        for label in [true_label, pred_label] {
            if label >= self.n_classes {
                return Err(Error::LabelOutOfRange {
                    label,
                    n_classes: self.n_classes,
                });
            }
        }
        self.counts[true_label * self.n_classes + pred_label] += 1;
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.n_classes).map(|i| self.count(i, i)).sum()
    }

    /// Overall accuracy; `None` when the matrix is empty.
    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        if total == 0 {
            None
        } else {
            Some(self.trace() as f64 / total as f64)
        }
    }

    /// Per-class recall (diagonal over row sum); `None` for absent classes.
    pub fn per_class_rate(&self, true_label: usize) -> Option<f64> {
        let row_sum: usize = self.row(true_label).iter().sum();
        if row_sum == 0 {
            None
        } else {
            Some(self.count(true_label, true_label) as f64 / row_sum as f64)
        }
    }

    pub fn max_count(&self) -> usize {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

pub fn confusion(
    true_labels: &[usize],
    pred_labels: &[usize],
    n_classes: usize,
) -> Result<ConfusionMatrix> {
    if true_labels.len() != pred_labels.len() {
        return Err(Error::LengthMismatch {
            expected: true_labels.len(),
            got: pred_labels.len(),
        });
    }
    let mut cm = ConfusionMatrix::zeros(n_classes);
    for (&t, &p) in true_labels.iter().zip(pred_labels) {
        cm.add(t, p)?;
    }
    Ok(cm)
}

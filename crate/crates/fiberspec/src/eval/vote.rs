use crate::error::{Error, Result};

/// One object's pixel votes folded into a final label.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectPrediction {
    pub object_id: String,
    pub pixel_labels: Vec<usize>,
    pub prob_sums: Vec<f64>,
    pub final_label: usize,
    /// Lead of the winning label's vote count over the best other label.
    /// Zero when the decision fell through to the probability tie-break.
    pub margin: usize,
}

/// Modal pixel label. Ties break by the largest summed softmax probability
/// among the tied labels, then by the lowest class index.
pub fn majority_vote(pixel_labels: &[usize], prob_sums: &[f64]) -> Result<(usize, usize)> {
    if pixel_labels.is_empty() {
        return Err(Error::EmptyObject("no pixel labels to vote over".into()));
    }
    let n_classes = prob_sums.len();
    let mut counts = vec![0usize; n_classes];
    for &l in pixel_labels {
        if l >= n_classes {
            return Err(Error::LabelOutOfRange {
                label: l,
                n_classes,
            });
        }
        counts[l] += 1;
    }
    let top = *counts.iter().max().unwrap();
    let runner_up = counts.iter().filter(|&&c| c < top).max().copied().unwrap_or(0);
    let tied: Vec<usize> = (0..n_classes).filter(|&c| counts[c] == top).collect();
    if tied.len() == 1 {
        return Ok((tied[0], top - runner_up));
    }
    let mut winner = tied[0];
    for &c in &tied[1..] {
        if prob_sums[c] > prob_sums[winner] {
            winner = c;
        }
    }
    Ok((winner, 0))
}

/// Applies majority voting to one object's pixel predictions, accumulating
/// the probability sums in 64-bit.
pub fn vote_object(
    object_id: impl Into<String>,
    pixel_labels: &[usize],
    pixel_probs: &[Vec<f32>],
    n_classes: usize,
) -> Result<ObjectPrediction> {
    let mut prob_sums = vec![0.0f64; n_classes];
    for probs in pixel_probs {
        if probs.len() != n_classes {
            return Err(Error::LengthMismatch {
                expected: n_classes,
                got: probs.len(),
            });
        }
        for (s, &p) in prob_sums.iter_mut().zip(probs) {
            *s += p as f64;
        }
    }
    let (final_label, margin) = majority_vote(pixel_labels, &prob_sums)?;
    Ok(ObjectPrediction {
        object_id: object_id.into(),
        pixel_labels: pixel_labels.to_vec(),
        prob_sums,
        final_label,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_majority_wins() {
        let (label, margin) = majority_vote(&[0, 0, 1], &[0.0, 0.0]).unwrap();
        assert_eq!((label, margin), (0, 1));
        let (label, margin) = majority_vote(&[2, 2, 2, 1], &[0.0; 3]).unwrap();
        assert_eq!((label, margin), (2, 2));
    }

    #[test]
    fn count_tie_falls_to_summed_probability() {
        // labels 0 and 1 each hold one vote; label 0 carries more mass
        let (label, margin) = majority_vote(&[0, 1], &[1.3, 0.7]).unwrap();
        assert_eq!((label, margin), (0, 0));
        let (label, _) = majority_vote(&[0, 1], &[0.6, 1.4]).unwrap();
        assert_eq!(label, 1);
    }

    #[test]
    fn full_tie_falls_to_lowest_index() {
        let (label, margin) = majority_vote(&[3, 1], &[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!((label, margin), (1, 0));
    }

    #[test]
    fn empty_object_and_bad_labels_rejected() {
        assert!(matches!(
            majority_vote(&[], &[0.0; 2]),
            Err(Error::EmptyObject(_))
        ));
        assert!(matches!(
            majority_vote(&[5], &[0.0; 2]),
            Err(Error::LabelOutOfRange { label: 5, n_classes: 2 })
        ));
    }

    #[test]
    fn vote_object_accumulates_probabilities() {
        let probs = vec![vec![0.9f32, 0.1], vec![0.2, 0.8], vec![0.4, 0.6]];
        let obj = vote_object("obj-1", &[0, 1, 1], &probs, 2).unwrap();
        assert_eq!(obj.final_label, 1);
        assert_eq!(obj.margin, 1);
        assert!((obj.prob_sums[0] - 1.5).abs() < 1e-6);
        assert!((obj.prob_sums[1] - 1.5).abs() < 1e-6);
        // final label appears in the pixel multiset
        assert!(obj.pixel_labels.contains(&obj.final_label));
    }

    #[test]
    fn vote_is_invariant_under_pixel_order() {
        let labels = [0usize, 1, 1, 2, 2];
        let probs: Vec<Vec<f32>> = labels
            .iter()
            .map(|&l| {
                let mut p = vec![0.1f32; 3];
                p[l] = 0.8;
                p
            })
            .collect();
        let a = vote_object("o", &labels, &probs, 3).unwrap();
        let mut rev_labels = labels.to_vec();
        rev_labels.reverse();
        let mut rev_probs = probs.clone();
        rev_probs.reverse();
        let b = vote_object("o", &rev_labels, &rev_probs, 3).unwrap();
        assert_eq!(a.final_label, b.final_label);
        assert_eq!(a.margin, b.margin);
    }
}

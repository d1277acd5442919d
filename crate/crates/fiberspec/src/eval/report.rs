use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::confusion::{confusion, ConfusionMatrix};
use super::histogram::{median, re_histogram, ReHistogram};
use super::vote::{vote_object, ObjectPrediction};

/// One classified spectrum as persisted in the predictions file.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelRecord {
    pub object_id: String,
    pub pixel_index: usize,
    pub true_label: usize,
    pub pred_label: usize,
    pub probs: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassRates {
    pub label: String,
    pub n_pixels: usize,
    pub n_objects: usize,
    /// Percent of this class's pixels classified correctly; `None` when the
    /// class never occurs.
    pub pixel_pct: Option<f64>,
    pub object_pct: Option<f64>,
}

/// Pixel- and object-level scores; a pure view over the prediction records.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub labels: Vec<String>,
    pub pixel_confusion: ConfusionMatrix,
    pub object_confusion: ConfusionMatrix,
    pub per_class: Vec<ClassRates>,
    pub objects: Vec<ObjectPrediction>,
    /// True label per entry of `objects`.
    pub object_true: Vec<usize>,
}

impl EvaluationReport {
    pub fn pixel_accuracy(&self) -> Option<f64> {
        self.pixel_confusion.accuracy()
    }

    pub fn object_accuracy(&self) -> Option<f64> {
        self.object_confusion.accuracy()
    }

    /// Plain-text summary with percentages at two decimal places.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let pct = |v: Option<f64>| match v {
            Some(a) => format!("{:.2}", 100.0 * a),
            None => "n/a".to_string(),
        };
        let _ = writeln!(
            s,
            "pixel accuracy: {} ({} of {})",
            pct(self.pixel_accuracy()),
            self.pixel_confusion.trace(),
            self.pixel_confusion.total()
        );
        let _ = writeln!(
            s,
            "object accuracy: {} ({} of {})",
            pct(self.object_accuracy()),
            self.object_confusion.trace(),
            self.object_confusion.total()
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<12} {:>7} {:>8} {:>7} {:>8}", "class", "px_n", "px_pct", "obj_n", "obj_pct");
        for rates in &self.per_class {
            let fmt = |v: Option<f64>| match v {
                Some(p) => format!("{p:.2}"),
                None => "n/a".to_string(),
            };
            let _ = writeln!(
                s,
                "{:<12} {:>7} {:>8} {:>7} {:>8}",
                rates.label,
                rates.n_pixels,
                fmt(rates.pixel_pct),
                rates.n_objects,
                fmt(rates.object_pct)
            );
        }
        s
    }
}

/// Scores pixel predictions against the manifest's object labels and folds
/// them into object votes. Every record's object must appear in the
/// manifest and agree with its label.
pub fn accuracy_report(
    manifest: &BTreeMap<String, usize>,
    records: &[PixelRecord],
    labels: &[String],
) -> Result<EvaluationReport> {
    let n_classes = labels.len();
    let mut by_object: BTreeMap<&str, Vec<&PixelRecord>> = BTreeMap::new();
    for rec in records {
        let Some(&true_label) = manifest.get(&rec.object_id) else {
            return Err(Error::UnknownObject(format!(
                "pixel {} references object {:?} absent from the manifest",
                rec.pixel_index, rec.object_id
            )));
        };
        if rec.true_label != true_label {
            return Err(Error::Validation(format!(
                "pixel {} of object {:?} claims true label {} but the manifest says {}",
                rec.pixel_index, rec.object_id, rec.true_label, true_label
            )));
        }
        by_object.entry(&rec.object_id).or_default().push(rec);
    }

    let true_pixels: Vec<usize> = records.iter().map(|r| r.true_label).collect();
    let pred_pixels: Vec<usize> = records.iter().map(|r| r.pred_label).collect();
    let pixel_confusion = confusion(&true_pixels, &pred_pixels, n_classes)?;

    let mut objects = Vec::with_capacity(by_object.len());
    let mut object_true = Vec::with_capacity(by_object.len());
    let mut object_confusion = ConfusionMatrix::zeros(n_classes);
    for (object_id, recs) in &by_object {
        let pixel_labels: Vec<usize> = recs.iter().map(|r| r.pred_label).collect();
        let pixel_probs: Vec<Vec<f32>> = recs.iter().map(|r| r.probs.clone()).collect();
        let voted = vote_object(*object_id, &pixel_labels, &pixel_probs, n_classes)?;
        let t = manifest[*object_id];
        object_confusion.add(t, voted.final_label)?;
        objects.push(voted);
        object_true.push(t);
    }

    let per_class = (0..n_classes)
        .map(|c| ClassRates {
            label: labels[c].clone(),
            n_pixels: pixel_confusion.row(c).iter().sum(),
            n_objects: object_confusion.row(c).iter().sum(),
            pixel_pct: pixel_confusion.per_class_rate(c).map(|r| 100.0 * r),
            object_pct: object_confusion.per_class_rate(c).map(|r| 100.0 * r),
        })
        .collect();

    Ok(EvaluationReport {
        labels: labels.to_vec(),
        pixel_confusion,
        object_confusion,
        per_class,
        objects,
        object_true,
    })
}

/// Counts rendered as CSV with label headers; values are exact integers.
pub fn confusion_csv(cm: &ConfusionMatrix, labels: &[String]) -> String {
    let mut s = String::from("true\\pred");
    for l in labels {
        let _ = write!(s, ",{l}");
    }
    s.push('\n');
    for (t, label) in labels.iter().enumerate() {
        let _ = write!(s, "{label}");
        for p in 0..cm.n_classes() {
            let _ = write!(s, ",{}", cm.count(t, p));
        }
        s.push('\n');
    }
    s
}

/// Per-class rates at full precision for downstream tooling.
pub fn per_class_csv(report: &EvaluationReport) -> String {
    let mut s = String::from("label,n_pixels,pixel_rate,n_objects,object_rate\n");
    let fmt = |v: Option<f64>| v.map(|r| r.to_string()).unwrap_or_default();
    for (c, r) in report.per_class.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.label,
            r.n_pixels,
            fmt(report.pixel_confusion.per_class_rate(c)),
            r.n_objects,
            fmt(report.object_confusion.per_class_rate(c))
        );
    }
    s
}

/// One object's detector outcome with its ground-truth class name.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    pub object_id: String,
    pub true_label: String,
    pub pixel_res: Vec<f64>,
    pub pixel_is_target: Vec<bool>,
    pub object_is_target: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionClassRates {
    pub label: String,
    pub is_target_class: bool,
    pub n_pixels: usize,
    pub n_objects: usize,
    /// Percent of pixels whose binary decision matches the class.
    pub pixel_pct: f64,
    pub object_pct: f64,
    /// Median over the class's objects of their mean pixel RE.
    pub median_object_re: f64,
}

/// Binary-decision quality per textile class plus the RE distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub target_label: String,
    pub threshold: f64,
    pub per_class: Vec<DetectionClassRates>,
    pub histogram: ReHistogram,
}

impl DetectionReport {
    pub fn class(&self, label: &str) -> Option<&DetectionClassRates> {
        self.per_class.iter().find(|c| c.label == label)
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "target class: {}   threshold: {:.6}",
            self.target_label, self.threshold
        );
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<12} {:>7} {:>8} {:>7} {:>8} {:>12}",
            "class", "px_n", "px_pct", "obj_n", "obj_pct", "median_re"
        );
        for c in &self.per_class {
            let _ = writeln!(
                s,
                "{:<12} {:>7} {:>8.2} {:>7} {:>8.2} {:>12.6}",
                c.label, c.n_pixels, c.pixel_pct, c.n_objects, c.object_pct, c.median_object_re
            );
        }
        s
    }
}

pub fn detection_report(
    outcomes: &[DetectionOutcome],
    target_label: &str,
    threshold: f64,
    n_bins: usize,
) -> Result<DetectionReport> {
    if outcomes.is_empty() {
        return Err(Error::Validation("no detection outcomes to score".into()));
    }
    let mut by_class: BTreeMap<&str, Vec<&DetectionOutcome>> = BTreeMap::new();
    for o in outcomes {
        if o.pixel_res.is_empty() || o.pixel_res.len() != o.pixel_is_target.len() {
            return Err(Error::EmptyObject(format!(
                "object {:?} has no aligned pixel decisions",
                o.object_id
            )));
        }
        by_class.entry(&o.true_label).or_default().push(o);
    }

    let mut per_class = Vec::with_capacity(by_class.len());
    let mut hist_groups = Vec::with_capacity(by_class.len());
    for (label, objs) in &by_class {
        let want_target = *label == target_label;
        let mut n_pixels = 0usize;
        let mut correct_pixels = 0usize;
        let mut correct_objects = 0usize;
        let mut object_res = Vec::with_capacity(objs.len());
        let mut all_res = Vec::new();
        for o in objs {
            n_pixels += o.pixel_is_target.len();
            correct_pixels += o
                .pixel_is_target
                .iter()
                .filter(|&&t| t == want_target)
                .count();
            if o.object_is_target == want_target {
                correct_objects += 1;
            }
            let mean_re = o.pixel_res.iter().sum::<f64>() / o.pixel_res.len() as f64;
            object_res.push(mean_re);
            all_res.extend_from_slice(&o.pixel_res);
        }
        per_class.push(DetectionClassRates {
            label: label.to_string(),
            is_target_class: want_target,
            n_pixels,
            n_objects: objs.len(),
            pixel_pct: 100.0 * correct_pixels as f64 / n_pixels as f64,
            object_pct: 100.0 * correct_objects as f64 / objs.len() as f64,
            median_object_re: median(&object_res).unwrap_or(f64::NAN),
        });
        hist_groups.push((label.to_string(), all_res));
    }
    let histogram = re_histogram(&hist_groups, Some(threshold), n_bins)?;
    Ok(DetectionReport {
        target_label: target_label.to_string(),
        threshold,
        per_class,
        histogram,
    })
}

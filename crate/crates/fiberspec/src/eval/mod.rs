//! Pixel- and object-level scoring: confusion matrices, majority voting,
//! reconstruction-error histograms, and report rendering. Everything here
//! is a pure view over prediction records; reports carry no state of their
//! own and are recomputable from the persisted CSV files.

pub mod confusion;
pub mod histogram;
pub mod io;
pub mod report;
pub mod svg;
pub mod vote;

pub use confusion::{confusion, ConfusionMatrix};
pub use histogram::{median, re_histogram, ReHistogram, DEFAULT_BINS};
pub use io::{
    read_detections_csv, read_predictions_csv, write_detections_csv, write_predictions_csv,
    DetectionRecord,
};
pub use report::{
    accuracy_report, confusion_csv, detection_report, per_class_csv, ClassRates,
    DetectionClassRates, DetectionOutcome, DetectionReport, EvaluationReport, PixelRecord,
};
pub use svg::{confusion_heatmap_svg, histogram_svg};
pub use vote::{majority_vote, vote_object, ObjectPrediction};

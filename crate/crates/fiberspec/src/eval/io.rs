use std::path::Path;

use crate::error::{Error, Result};

use super::report::PixelRecord;

/// One detector decision row as persisted for detection runs; the class
/// columns are replaced by the reconstruction error.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub object_id: String,
    pub pixel_index: usize,
    pub true_label: String,
    pub is_target: bool,
    pub re: f64,
}

fn prob_headers(n_classes: usize) -> Vec<String> {
    (0..n_classes).map(|i| format!("p{i}")).collect()
}

/// Writes classification predictions as
/// `object_id,pixel_index,true_label,pred_label,p0..p{n-1}` with numbers at
/// full round-trip precision.
pub fn write_predictions_csv(
    path: &Path,
    records: &[PixelRecord],
    n_classes: usize,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "object_id".to_string(),
        "pixel_index".to_string(),
        "true_label".to_string(),
        "pred_label".to_string(),
    ];
    header.extend(prob_headers(n_classes));
    w.write_record(&header)?;
    for rec in records {
        if rec.probs.len() != n_classes {
            return Err(Error::shape(
                format!("probabilities of pixel {} in {:?}", rec.pixel_index, rec.object_id),
                n_classes,
                rec.probs.len(),
            ));
        }
        let mut row = vec![
            rec.object_id.clone(),
            rec.pixel_index.to_string(),
            rec.true_label.to_string(),
            rec.pred_label.to_string(),
        ];
        row.extend(rec.probs.iter().map(|p| p.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<PixelRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let fixed = ["object_id", "pixel_index", "true_label", "pred_label"];
    if headers.len() < fixed.len() + 1
        || headers.iter().take(4).ne(fixed)
        || headers
            .iter()
            .skip(4)
            .enumerate()
            .any(|(i, h)| h != format!("p{i}"))
    {
        return Err(Error::HeaderMismatch(format!(
            "predictions header {:?} does not match object_id,pixel_index,true_label,pred_label,p0..",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let n_classes = headers.len() - 4;
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let field = |j: usize| row.get(j).unwrap_or_default();
        let parse_usize = |j: usize, what: &str| {
            field(j).parse::<usize>().map_err(|_| {
                Error::Validation(format!("line {line}: {what} {:?} is not an integer", field(j)))
            })
        };
        let mut probs = Vec::with_capacity(n_classes);
        for j in 0..n_classes {
            let raw = field(4 + j);
            probs.push(raw.parse::<f32>().map_err(|_| {
                Error::Validation(format!("line {line}: probability {raw:?} is not a number"))
            })?);
        }
        out.push(PixelRecord {
            object_id: field(0).to_string(),
            pixel_index: parse_usize(1, "pixel_index")?,
            true_label: parse_usize(2, "true_label")?,
            pred_label: parse_usize(3, "pred_label")?,
            probs,
        });
    }
    Ok(out)
}

const DETECTION_HEADER: [&str; 5] = ["object_id", "pixel_index", "true_label", "pred_label", "re"];

/// Writes detection rows as `object_id,pixel_index,true_label,pred_label,re`
/// where pred_label is `target` or `non_target`.
pub fn write_detections_csv(path: &Path, records: &[DetectionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(DETECTION_HEADER)?;
    for rec in records {
        w.write_record([
            rec.object_id.as_str(),
            &rec.pixel_index.to_string(),
            &rec.true_label,
            if rec.is_target { "target" } else { "non_target" },
            &rec.re.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_detections_csv(path: &Path) -> Result<Vec<DetectionRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(DETECTION_HEADER) {
        return Err(Error::HeaderMismatch(format!(
            "detection header {:?} does not match {}",
            headers.iter().collect::<Vec<_>>(),
            DETECTION_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let field = |j: usize| row.get(j).unwrap_or_default();
        let is_target = match field(3) {
            "target" => true,
            "non_target" => false,
            other => {
                return Err(Error::Validation(format!(
                    "line {line}: pred_label {other:?} must be target or non_target"
                )))
            }
        };
        out.push(DetectionRecord {
            object_id: field(0).to_string(),
            pixel_index: field(1).parse().map_err(|_| {
                Error::Validation(format!("line {line}: pixel_index {:?} is not an integer", field(1)))
            })?,
            true_label: field(2).to_string(),
            is_target,
            re: field(4).parse().map_err(|_| {
                Error::Validation(format!("line {line}: re {:?} is not a number", field(4)))
            })?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::report::accuracy_report;
    use std::collections::BTreeMap;

    fn sample_records() -> Vec<PixelRecord> {
        vec![
            PixelRecord {
                object_id: "o1".into(),
                pixel_index: 0,
                true_label: 0,
                pred_label: 0,
                probs: vec![0.75, 0.2, 0.05],
            },
            PixelRecord {
                object_id: "o1".into(),
                pixel_index: 1,
                true_label: 0,
                pred_label: 1,
                probs: vec![0.3, 0.6, 0.1],
            },
            PixelRecord {
                object_id: "o2".into(),
                pixel_index: 0,
                true_label: 2,
                pred_label: 2,
                probs: vec![0.01, 0.01, 0.98],
            },
        ]
    }

    #[test]
    fn predictions_round_trip_and_reports_recompute() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("predictions.csv");
        let records = sample_records();
        write_predictions_csv(&path, &records, 3).unwrap();
        let back = read_predictions_csv(&path).unwrap();
        assert_eq!(back, records);

        let manifest: BTreeMap<String, usize> =
            [("o1".to_string(), 0), ("o2".to_string(), 2)].into();
        let labels: Vec<String> = vec!["A".into(), "B".into(), "C".into()];
        let a = accuracy_report(&manifest, &records, &labels).unwrap();
        let b = accuracy_report(&manifest, &back, &labels).unwrap();
        assert_eq!(a, b, "report numbers are recomputable from the file");
    }

    #[test]
    fn prediction_header_is_validated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "object_id,pixel_index,true_label,pred_label,q0\no,0,0,0,1.0\n")
            .unwrap();
        assert!(matches!(
            read_predictions_csv(&path),
            Err(Error::HeaderMismatch(_))
        ));
    }

    #[test]
    fn prediction_bad_number_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            "object_id,pixel_index,true_label,pred_label,p0\no,0,0,0,0.9\no,1,0,zero,0.5\n",
        )
        .unwrap();
        let err = read_predictions_csv(&path).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn mismatched_prob_width_rejected_on_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let records = sample_records();
        assert!(matches!(
            write_predictions_csv(&path, &records, 4),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn detections_round_trip_at_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("detections.csv");
        let records = vec![
            DetectionRecord {
                object_id: "c-1".into(),
                pixel_index: 0,
                true_label: "C1".into(),
                is_target: true,
                re: 0.012345678901234567,
            },
            DetectionRecord {
                object_id: "p-1".into(),
                pixel_index: 4,
                true_label: "CP1 9:1".into(),
                is_target: false,
                re: 1.5e-8,
            },
        ];
        write_detections_csv(&path, &records).unwrap();
        let back = read_detections_csv(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn detection_bad_decision_label_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(
            &path,
            "object_id,pixel_index,true_label,pred_label,re\no,0,C1,maybe,0.1\n",
        )
        .unwrap();
        assert!(matches!(
            read_detections_csv(&path),
            Err(Error::Validation(_))
        ));
    }
}

use std::path::Path;

use crate::error::{Error, Result};

/// One spectrum row tied to its object and class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSpectrum {
    pub object_id: String,
    pub label: String,
    pub values: Vec<f64>,
}

/// Writes rows as `object_id,label,c0..c{n-1}` with full-precision values.
pub fn write_spectra_csv(path: &Path, rows: &[LabeledSpectrum], n_channels: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["object_id".to_string(), "label".to_string()];
    header.extend((0..n_channels).map(|i| format!("c{i}")));
    w.write_record(&header)?;
    for (i, row) in rows.iter().enumerate() {
        if row.values.len() != n_channels {
            return Err(Error::shape(
                format!("spectrum row {i} ({})", row.object_id),
                n_channels,
                row.values.len(),
            ));
        }
        let mut rec = vec![row.object_id.clone(), row.label.clone()];
        rec.extend(row.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spectra_csv(path: &Path) -> Result<Vec<LabeledSpectrum>> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.len() < 3
        || headers.get(0) != Some("object_id")
        || headers.get(1) != Some("label")
        || headers
            .iter()
            .skip(2)
            .enumerate()
            .any(|(i, h)| h != format!("c{i}"))
    {
        return Err(Error::HeaderMismatch(format!(
            "spectra header must be object_id,label,c0..; got {:?}",
            headers.iter().take(5).collect::<Vec<_>>()
        )));
    }
    let n_channels = headers.len() - 2;
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let line = i + 2;
        if row.len() != n_channels + 2 {
            return Err(Error::shape(
                format!("line {line}"),
                format!("{} channels", n_channels),
                format!("{}", row.len().saturating_sub(2)),
            ));
        }
        let mut values = Vec::with_capacity(n_channels);
        for j in 0..n_channels {
            let raw = row.get(j + 2).unwrap_or_default();
            let v: f64 = raw.parse().map_err(|_| {
                Error::Validation(format!("line {line}: channel value {raw:?} is not a number"))
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("line {line} channel {j}"),
                });
            }
            values.push(v);
        }
        out.push(LabeledSpectrum {
            object_id: row.get(0).unwrap_or_default().to_string(),
            label: row.get(1).unwrap_or_default().to_string(),
            values,
        });
    }
    Ok(out)
}

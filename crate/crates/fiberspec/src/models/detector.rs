use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::checkpoint::{load_network, save_network};
use crate::nn::network::Network;
use crate::nn::tensor::Tensor;

use super::autoencoder::reconstruction_error;

/// Empirical quantile with linear interpolation between closest ranks:
/// on 1-indexed sorted values, h = (n-1)q + 1 and the result interpolates
/// between x[floor(h)] and x[ceil(h)].
pub fn fit_threshold(res: &[f64], quantile: f64) -> Result<f64> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::Validation(format!(
            "quantile {quantile} must lie strictly between 0 and 1"
        )));
    }
    if res.len() < 20 {
        return Err(Error::TooFewSamples(format!(
            "threshold fitting needs at least 20 reconstruction errors, got {}",
            res.len()
        )));
    }
    if let Some(bad) = res.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("reconstruction error {bad}"),
        });
    }
    let mut sorted = res.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let h = (n - 1) as f64 * quantile + 1.0;
    let lo = h.floor() as usize;
    let frac = h - h.floor();
    let lo_v = sorted[lo - 1];
    let hi_v = sorted[lo.min(n - 1)];
    Ok(lo_v + frac * (hi_v - lo_v))
}

/// Anomaly detector: an autoencoder checkpoint plus the reconstruction-error
/// threshold fitted on target-class training data.
#[derive(Debug)]
pub struct DetectorModel {
    net: Network<f32>,
    threshold: f64,
    quantile: f64,
    target_label: String,
}

impl DetectorModel {
    pub fn new(
        net: Network<f32>,
        threshold: f64,
        quantile: f64,
        target_label: impl Into<String>,
    ) -> Result<Self> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(Error::Validation(format!(
                "fitted threshold {threshold} must be positive and finite"
            )));
        }
        if !(quantile > 0.0 && quantile < 1.0) {
            return Err(Error::Validation(format!(
                "quantile {quantile} must lie strictly between 0 and 1"
            )));
        }
        Ok(Self {
            net,
            threshold,
            quantile,
            target_label: target_label.into(),
        })
    }

    pub fn net(&self) -> &Network<f32> {
        &self.net
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn quantile(&self) -> f64 {
        self.quantile
    }

    pub fn target_label(&self) -> &str {
        &self.target_label
    }

    /// Persists the autoencoder weights with the detector fields in the
    /// checkpoint metadata block.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut meta = BTreeMap::new();
        meta.insert("kind".to_string(), "detector".to_string());
        meta.insert("threshold".to_string(), self.threshold.to_string());
        meta.insert("quantile".to_string(), self.quantile.to_string());
        meta.insert("target_label".to_string(), self.target_label.clone());
        save_network(&self.net, &meta, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (net, meta) = load_network(path)?;
        let get = |key: &str| {
            meta.get(key)
                .ok_or_else(|| Error::HeaderMismatch(format!("detector checkpoint missing {key}")))
        };
        let threshold: f64 = get("threshold")?
            .parse()
            .map_err(|_| Error::HeaderMismatch("unparseable threshold".into()))?;
        let quantile: f64 = get("quantile")?
            .parse()
            .map_err(|_| Error::HeaderMismatch("unparseable quantile".into()))?;
        let target_label = get("target_label")?.clone();
        Self::new(net, threshold, quantile, target_label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectDetection {
    pub object_id: String,
    pub pixel_res: Vec<f64>,
    pub pixel_is_target: Vec<bool>,
    pub object_is_target: bool,
}

/// A pixel counts as target iff its reconstruction error does not exceed
/// the threshold; the boundary value itself is target.
pub fn pixel_decisions(res: &[f64], threshold: f64) -> Vec<bool> {
    res.iter().map(|&r| r <= threshold).collect()
}

/// Majority vote over pixel decisions; a tie sorts to non-target.
pub fn object_decision(pixel_is_target: &[bool]) -> Result<bool> {
    if pixel_is_target.is_empty() {
        return Err(Error::EmptyObject(
            "object has no pixel decisions to vote over".into(),
        ));
    }
    let target_votes = pixel_is_target.iter().filter(|&&t| t).count();
    Ok(2 * target_votes > pixel_is_target.len())
}

/// Runs the detector over objects given as `(object_id, [n, len] spectra)`.
pub fn detect(
    model: &DetectorModel,
    objects: &[(String, Tensor<f32>)],
) -> Result<Vec<ObjectDetection>> {
    let mut out = Vec::with_capacity(objects.len());
    for (object_id, spectra) in objects {
        if spectra.n_rows() == 0 {
            return Err(Error::EmptyObject(format!(
                "object {object_id} contains no spectra"
            )));
        }
        let pixel_res = reconstruction_error(&model.net, spectra)?;
        let pixel_is_target = pixel_decisions(&pixel_res, model.threshold);
        let object_is_target = object_decision(&pixel_is_target)?;
        out.push(ObjectDetection {
            object_id: object_id.clone(),
            pixel_res,
            pixel_is_target,
            object_is_target,
        });
    }
    Ok(out)
}

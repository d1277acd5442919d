use serde::{Deserialize, Serialize};

use super::cube::HyperCube;
use super::savgol::savgol_apply;
use super::smooth::{mean_smooth_masked, BlockSpectrum};
use super::snv::{snv, snv_values};
use super::spectrum::{Spectrum, Stage};
use crate::error::{Error, Result};

/// Knobs for the fixed preprocessing order SNV -> mean smoothing -> SG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub apply_snv: bool,
    pub smooth_block: usize,
    pub sg_window: usize,
    pub sg_polyorder: usize,
    pub sg_deriv: usize,
    pub dark_threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            apply_snv: true,
            smooth_block: 5,
            sg_window: 9,
            sg_polyorder: 2,
            sg_deriv: 1,
            dark_threshold: 0.05,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sg_window % 2 == 0 || self.sg_window <= self.sg_polyorder {
            return Err(Error::InvalidWindow {
                reason: format!(
                    "sg_window {} must be odd and greater than sg_polyorder {}",
                    self.sg_window, self.sg_polyorder
                ),
            });
        }
        if self.sg_deriv > self.sg_polyorder {
            return Err(Error::InvalidWindow {
                reason: format!(
                    "sg_deriv {} must not exceed sg_polyorder {}",
                    self.sg_deriv, self.sg_polyorder
                ),
            });
        }
        if self.smooth_block < 1 {
            return Err(Error::Validation("smooth_block must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub spectra: Vec<BlockSpectrum>,
    /// Pixels whose spectrum had no variance and could not be standardized.
    pub dropped_pixels: usize,
    /// Smoothing tiles lost because they contained a dropped pixel.
    pub dropped_blocks: usize,
}

/// SNV per pixel, mean over block tiles, then the SG filter per tile
/// spectrum. Zero-variance pixels are dropped and the tiles touching them
/// skipped; both counts are reported.
pub fn pipeline_apply(cube: &HyperCube, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    if cube.stage() != Stage::Reflectance {
        return Err(Error::Validation(format!(
            "pipeline input must be at the Reflectance stage, got {:?}",
            cube.stage()
        )));
    }

    let n_px = cube.lines() * cube.samples();
    let bands = cube.bands();
    let mut valid = vec![true; n_px];
    let mut dropped_pixels = 0usize;

    let snv_cube;
    let smooth_input = if cfg.apply_snv {
        let mut buf = vec![0.0; n_px * bands];
        for line in 0..cube.lines() {
            for sample in 0..cube.samples() {
                let idx = line * cube.samples() + sample;
                match snv_values(cube.pixel(line, sample)) {
                    Ok(v) => buf[idx * bands..(idx + 1) * bands].copy_from_slice(&v),
                    Err(Error::ZeroVariance) => {
                        valid[idx] = false;
                        dropped_pixels += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        snv_cube = HyperCube::new_unchecked(
            cube.lines(),
            cube.samples(),
            cube.grid().clone(),
            Stage::Snv,
            buf,
        );
        &snv_cube
    } else {
        cube
    };

    let (blocks, dropped_blocks) = mean_smooth_masked(smooth_input, cfg.smooth_block, &valid)?;
    let mut spectra = Vec::with_capacity(blocks.len());
    for b in blocks {
        spectra.push(BlockSpectrum {
            row: b.row,
            col: b.col,
            spectrum: savgol_apply(&b.spectrum, cfg)?,
        });
    }
    Ok(PipelineOutput {
        spectra,
        dropped_pixels,
        dropped_blocks,
    })
}

/// Preprocessing for spectra that arrive without spatial context (flat CSV
/// input): optional SNV, then the SG filter. Spatial smoothing needs a cube
/// and does not apply here.
pub fn preprocess_spectrum(x: &Spectrum, cfg: &PipelineConfig) -> Result<Spectrum> {
    cfg.validate()?;
    if cfg.apply_snv {
        savgol_apply(&snv(x)?, cfg)
    } else {
        savgol_apply(x, cfg)
    }
}

/// Keep/exclude decision for nearly totally absorbing samples, taken at the
/// reflectance stage before standardization erases the overall level.
/// Returns true to keep; exclusion needs mean reflectance strictly below
/// the threshold.
pub fn dark_sample_filter(x: &Spectrum, threshold: f64) -> bool {
    debug_assert_eq!(x.stage(), Stage::Reflectance);
    x.mean() >= threshold
}

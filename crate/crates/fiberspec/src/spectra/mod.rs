//! Calibration and chemometrics preprocessing: raw intensities to
//! reflectance, SNV standardization, spatial mean smoothing, and the
//! Savitzky-Golay derivative filter.

mod cube;
mod grid;
mod pipeline;
mod savgol;
mod smooth;
mod snv;
mod spectrum;

pub use cube::{calibrate_reflectance, HyperCube, Reference};
pub use grid::WavelengthGrid;
pub use pipeline::{
    dark_sample_filter, pipeline_apply, preprocess_spectrum, PipelineConfig, PipelineOutput,
};
pub use savgol::{savgol_apply, savgol_coefficients};
pub use smooth::{mean_smooth, BlockSpectrum};
pub use snv::{snv, snv_values};
pub use spectrum::{Spectrum, Stage};

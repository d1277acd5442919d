//! Near-infrared hyperspectral textile classification.
//!
//! The crate covers the full chain from raw camera intensities to evaluation
//! reports: reflectance calibration and chemometrics preprocessing
//! ([`spectra`]), a small deterministic neural-network engine ([`nn`]), the
//! textile classifier and autoencoder-based anomaly detector ([`models`]),
//! pixel- and object-level scoring ([`eval`]), dataset I/O plus a synthetic
//! generator ([`data`]), and a batch command-line surface ([`cli`]).

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod models;
pub mod nn;
pub mod spectra;

pub use error::{Error, Result};

use crate::error::{Error, Result};

/// Linearly spaced band centers, inclusive of both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct WavelengthGrid {
    start_nm: f64,
    end_nm: f64,
    n_bands: usize,
}

impl WavelengthGrid {
    pub fn new(start_nm: f64, end_nm: f64, n_bands: usize) -> Result<Self> {
        if n_bands < 3 {
            return Err(Error::Validation(format!(
                "wavelength grid needs at least 3 bands, got {n_bands}"
            )));
        }
        if !start_nm.is_finite() || !end_nm.is_finite() || start_nm >= end_nm {
            return Err(Error::Validation(format!(
                "wavelength range [{start_nm}, {end_nm}] nm is not increasing"
            )));
        }
        Ok(Self {
            start_nm,
            end_nm,
            n_bands,
        })
    }

    /// 990-1700 nm over 400 channels, the camera range this crate targets.
    pub fn nir_default() -> Self {
        Self {
            start_nm: 990.0,
            end_nm: 1700.0,
            n_bands: 400,
        }
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn start_nm(&self) -> f64 {
        self.start_nm
    }

    pub fn end_nm(&self) -> f64 {
        self.end_nm
    }

    pub fn spacing_nm(&self) -> f64 {
        (self.end_nm - self.start_nm) / (self.n_bands as f64 - 1.0)
    }

    pub fn center_nm(&self, band: usize) -> f64 {
        self.start_nm + band as f64 * self.spacing_nm()
    }

    pub fn centers_nm(&self) -> Vec<f64> {
        (0..self.n_bands).map(|b| self.center_nm(b)).collect()
    }

    /// Rebuilds a grid from an explicit center list, e.g. a cube header.
    /// Centers must be evenly spaced to within 1e-9 relative.
    pub fn from_centers(centers: &[f64]) -> Result<Self> {
        let grid = Self::new(
            *centers.first().unwrap_or(&0.0),
            *centers.last().unwrap_or(&0.0),
            centers.len(),
        )?;
        for (i, &c) in centers.iter().enumerate() {
            let expect = grid.center_nm(i);
            if (c - expect).abs() > 1e-9 * expect.abs().max(1.0) {
                return Err(Error::Validation(format!(
                    "band centers not evenly spaced: index {i} is {c}, expected {expect}"
                )));
            }
        }
        Ok(grid)
    }
}

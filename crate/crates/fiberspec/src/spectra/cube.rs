use super::grid::WavelengthGrid;
use super::spectrum::Stage;
use crate::error::{Error, Result};

/// Dense lines x samples x bands volume; pixel spectra are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    lines: usize,
    samples: usize,
    grid: WavelengthGrid,
    stage: Stage,
    data: Vec<f64>,
}

impl HyperCube {
    pub fn new(
        lines: usize,
        samples: usize,
        grid: WavelengthGrid,
        stage: Stage,
        data: Vec<f64>,
    ) -> Result<Self> {
        let want = lines * samples * grid.n_bands();
        if data.len() != want {
            return Err(Error::shape(
                "cube data length",
                format!("{lines}x{samples}x{} = {want}", grid.n_bands()),
                data.len(),
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("cube element {i}"),
            });
        }
        Ok(Self {
            lines,
            samples,
            grid,
            stage,
            data,
        })
    }

    /// Skips the finite scan; for internal buffers built from checked inputs.
    pub(crate) fn new_unchecked(
        lines: usize,
        samples: usize,
        grid: WavelengthGrid,
        stage: Stage,
        data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), lines * samples * grid.n_bands());
        Self {
            lines,
            samples,
            grid,
            stage,
            data,
        }
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn bands(&self) -> usize {
        self.grid.n_bands()
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, line: usize, sample: usize) -> &[f64] {
        let bands = self.bands();
        let at = (line * self.samples + sample) * bands;
        &self.data[at..at + bands]
    }
}

/// Dark or white calibration measurement. Pushbroom cameras record one
/// spectrum per sensor column; benchtop setups record a single spectrum.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// One spectrum applied to every column.
    PerChannel(Vec<f64>),
    /// One spectrum per sensor column, laid out [sample][band].
    PerColumn {
        samples: usize,
        bands: usize,
        data: Vec<f64>,
    },
}

impl Reference {
    pub fn per_channel(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("reference channel {i}"),
            });
        }
        Ok(Reference::PerChannel(values))
    }

    pub fn per_column(samples: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != samples * bands {
            return Err(Error::shape(
                "per-column reference length",
                samples * bands,
                data.len(),
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("reference element {i}"),
            });
        }
        Ok(Reference::PerColumn {
            samples,
            bands,
            data,
        })
    }

    pub fn bands(&self) -> usize {
        match self {
            Reference::PerChannel(v) => v.len(),
            Reference::PerColumn { bands, .. } => *bands,
        }
    }

    fn check_fits(&self, cube: &HyperCube, what: &str) -> Result<()> {
        if self.bands() != cube.bands() {
            return Err(Error::shape(
                format!("{what} reference bands"),
                cube.bands(),
                self.bands(),
            ));
        }
        if let Reference::PerColumn { samples, .. } = self {
            if *samples != cube.samples() {
                return Err(Error::shape(
                    format!("{what} reference columns"),
                    cube.samples(),
                    *samples,
                ));
            }
        }
        Ok(())
    }

    fn value(&self, sample: usize, band: usize) -> f64 {
        match self {
            Reference::PerChannel(v) => v[band],
            Reference::PerColumn { bands, data, .. } => data[sample * bands + band],
        }
    }
}

/// (raw - dark) / (white - dark), channel by channel.
pub fn calibrate_reflectance(
    raw: &HyperCube,
    dark: &Reference,
    white: &Reference,
) -> Result<HyperCube> {
    raw.stage().check_before(Stage::Reflectance, "calibration")?;
    dark.check_fits(raw, "dark")?;
    white.check_fits(raw, "white")?;

    let bands = raw.bands();
    // Denominators depend only on (column, band); precompute and vet them all
    // before touching the cube so a bad channel is reported deterministically.
    let mut denom = vec![0.0; raw.samples() * bands];
    for s in 0..raw.samples() {
        for c in 0..bands {
            let d = white.value(s, c) - dark.value(s, c);
            if d.abs() < 1e-12 {
                return Err(Error::ZeroDenominator { channel: c });
            }
            denom[s * bands + c] = d;
        }
    }

    let mut out = Vec::with_capacity(raw.data().len());
    for line in 0..raw.lines() {
        for s in 0..raw.samples() {
            let px = raw.pixel(line, s);
            for c in 0..bands {
                out.push((px[c] - dark.value(s, c)) / denom[s * bands + c]);
            }
        }
    }
    HyperCube::new(
        raw.lines(),
        raw.samples(),
        raw.grid().clone(),
        Stage::Reflectance,
        out,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid3() -> WavelengthGrid {
        WavelengthGrid::new(1000.0, 1002.0, 3).unwrap()
    }

    fn cube_from_fn(lines: usize, samples: usize, f: impl Fn(usize, usize, usize) -> f64) -> HyperCube {
        let g = grid3();
        let mut data = Vec::new();
        for l in 0..lines {
            for s in 0..samples {
                for b in 0..g.n_bands() {
                    data.push(f(l, s, b));
                }
            }
        }
        HyperCube::new(lines, samples, g, Stage::Raw, data).unwrap()
    }

    #[test]
    fn raw_equal_to_dark_gives_zero() {
        let dark = Reference::per_channel(vec![10.0, 20.0, 30.0]).unwrap();
        let white = Reference::per_channel(vec![110.0, 120.0, 130.0]).unwrap();
        let raw = cube_from_fn(2, 2, |_, _, b| [10.0, 20.0, 30.0][b]);
        let refl = calibrate_reflectance(&raw, &dark, &white).unwrap();
        assert_eq!(refl.stage(), Stage::Reflectance);
        assert!(refl.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn raw_equal_to_white_gives_one() {
        let dark = Reference::per_channel(vec![10.0, 20.0, 30.0]).unwrap();
        let white = Reference::per_channel(vec![110.0, 120.0, 130.0]).unwrap();
        let raw = cube_from_fn(2, 2, |_, _, b| [110.0, 120.0, 130.0][b]);
        let refl = calibrate_reflectance(&raw, &dark, &white).unwrap();
        assert!(refl.data().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn midpoint_gives_half() {
        let dark = Reference::per_channel(vec![10.0, 20.0, 30.0]).unwrap();
        let white = Reference::per_channel(vec![110.0, 120.0, 130.0]).unwrap();
        let raw = cube_from_fn(1, 3, |_, _, b| [60.0, 70.0, 80.0][b]);
        let refl = calibrate_reflectance(&raw, &dark, &white).unwrap();
        assert!(refl.data().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn per_column_references() {
        // column 0 spans 0..100, column 1 spans 0..200
        let dark = Reference::per_column(2, 3, vec![0.0; 6]).unwrap();
        let white =
            Reference::per_column(2, 3, vec![100.0, 100.0, 100.0, 200.0, 200.0, 200.0]).unwrap();
        let raw = cube_from_fn(1, 2, |_, _, _| 50.0);
        let refl = calibrate_reflectance(&raw, &dark, &white).unwrap();
        assert!((refl.pixel(0, 0)[0] - 0.5).abs() < 1e-15);
        assert!((refl.pixel(0, 1)[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn coincident_references_rejected() {
        let dark = Reference::per_channel(vec![10.0, 20.0, 30.0]).unwrap();
        let white = Reference::per_channel(vec![110.0, 20.0 + 5e-13, 130.0]).unwrap();
        let raw = cube_from_fn(1, 1, |_, _, _| 1.0);
        match calibrate_reflectance(&raw, &dark, &white) {
            Err(Error::ZeroDenominator { channel }) => assert_eq!(channel, 1),
            other => panic!("expected ZeroDenominator, got {other:?}"),
        }
    }

    #[test]
    fn band_count_disagreement_rejected() {
        let dark = Reference::per_channel(vec![0.0; 4]).unwrap();
        let white = Reference::per_channel(vec![1.0; 4]).unwrap();
        let raw = cube_from_fn(1, 1, |_, _, _| 0.5);
        assert!(matches!(
            calibrate_reflectance(&raw, &dark, &white),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn calibrating_twice_rejected() {
        let dark = Reference::per_channel(vec![0.0; 3]).unwrap();
        let white = Reference::per_channel(vec![1.0; 3]).unwrap();
        let raw = cube_from_fn(1, 1, |_, _, _| 0.5);
        let refl = calibrate_reflectance(&raw, &dark, &white).unwrap();
        assert!(calibrate_reflectance(&refl, &dark, &white).is_err());
    }

    proptest! {
        // Remapping raw -> raw*g + dark*(1-g) rescales reflectance by g.
        #[test]
        fn affine_equivariance(
            raw_vals in proptest::collection::vec(0.1f64..0.9, 12),
            g in 0.2f64..3.0,
        ) {
            let dark = Reference::per_channel(vec![0.05, 0.1, 0.02]).unwrap();
            let white = Reference::per_channel(vec![1.1, 0.9, 1.3]).unwrap();
            let grid = grid3();
            let base = HyperCube::new(2, 2, grid.clone(), Stage::Raw, raw_vals.clone()).unwrap();
            let mapped: Vec<f64> = raw_vals
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let d = match &dark { Reference::PerChannel(d) => d[i % 3], _ => unreachable!() };
                    v * g + d * (1.0 - g)
                })
                .collect();
            let scaled = HyperCube::new(2, 2, grid, Stage::Raw, mapped).unwrap();
            let a = calibrate_reflectance(&base, &dark, &white).unwrap();
            let b = calibrate_reflectance(&scaled, &dark, &white).unwrap();
            for (x, y) in a.data().iter().zip(b.data()) {
                prop_assert!((x * g - y).abs() < 1e-9);
            }
        }
    }
}

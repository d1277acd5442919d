use super::cube::HyperCube;
use super::spectrum::{Spectrum, Stage};
use crate::error::{Error, Result};

/// A smoothed spectrum tagged with its tile position on the block grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpectrum {
    pub row: usize,
    pub col: usize,
    pub spectrum: Spectrum,
}

/// Channel-wise mean over non-overlapping block x block tiles anchored at
/// the top-left corner. Partial tiles at the right/bottom edges are
/// discarded rather than padded.
pub fn mean_smooth(cube: &HyperCube, block: usize) -> Result<Vec<BlockSpectrum>> {
    let valid = vec![true; cube.lines() * cube.samples()];
    let (out, _) = mean_smooth_masked(cube, block, &valid)?;
    Ok(out)
}

/// Like [`mean_smooth`] but skips tiles containing any masked-out pixel,
/// returning how many tiles were dropped that way.
pub(crate) fn mean_smooth_masked(
    cube: &HyperCube,
    block: usize,
    valid: &[bool],
) -> Result<(Vec<BlockSpectrum>, usize)> {
    if block < 1 {
        return Err(Error::Validation("smoothing block must be >= 1".into()));
    }
    cube.stage().check_before(Stage::Smoothed, "mean smoothing")?;
    let rows = cube.lines() / block;
    let cols = cube.samples() / block;
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyOutput {
            lines: cube.lines(),
            samples: cube.samples(),
            block,
        });
    }

    let bands = cube.bands();
    let weight = 1.0 / (block * block) as f64;
    let mut out = Vec::with_capacity(rows * cols);
    let mut dropped = 0usize;
    for r in 0..rows {
        for c in 0..cols {
            let tile_ok = (0..block).all(|dl| {
                (0..block).all(|ds| valid[(r * block + dl) * cube.samples() + c * block + ds])
            });
            if !tile_ok {
                dropped += 1;
                continue;
            }
            let mut acc = vec![0.0; bands];
            for dl in 0..block {
                for ds in 0..block {
                    let px = cube.pixel(r * block + dl, c * block + ds);
                    for (a, v) in acc.iter_mut().zip(px) {
                        *a += v;
                    }
                }
            }
            for a in acc.iter_mut() {
                *a *= weight;
            }
            out.push(BlockSpectrum {
                row: r,
                col: c,
                spectrum: Spectrum::new(acc, Stage::Smoothed)?,
            });
        }
    }
    Ok((out, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::grid::WavelengthGrid;

    fn cube_from_fn(
        lines: usize,
        samples: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> HyperCube {
        let g = WavelengthGrid::new(1000.0, 1002.0, 3).unwrap();
        let mut data = Vec::new();
        for l in 0..lines {
            for s in 0..samples {
                for b in 0..3 {
                    data.push(f(l, s, b));
                }
            }
        }
        HyperCube::new(lines, samples, g, Stage::Reflectance, data).unwrap()
    }

    #[test]
    fn identical_spectra_pass_through() {
        let cube = cube_from_fn(5, 5, |_, _, b| b as f64 + 0.5);
        let out = mean_smooth(&cube, 5).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].row, 0);
        assert_eq!(out[0].col, 0);
        assert_eq!(out[0].spectrum.stage(), Stage::Smoothed);
        for (b, v) in out[0].spectrum.values().iter().enumerate() {
            assert!((v - (b as f64 + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn ten_by_ten_block5_yields_four_tiles() {
        let cube = cube_from_fn(10, 10, |l, s, _| (l * 10 + s) as f64);
        let out = mean_smooth(&cube, 5).unwrap();
        let coords: Vec<(usize, usize)> = out.iter().map(|b| (b.row, b.col)).collect();
        assert_eq!(coords, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn two_by_two_tile_averages() {
        let cube = cube_from_fn(2, 2, |l, s, _| if (l + s) % 2 == 0 { 0.0 } else { 2.0 });
        let out = mean_smooth(&cube, 2).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].spectrum.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn partial_edge_tiles_discarded() {
        let cube = cube_from_fn(11, 7, |_, _, _| 1.0);
        let out = mean_smooth(&cube, 5).unwrap();
        assert_eq!(out.len(), 2); // floor(11/5) * floor(7/5)
    }

    #[test]
    fn plane_smaller_than_block_is_empty_output() {
        let cube = cube_from_fn(4, 10, |_, _, _| 1.0);
        assert!(matches!(
            mean_smooth(&cube, 5),
            Err(Error::EmptyOutput {
                lines: 4,
                samples: 10,
                block: 5
            })
        ));
    }

    #[test]
    fn masked_tiles_are_dropped_and_counted() {
        let cube = cube_from_fn(4, 4, |l, s, _| (l + s) as f64);
        let mut valid = vec![true; 16];
        valid[0] = false; // kills tile (0, 0)
        let (out, dropped) = mean_smooth_masked(&cube, 2, &valid).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|b| !(b.row == 0 && b.col == 0)));
    }
}

use super::pipeline::PipelineConfig;
use super::spectrum::{Spectrum, Stage};
use crate::error::{Error, Result};

fn check_params(window: usize, polyorder: usize, deriv: usize) -> Result<()> {
    if window % 2 == 0 || window == 0 {
        return Err(Error::InvalidWindow {
            reason: format!("window {window} must be odd"),
        });
    }
    if polyorder >= window {
        return Err(Error::InvalidWindow {
            reason: format!("polyorder {polyorder} must be smaller than window {window}"),
        });
    }
    if deriv > polyorder {
        return Err(Error::InvalidWindow {
            reason: format!("deriv {deriv} must not exceed polyorder {polyorder}"),
        });
    }
    Ok(())
}

/// Gaussian elimination with partial pivoting; the Gram matrices solved here
/// are small (polyorder+1 square) and symmetric positive definite.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Weights of the linear functional "deriv-th derivative of the local
/// least-squares polynomial, evaluated at offset t from the window center".
/// t = 0 gives the classic convolution coefficients; off-center t values
/// handle the first and last half-window channels.
fn weights_at(window: usize, polyorder: usize, deriv: usize, t: f64) -> Vec<f64> {
    let h = (window / 2) as isize;
    let m = polyorder + 1;
    let mut gram = vec![vec![0.0; m]; m];
    for p in -h..=h {
        let p = p as f64;
        let mut pj = 1.0;
        for j in 0..m {
            let mut pjk = pj;
            for k in 0..m {
                gram[j][k] += pjk;
                pjk *= p;
            }
            pj *= p;
        }
    }
    // c[j] = d^deriv/dt^deriv of t^j, evaluated at t
    let mut c = vec![0.0; m];
    for (j, cj) in c.iter_mut().enumerate().skip(deriv) {
        let mut fall = 1.0;
        for q in 0..deriv {
            fall *= (j - q) as f64;
        }
        *cj = fall * t.powi((j - deriv) as i32);
    }
    let beta = solve(gram, c);
    (-h..=h)
        .map(|p| {
            let p = p as f64;
            let mut acc = 0.0;
            let mut pj = 1.0;
            for bj in &beta {
                acc += bj * pj;
                pj *= p;
            }
            acc
        })
        .collect()
}

/// Least-squares convolution weights over `window` consecutive channels:
/// fit a degree-`polyorder` polynomial and read off the `deriv`-th
/// derivative at the center. Derivative is per channel index.
pub fn savgol_coefficients(window: usize, polyorder: usize, deriv: usize) -> Result<Vec<f64>> {
    check_params(window, polyorder, deriv)?;
    Ok(weights_at(window, polyorder, deriv, 0.0))
}

/// Length-preserving filter: interior channels use the centered weights,
/// boundary channels re-evaluate the edge window's polynomial at the
/// off-center position. Exact for polynomials of degree <= polyorder.
pub fn savgol_apply(x: &Spectrum, cfg: &PipelineConfig) -> Result<Spectrum> {
    x.stage().check_before(Stage::Derivative, "savgol filter")?;
    let out = savgol_apply_values(x.values(), cfg.sg_window, cfg.sg_polyorder, cfg.sg_deriv)?;
    Spectrum::new(out, Stage::Derivative)
}

pub(crate) fn savgol_apply_values(
    x: &[f64],
    window: usize,
    polyorder: usize,
    deriv: usize,
) -> Result<Vec<f64>> {
    check_params(window, polyorder, deriv)?;
    let n = x.len();
    if n < window {
        return Err(Error::TooShort { len: n, window });
    }
    let h = window / 2;
    let center = weights_at(window, polyorder, deriv, 0.0);
    let mut out = vec![0.0; n];
    for i in h..n - h {
        let mut acc = 0.0;
        for (k, w) in center.iter().enumerate() {
            acc += w * x[i - h + k];
        }
        out[i] = acc;
    }
    for i in 0..h {
        let w = weights_at(window, polyorder, deriv, i as f64 - h as f64);
        out[i] = w.iter().zip(&x[..window]).map(|(w, v)| w * v).sum();
    }
    for i in n - h..n {
        let t = i as f64 - (n - 1 - h) as f64;
        let w = weights_at(window, polyorder, deriv, t);
        out[i] = w.iter().zip(&x[n - window..]).map(|(w, v)| w * v).sum();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn window5_order2_first_derivative_coefficients() {
        let w = savgol_coefficients(5, 2, 1).unwrap();
        for (got, want) in w.iter().zip([-0.2, -0.1, 0.0, 0.1, 0.2]) {
            assert!((got - want).abs() < 1e-12, "{w:?}");
        }
    }

    #[test]
    fn window3_order1_first_derivative_coefficients() {
        let w = savgol_coefficients(3, 1, 1).unwrap();
        for (got, want) in w.iter().zip([-0.5, 0.0, 0.5]) {
            assert!((got - want).abs() < 1e-12, "{w:?}");
        }
    }

    #[test]
    fn weight_sums() {
        for window in [3usize, 5, 7, 9, 11, 13, 15] {
            for polyorder in 1..window.min(5) {
                for deriv in 0..=polyorder.min(3) {
                    let w = savgol_coefficients(window, polyorder, deriv).unwrap();
                    let sum: f64 = w.iter().sum();
                    let want = if deriv == 0 { 1.0 } else { 0.0 };
                    assert!(
                        (sum - want).abs() < 1e-12,
                        "window {window} order {polyorder} deriv {deriv}: sum {sum}"
                    );
                }
            }
        }
    }

    #[test]
    fn bad_params_rejected() {
        assert!(savgol_coefficients(4, 2, 1).is_err());
        assert!(savgol_coefficients(5, 5, 1).is_err());
        assert!(savgol_coefficients(5, 2, 3).is_err());
    }

    #[test]
    fn short_input_rejected() {
        let x = vec![1.0; 8];
        assert!(matches!(
            savgol_apply_values(&x, 9, 2, 1),
            Err(Error::TooShort { len: 8, window: 9 })
        ));
    }

    #[test]
    fn constant_input_has_zero_derivative() {
        let x = vec![7.0; 50];
        let out = savgol_apply_values(&x, 5, 2, 1).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn linear_input_everywhere_including_edges() {
        let x: Vec<f64> = (0..40).map(|i| 3.0 * i as f64).collect();
        let out = savgol_apply_values(&x, 5, 2, 1).unwrap();
        for (i, v) in out.iter().enumerate() {
            assert!((v - 3.0).abs() < 1e-9, "channel {i}: {v}");
        }
    }

    #[test]
    fn quadratic_input_recovers_analytic_derivative_on_400_channels() {
        let x: Vec<f64> = (0..400).map(|i| (i * i) as f64).collect();
        let out = savgol_apply_values(&x, 5, 2, 1).unwrap();
        for (i, v) in out.iter().enumerate() {
            assert!((v - 2.0 * i as f64).abs() < 1e-9, "channel {i}: {v}");
        }
    }

    #[test]
    fn smoothing_preserves_polynomials_exactly() {
        // deriv 0 on a degree-2 input reproduces the input
        let x: Vec<f64> = (0..60).map(|i| 0.3 * (i * i) as f64 - 2.0 * i as f64 + 5.0).collect();
        let out = savgol_apply_values(&x, 9, 2, 0).unwrap();
        for (got, want) in out.iter().zip(&x) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    // Independent oracle: fit the degree-2 polynomial through explicit 3x3
    // normal equations solved by Cramer's rule, then differentiate the fit.
    fn cramer_fit_deriv1(pos: &[f64], y: &[f64], t: f64) -> f64 {
        let (mut s0, mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
        for (&p, &v) in pos.iter().zip(y) {
            s0 += 1.0;
            s1 += p;
            s2 += p * p;
            s3 += p * p * p;
            s4 += p * p * p * p;
            b0 += v;
            b1 += p * v;
            b2 += p * p * v;
        }
        let det3 = |a: [f64; 9]| {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        };
        let d = det3([s0, s1, s2, s1, s2, s3, s2, s3, s4]);
        let c1 = det3([s0, b0, s2, s1, b1, s3, s2, b2, s4]) / d;
        let c2 = det3([s0, s1, b0, s1, s2, b1, s2, s3, b2]) / d;
        c1 + 2.0 * c2 * t
    }

    #[test]
    fn full_filter_matches_least_squares_oracle_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let x: Vec<f64> = (0..24).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let out = savgol_apply_values(&x, 5, 2, 1).unwrap();
            let n = x.len();
            for i in 0..n {
                let (lo, t) = if i < 2 {
                    (0, i as f64 - 2.0)
                } else if i >= n - 2 {
                    (n - 5, i as f64 - (n - 3) as f64)
                } else {
                    (i - 2, 0.0)
                };
                let pos: Vec<f64> = (-2..=2).map(|p| p as f64).collect();
                let want = cramer_fit_deriv1(&pos, &x[lo..lo + 5], t);
                assert!(
                    (out[i] - want).abs() < 1e-9,
                    "channel {i}: {} vs oracle {want}",
                    out[i]
                );
            }
        }
    }
}

use nalgebra::{DMatrix, DVector};

use super::dataset::mean;
use crate::error::{Error, Result};

/// Least-squares fit of `y` on an intercept plus the given regressors.
#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    /// One slope per regressor, in input order.
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Ordinary least squares with an intercept, solved by Householder QR on the
/// centred design.
pub fn ols_residuals(y: &[f64], xs: &[&[f64]]) -> Result<OlsFit> {
    let n = y.len();
    if n == 0 {
        return Err(Error::input("regression on an empty sample"));
    }
    if let Some(bad) = xs.iter().position(|x| x.len() != n) {
        return Err(Error::input(format!(
            "regressor {bad} has {} rows, response has {n}",
            xs[bad].len()
        )));
    }
    let k = xs.len();
    let y_mean = mean(y);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    if k == 0 {
        return Ok(OlsFit {
            intercept: y_mean,
            coefficients: Vec::new(),
            residuals: yc.as_slice().to_vec(),
        });
    }
    if n <= k {
        return Err(Error::Numerical(format!("{k} regressors need more than {n} observations")));
    }
    let x_means: Vec<f64> = xs.iter().map(|x| mean(x)).collect();
    let design = DMatrix::from_fn(n, k, |r, c| xs[c][r] - x_means[c]);
    let scale = design
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max);

    let qr = design.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..k).map(|d| r[(d, d)].abs()).collect();
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let max = diag.iter().copied().fold(0.0f64, f64::max);
    if scale == 0.0 || min <= 1e-10 * scale {
        return Err(Error::Numerical(format!(
            "singular design: {k} regressors, R diagonal spans [{min:.3e}, {max:.3e}] (column scale {scale:.3e})"
        )));
    }
    let qty = qr.q().tr_mul(&yc);
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;

    let fitted = &design * &beta;
    let residuals: Vec<f64> = yc.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let intercept = y_mean - beta.iter().zip(&x_means).map(|(b, m)| b * m).sum::<f64>();
    Ok(OlsFit {
        intercept,
        coefficients: beta.as_slice().to_vec(),
        residuals,
    })
}

//! Error metrics against a reference covariance, and covariance to
//! correlation conversion.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest overshoot past `[-1, 1]` that is treated as rounding noise.
pub const CORR_CLAMP_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRecord {
    pub dataset: String,
    pub method: String,
    pub rate: f64,
    pub repeat: usize,
    pub seed: u64,
    pub e: f64,
    pub r: f64,
    /// Percent improvement of this row's `r` over the DPER row of the same
    /// run; only set for DPERC rows.
    pub p: Option<f64>,
}

fn check_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch {
            expected: b.shape(),
            found: a.shape(),
        });
    }
    Ok(())
}

/// Frobenius norm of the difference divided by the number of entries `p^2`.
pub fn error_e(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    check_shape(est, truth)?;
    let p = est.nrows();
    if p == 0 {
        return Ok(0.0);
    }
    Ok((est - truth).norm() / (p * p) as f64)
}

/// Frobenius norm of the off-diagonal part of the difference.
pub fn error_r(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    check_shape(est, truth)?;
    let mut d = est - truth;
    d.fill_diagonal(0.0);
    Ok(d.norm())
}

/// `100 * (1 - r_dperc / r_dper)`.
pub fn improvement_p(r_dperc: f64, r_dper: f64) -> Result<f64> {
    if !(r_dper > 0.0) {
        return Err(Error::ZeroReference);
    }
    Ok(100.0 * (1.0 - r_dperc / r_dper))
}

/// `R_ij = s_ij / sqrt(s_ii s_jj)` with an exact unit diagonal.
pub fn cov_to_corr(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = sigma.nrows();
    if p != sigma.ncols() {
        return Err(Error::ShapeMismatch {
            expected: (p, p),
            found: sigma.shape(),
        });
    }
    for i in 0..p {
        let v = sigma[(i, i)];
        if !(v > 0.0) {
            return Err(Error::NonPositiveDiagonal { index: i, value: v });
        }
    }
    let sd: Vec<f64> = (0..p).map(|i| sigma[(i, i)].sqrt()).collect();
    Ok(DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            return 1.0;
        }
        let r = sigma[(i, j)] / (sd[i] * sd[j]);
        if r.abs() <= 1.0 {
            r
        } else if r.abs() - 1.0 <= CORR_CLAMP_TOLERANCE {
            r.signum()
        } else {
            log::warn!("correlation ({i}, {j}) = {r} lies outside [-1, 1]");
            r
        }
    }))
}

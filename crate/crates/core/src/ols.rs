//! Least squares through a Householder QR of the design matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) struct OlsFit {
    pub coef: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
    /// (XᵀX)⁻¹, the unscaled coefficient covariance.
    pub xtx_inv: DMatrix<f64>,
}

pub(crate) fn ols(x: DMatrix<f64>, y: &DVector<f64>, context: &'static str) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if n < k {
        return Err(Error::RankDeficient(context));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let col_scale = (0..k)
        .map(|j| x.column(j).norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    if max_diag == 0.0 || (0..k).any(|i| r[(i, i)].abs() <= 1e-10 * col_scale) {
        return Err(Error::RankDeficient(context));
    }
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient(context))?;
    let residuals = y - &x * &coef;
    let rss = residuals.norm_squared();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(Error::RankDeficient(context))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(OlsFit {
        coef,
        residuals,
        rss,
        xtx_inv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let f = ols(x, &y, "test").unwrap();
        assert!((f.coef[0] - 1.0).abs() < 1e-12 && (f.coef[1] - 2.0).abs() < 1e-12);
        assert!(f.rss < 1e-20);
    }

    #[test]
    fn collinear_columns_rejected() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(ols(x, &y, "test"), Err(Error::RankDeficient(_))));
    }
}

use crate::error::{Error, Result};

/// `Σ(e_t − e_{t−1})² / Σe_t²`, in `[0, 4]`.
pub fn durbin_watson(residuals: &[f64]) -> Result<f64> {
    if residuals.len() < 2 {
        return Err(Error::InsufficientData {
            what: "Durbin–Watson statistic",
            needed: 2,
            got: residuals.len(),
        });
    }
    if let Some(index) = residuals.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let den: f64 = residuals.iter().map(|e| e * e).sum();
    if den == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let num: f64 = residuals.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok((num / den).clamp(0.0, 4.0))
}

//! Ordinary least-squares line fits.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("a fit needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("abscissae and ordinates differ in length")]
    LengthMismatch,
    #[error("non-finite or non-positive input at index {0}")]
    BadValue(usize),
    #[error("all abscissae coincide")]
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit, FitError> {
    if x.len() != y.len() {
        return Err(FitError::LengthMismatch);
    }
    if x.len() < 2 {
        return Err(FitError::TooFewPoints(x.len()));
    }
    if let Some(i) = x.iter().zip(y).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(FitError::BadValue(i));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitError::Degenerate);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Fits `log y = a + b log x`; `b` is the power-law exponent.
pub fn power_law(x: &[f64], y: &[f64]) -> Result<LinearFit, FitError> {
    if let Some(i) = x.iter().zip(y).position(|(a, b)| !(*a > 0.0) || !(*b > 0.0)) {
        return Err(FitError::BadValue(i));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let f = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn recovers_power_law() {
        let x = [8.0, 16.0, 32.0, 64.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(2.5)).collect();
        assert!((power_law(&x, &y).unwrap().slope - 2.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert_eq!(linear_fit(&[1.0], &[1.0]), Err(FitError::TooFewPoints(1)));
        assert_eq!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]), Err(FitError::Degenerate));
        assert_eq!(power_law(&[1.0, 2.0], &[1.0, 0.0]), Err(FitError::BadValue(1)));
    }
}

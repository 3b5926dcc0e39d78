//! Ordinary least squares for exponent extraction.

use serde::Serialize;

use crate::error::{GeoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (0 for an exact two-point fit).
    pub slope_se: f64,
    /// Root mean square residual.
    pub residual: f64,
}

/// Least-squares line through `(xs[i], ys[i])`; needs at least two distinct
/// abscissae.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(GeoError::InvalidArgument("fit inputs of unequal length".into()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(GeoError::InsufficientData(format!("{n} points, need at least 2")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(GeoError::InsufficientData("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_se = if n > 2 { (rss / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LinearFit { slope, intercept, slope_se, residual: (rss / nf).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x - 1.0).collect();
        let f = least_squares(&xs, &ys).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-14);
        assert!((f.intercept + 1.0).abs() < 1e-14);
        assert!(f.slope_se < 1e-14 && f.residual < 1e-14);
    }

    #[test]
    fn standard_error_matches_textbook_formula() {
        // y = x + (+1, −1, −1, +1): rss = 4 − 0 (orthogonal to x), sxx = 5
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 0.0, 1.0, 4.0];
        let f = least_squares(&xs, &ys).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-14);
        assert!((f.slope_se - (4.0f64 / 2.0 / 5.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(least_squares(&[1.0], &[2.0]), Err(GeoError::InsufficientData(_))));
        assert!(matches!(least_squares(&[1.0, 1.0], &[2.0, 3.0]), Err(GeoError::InsufficientData(_))));
    }
}

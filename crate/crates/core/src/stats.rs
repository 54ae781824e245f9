//! Small regression helpers shared by the profile and criterion code.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero when the fit is exact or has two points.
    pub slope_std_error: f64,
    pub points: usize,
}

/// Ordinary least squares of `y` on `x`. Returns `None` for fewer than two
/// points or a degenerate `x` spread.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let weights = vec![1.0; x.len()];
    fit_line_weighted(x, y, &weights)
}

/// Weighted least squares with weights `w_i` (inverse variances).
pub fn fit_line_weighted(x: &[f64], y: &[f64], w: &[f64]) -> Option<LineFit> {
    assert_eq!(x.len(), y.len());
    assert_eq!(x.len(), w.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += w[i] * (x[i] - mx).powi(2);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    if sxx <= 0.0 || !sxx.is_finite() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_std_error = if n > 2 {
        let rss: f64 = (0..n)
            .map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2))
            .sum();
        (rss / (n as f64 - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        slope_std_error,
        points: n,
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let fit = fit_line(&x, &y).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!(fit.slope_std_error < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_line(&[1.0], &[2.0]).is_none());
        assert!(fit_line(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }
}

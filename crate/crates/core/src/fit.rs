//! Least-squares slope fits used by the estimator and the diagnostics.

/// Slope of the least-squares line through `(xs, ys)`. `None` when fewer
/// than two points or the abscissae are degenerate.
pub fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Slope of `log y` against `log x`; pairs with non-positive entries are
/// dropped first.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    slope(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_law() {
        let xs: Vec<f64> = (1..8).map(|i| 2.0f64.powi(i)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-2.5)).collect();
        let s = log_log_slope(&xs, &ys).unwrap();
        assert!((s + 2.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_yield_none() {
        assert!(slope(&[1.0], &[2.0]).is_none());
        assert!(slope(&[3.0, 3.0], &[1.0, 2.0]).is_none());
        assert!(log_log_slope(&[1.0, -1.0], &[1.0, 1.0]).is_none());
    }
}

//! Small fitting helpers shared by the convergence diagnostics.

/// Least-squares line `y = intercept + slope x`; `None` for fewer than two
/// distinct abscissae.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Geometric rate and prefactor `(C, gamma)` of `series[n] ~ C gamma^n`,
/// fitted on `log series` over the levels `first..series.len()`. Zero
/// entries are clamped to `floor` before taking logarithms.
pub fn geometric_fit(series: &[f64], first: usize, floor: f64) -> Option<(f64, f64)> {
    let xs: Vec<f64> = (first..series.len()).map(|n| n as f64).collect();
    let ys: Vec<f64> = series[first.min(series.len())..]
        .iter()
        .map(|v| v.max(floor).ln())
        .collect();
    linear_fit(&xs, &ys).map(|(b, m)| (b.exp(), m.exp()))
}

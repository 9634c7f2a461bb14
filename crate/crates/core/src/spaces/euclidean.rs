use super::BarycenterProblem;

pub(super) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(super) fn geodesic(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Plain weighted sum `sum_j w_j x_j`, the exact minimizer.
pub(super) fn barycenter(prob: &BarycenterProblem) -> Vec<f64> {
    let dim = prob.descriptor().dim;
    let mut acc = vec![0.0; dim];
    for (p, w) in prob.points().iter().zip(prob.weights()) {
        let v = p.as_euclidean().expect("checked descriptor");
        for (a, x) in acc.iter_mut().zip(v) {
            *a += w * x;
        }
    }
    acc
}

pub(super) fn residual(prob: &BarycenterProblem, y: &[f64]) -> f64 {
    let mut g = vec![0.0; y.len()];
    for (p, w) in prob.points().iter().zip(prob.weights()) {
        let v = p.as_euclidean().expect("checked descriptor");
        for ((gk, xk), yk) in g.iter_mut().zip(v).zip(y) {
            *gk += w * (xk - yk);
        }
    }
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

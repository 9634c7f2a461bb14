//! Symmetric positive definite matrices with the affine-invariant metric
//! `d(A, B) = |log(A^{-1/2} B A^{-1/2})|_F`.
//!
//! Tangent computations are done in whitened coordinates at the base point:
//! `log_Y(X)` is represented by `log(Y^{-1/2} X Y^{-1/2})`, whose Frobenius
//! norm is the Riemannian norm.

use super::{solver_error, BarycenterProblem, SpacePoint, KARCHER_MAX_ITER, KARCHER_TOL};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub(super) fn validate(m: &Matrix) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::numeric("spd payload has non-finite entries"));
    }
    let scale = 1.0 + m.as_slice().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if m.asymmetry() > 1e-9 * scale {
        return Err(Error::structural("spd payload is not symmetric"));
    }
    let min = m.sym_eigen().min_value();
    if min <= 0.0 {
        return Err(Error::domain(format!(
            "spd payload has nonpositive eigenvalue {min:e}"
        )));
    }
    Ok(())
}

fn spd(p: &SpacePoint) -> &Matrix {
    match p {
        SpacePoint::Spd(m) => m,
        _ => unreachable!("descriptor checked by caller"),
    }
}

/// `(A^{1/2}, A^{-1/2})`.
fn sqrt_pair(a: &Matrix) -> (Matrix, Matrix) {
    let eig = a.sym_eigen();
    (
        eig.reconstruct(f64::sqrt),
        eig.reconstruct(|v| 1.0 / v.sqrt()),
    )
}

pub(super) fn distance(a: &Matrix, b: &Matrix) -> f64 {
    let (_, inv_sqrt) = sqrt_pair(a);
    let whitened = inv_sqrt.congruence(b);
    whitened
        .sym_eigen()
        .values
        .iter()
        .map(|v| v.ln().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}`.
pub(super) fn geodesic(a: &Matrix, b: &Matrix, t: f64) -> Matrix {
    let (sqrt, inv_sqrt) = sqrt_pair(a);
    let whitened = inv_sqrt.congruence(b);
    sqrt.congruence(&whitened.map_eigenvalues(|v| v.powf(t)))
}

/// Weighted sum of whitened logarithms at `y`, given `y^{-1/2}`.
fn whitened_gradient(prob: &BarycenterProblem, inv_sqrt: &Matrix) -> Matrix {
    let n = inv_sqrt.size();
    let mut g = Matrix::zeros(n);
    for (p, w) in prob.points().iter().zip(prob.weights()) {
        if *w == 0.0 {
            continue;
        }
        let log = inv_sqrt.congruence(spd(p)).map_eigenvalues(f64::ln);
        g.add_scaled(&log, *w);
    }
    g
}

pub(super) fn barycenter(prob: &BarycenterProblem) -> Result<SpacePoint> {
    let tol = KARCHER_TOL * (1.0 + prob.diameter());
    let mut y = spd(&prob.points()[prob.heaviest()]).clone();
    let mut residual = f64::INFINITY;
    for _ in 0..KARCHER_MAX_ITER {
        let (sqrt, inv_sqrt) = sqrt_pair(&y);
        let g = whitened_gradient(prob, &inv_sqrt);
        residual = g.frobenius_norm();
        if !residual.is_finite() {
            return Err(Error::numeric("non-finite barycenter update"));
        }
        if residual <= tol {
            return Ok(SpacePoint::Spd(y));
        }
        y = sqrt.congruence(&g.map_eigenvalues(f64::exp));
    }
    Err(solver_error(KARCHER_MAX_ITER, residual, SpacePoint::Spd(y)))
}

pub(super) fn residual(prob: &BarycenterProblem, y: &Matrix) -> f64 {
    let (_, inv_sqrt) = sqrt_pair(y);
    whitened_gradient(prob, &inv_sqrt).frobenius_norm()
}

//! Hyperboloid model `{p : <p,p> = -1, p_0 > 0}` with the Minkowski form
//! `<u,v> = -u_0 v_0 + sum_{k>0} u_k v_k` and distance `arccosh(-<p,q>)`.

use super::{
    solver_error, BarycenterProblem, SpacePoint, HYPERBOLOID_TOL, KARCHER_MAX_ITER, KARCHER_TOL,
};
use crate::error::{Error, Result};

pub(super) fn minkowski(u: &[f64], v: &[f64]) -> f64 {
    let spatial: f64 = u[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum();
    spatial - u[0] * v[0]
}

pub(super) fn validate(p: &[f64]) -> Result<()> {
    if p.len() < 2 {
        return Err(Error::structural(
            "hyperboloid point needs at least two coordinates",
        ));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("hyperboloid payload has non-finite entries"));
    }
    if p[0] <= 0.0 {
        return Err(Error::domain(
            "hyperboloid point must lie on the upper sheet",
        ));
    }
    let defect = (minkowski(p, p) + 1.0).abs();
    if defect > HYPERBOLOID_TOL {
        return Err(Error::domain(format!(
            "hyperboloid constraint violated by {defect:e}"
        )));
    }
    Ok(())
}

fn coords(p: &SpacePoint) -> &[f64] {
    match p {
        SpacePoint::Hyperboloid(v) => v,
        _ => unreachable!("descriptor checked by caller"),
    }
}

/// Rescales onto the hyperboloid to undo rounding drift.
fn renormalize(mut p: Vec<f64>) -> Vec<f64> {
    let q = -minkowski(&p, &p);
    let s = if q > 0.0 { 1.0 / q.sqrt() } else { 1.0 };
    for v in p.iter_mut() {
        *v *= s;
    }
    if p[0] < 0.0 {
        for v in p.iter_mut() {
            *v = -*v;
        }
    }
    p
}

pub(super) fn distance(p: &[f64], q: &[f64]) -> f64 {
    // <q-p, q-p> = 4 sinh^2(d/2) is well conditioned for nearby points
    let diff: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    let chord = minkowski(&diff, &diff).max(0.0).sqrt();
    2.0 * (0.5 * chord).asinh()
}

/// Logarithm map `log_p(q)` as a tangent vector at `p`.
pub(super) fn log(p: &[f64], q: &[f64]) -> Vec<f64> {
    let diff: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    let chord_sq = minkowski(&diff, &diff).max(0.0);
    let d = 2.0 * (0.5 * chord_sq.sqrt()).asinh();
    if d == 0.0 {
        return vec![0.0; p.len()];
    }
    // q + <p,q> p, with <p,q> = -1 - chord^2 / 2
    let excess = 0.5 * chord_sq;
    let u: Vec<f64> = diff
        .iter()
        .zip(p)
        .map(|(dq, pk)| dq - excess * pk)
        .collect();
    let factor = d / d.sinh();
    u.into_iter().map(|v| factor * v).collect()
}

pub(super) fn exp(p: &[f64], v: &[f64]) -> Vec<f64> {
    let norm = minkowski(v, v).max(0.0).sqrt();
    if norm == 0.0 {
        return p.to_vec();
    }
    let (c, s) = (norm.cosh(), norm.sinh() / norm);
    renormalize(p.iter().zip(v).map(|(a, b)| c * a + s * b).collect())
}

pub(super) fn geodesic(p: &[f64], q: &[f64], t: f64) -> Vec<f64> {
    let v: Vec<f64> = log(p, q).into_iter().map(|x| t * x).collect();
    exp(p, &v)
}

fn gradient(prob: &BarycenterProblem, y: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; y.len()];
    for (p, w) in prob.points().iter().zip(prob.weights()) {
        if *w == 0.0 {
            continue;
        }
        for (gk, lk) in g.iter_mut().zip(log(y, coords(p))) {
            *gk += w * lk;
        }
    }
    g
}

pub(super) fn barycenter(prob: &BarycenterProblem) -> Result<SpacePoint> {
    let tol = KARCHER_TOL * (1.0 + prob.diameter());
    let mut y = coords(&prob.points()[prob.heaviest()]).to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..KARCHER_MAX_ITER {
        let g = gradient(prob, &y);
        residual = minkowski(&g, &g).max(0.0).sqrt();
        if !residual.is_finite() {
            return Err(Error::numeric("non-finite barycenter update"));
        }
        if residual <= tol {
            return Ok(SpacePoint::Hyperboloid(y));
        }
        y = exp(&y, &g);
    }
    Err(solver_error(
        KARCHER_MAX_ITER,
        residual,
        SpacePoint::Hyperboloid(y),
    ))
}

pub(super) fn residual(prob: &BarycenterProblem, y: &[f64]) -> f64 {
    let g = gradient(prob, y);
    minkowski(&g, &g).max(0.0).sqrt()
}

/// Origin `(1, 0, ..., 0)` of the `d`-dimensional hyperboloid.
pub(crate) fn origin(d: usize) -> Vec<f64> {
    let mut o = vec![0.0; d + 1];
    o[0] = 1.0;
    o
}

/// `exp_o` of the spatial vector `w` at the origin.
pub(crate) fn exp_origin(w: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0];
    v.extend_from_slice(w);
    exp(&origin(w.len()), &v)
}

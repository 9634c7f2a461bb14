//! Hadamard-space backends: Euclidean space, SPD matrices with the
//! affine-invariant metric, the hyperboloid model of hyperbolic space, and
//! the tripod (three rays glued at a common origin).
//!
//! Every backend offers the metric, unique geodesics and a weighted
//! Fréchet-mean solver. The smooth backends solve the barycenter problem by
//! the fixed-point iteration `y <- exp_y(sum_j w_j log_y x_j)`; the Euclidean
//! and tripod backends use closed forms.

mod euclidean;
mod hyperboloid;
mod sample;
mod spd;
mod tripod;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use sample::sample_point;
pub use tripod::TripodPoint;

/// Payload-wise tolerance used when comparing points.
pub const POINT_TOL: f64 = 1e-9;
/// Allowed deviation of barycenter weights from a unit sum.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Allowed deviation of a hyperboloid point from the constraint `<p,p> = -1`.
pub const HYPERBOLOID_TOL: f64 = 1e-10;
/// Iteration cap of the Karcher fixed-point solver.
pub const KARCHER_MAX_ITER: usize = 500;
/// Relative stopping tolerance of the Karcher solver, scaled by `1 + diameter`.
pub const KARCHER_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Euclidean,
    Spd,
    Hyperboloid,
    Tripod,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Euclidean => "euclidean",
            SpaceKind::Spd => "spd",
            SpaceKind::Hyperboloid => "hyperboloid",
            SpaceKind::Tripod => "tripod",
        }
    }
}

/// Which space a point lives in. For the tripod `dim` carries no meaning and
/// is normalized to 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDescriptor")]
pub struct SpaceDescriptor {
    pub kind: SpaceKind,
    pub dim: usize,
}

#[derive(Deserialize)]
struct RawDescriptor {
    kind: SpaceKind,
    #[serde(default = "one")]
    dim: usize,
}

fn one() -> usize {
    1
}

impl TryFrom<RawDescriptor> for SpaceDescriptor {
    type Error = Error;
    fn try_from(raw: RawDescriptor) -> Result<Self> {
        SpaceDescriptor::new(raw.kind, raw.dim)
    }
}

impl SpaceDescriptor {
    pub fn new(kind: SpaceKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::structural("space dimension must be at least 1"));
        }
        let dim = if kind == SpaceKind::Tripod { 1 } else { dim };
        Ok(SpaceDescriptor { kind, dim })
    }

    pub fn euclidean(dim: usize) -> Self {
        SpaceDescriptor::new(SpaceKind::Euclidean, dim).expect("dimension must be positive")
    }

    pub fn spd(n: usize) -> Self {
        SpaceDescriptor::new(SpaceKind::Spd, n).expect("dimension must be positive")
    }

    pub fn hyperboloid(d: usize) -> Self {
        SpaceDescriptor::new(SpaceKind::Hyperboloid, d).expect("dimension must be positive")
    }

    pub fn tripod() -> Self {
        SpaceDescriptor {
            kind: SpaceKind::Tripod,
            dim: 1,
        }
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SpaceKind::Tripod => write!(f, "tripod"),
            kind => write!(f, "{}:{}", kind.name(), self.dim),
        }
    }
}

/// Parses `kind:dim`, e.g. `spd:2`, `hyperboloid:3`, `euclidean:1`, `tripod`.
impl FromStr for SpaceDescriptor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, dim) = match s.split_once(':') {
            Some((k, d)) => {
                let dim = d
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::structural(format!("bad space dimension in {s:?}")))?;
                (k.trim(), dim)
            }
            None => (s.trim(), 1),
        };
        let kind = match kind {
            "euclidean" => SpaceKind::Euclidean,
            "spd" => SpaceKind::Spd,
            "hyperboloid" => SpaceKind::Hyperboloid,
            "tripod" => SpaceKind::Tripod,
            other => return Err(Error::structural(format!("unknown space kind {other:?}"))),
        };
        SpaceDescriptor::new(kind, dim)
    }
}

/// A point of one of the four backends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointRepr", into = "PointRepr")]
pub enum SpacePoint {
    Euclidean(Vec<f64>),
    Spd(Matrix),
    /// Coordinates `(p_0, ..., p_d)` with `-p_0^2 + sum p_k^2 = -1`, `p_0 > 0`.
    Hyperboloid(Vec<f64>),
    Tripod(TripodPoint),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PointRepr {
    Euclidean { v: Vec<f64> },
    Spd { m: Vec<Vec<f64>> },
    Hyperboloid { p: Vec<f64> },
    Tripod { leg: u8, t: f64 },
}

impl TryFrom<PointRepr> for SpacePoint {
    type Error = Error;
    fn try_from(repr: PointRepr) -> Result<Self> {
        match repr {
            PointRepr::Euclidean { v } => SpacePoint::euclidean(v),
            PointRepr::Spd { m } => {
                let m = Matrix::from_rows(&m)
                    .ok_or_else(|| Error::structural("spd payload must be a square matrix"))?;
                SpacePoint::spd(m)
            }
            PointRepr::Hyperboloid { p } => SpacePoint::hyperboloid(p),
            PointRepr::Tripod { leg, t } => SpacePoint::tripod(leg, t),
        }
    }
}

impl From<SpacePoint> for PointRepr {
    fn from(p: SpacePoint) -> Self {
        match p {
            SpacePoint::Euclidean(v) => PointRepr::Euclidean { v },
            SpacePoint::Spd(m) => PointRepr::Spd { m: m.rows() },
            SpacePoint::Hyperboloid(p) => PointRepr::Hyperboloid { p },
            SpacePoint::Tripod(tp) => PointRepr::Tripod {
                leg: tp.leg(),
                t: tp.t(),
            },
        }
    }
}

fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numeric(format!(
            "{what} payload has non-finite entries"
        )))
    }
}

impl SpacePoint {
    pub fn euclidean(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::structural(
                "euclidean point needs at least one coordinate",
            ));
        }
        ensure_finite(&v, "euclidean")?;
        Ok(SpacePoint::Euclidean(v))
    }

    /// Real number as a point of the Euclidean line.
    pub fn real(x: f64) -> Self {
        SpacePoint::Euclidean(vec![x])
    }

    pub fn spd(m: Matrix) -> Result<Self> {
        spd::validate(&m)?;
        Ok(SpacePoint::Spd(m.symmetrized()))
    }

    pub fn hyperboloid(p: Vec<f64>) -> Result<Self> {
        hyperboloid::validate(&p)?;
        Ok(SpacePoint::Hyperboloid(p))
    }

    pub fn tripod(leg: u8, t: f64) -> Result<Self> {
        Ok(SpacePoint::Tripod(TripodPoint::new(leg, t)?))
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        match self {
            SpacePoint::Euclidean(v) => SpaceDescriptor {
                kind: SpaceKind::Euclidean,
                dim: v.len(),
            },
            SpacePoint::Spd(m) => SpaceDescriptor {
                kind: SpaceKind::Spd,
                dim: m.size(),
            },
            SpacePoint::Hyperboloid(p) => SpaceDescriptor {
                kind: SpaceKind::Hyperboloid,
                dim: p.len() - 1,
            },
            SpacePoint::Tripod(_) => SpaceDescriptor::tripod(),
        }
    }

    /// Euclidean coordinates, if this is a Euclidean point.
    pub fn as_euclidean(&self) -> Option<&[f64]> {
        match self {
            SpacePoint::Euclidean(v) => Some(v),
            _ => None,
        }
    }

    /// Equality up to [`POINT_TOL`] in the payload (tripod: in the metric, so
    /// that the center is equal to itself on every leg).
    pub fn approx_eq(&self, other: &SpacePoint) -> bool {
        self.approx_eq_tol(other, POINT_TOL)
    }

    pub fn approx_eq_tol(&self, other: &SpacePoint, tol: f64) -> bool {
        let close = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
        };
        match (self, other) {
            (SpacePoint::Euclidean(a), SpacePoint::Euclidean(b)) => close(a, b),
            (SpacePoint::Hyperboloid(a), SpacePoint::Hyperboloid(b)) => close(a, b),
            (SpacePoint::Spd(a), SpacePoint::Spd(b)) => {
                a.size() == b.size() && close(a.as_slice(), b.as_slice())
            }
            (SpacePoint::Tripod(a), SpacePoint::Tripod(b)) => tripod::distance(a, b) <= tol,
            _ => false,
        }
    }
}

fn same_space(p: &SpacePoint, q: &SpacePoint) -> Result<()> {
    let (dp, dq) = (p.descriptor(), q.descriptor());
    if dp == dq {
        Ok(())
    } else {
        Err(Error::structural(format!(
            "descriptor mismatch: {dp} vs {dq}"
        )))
    }
}

/// Metric distance between two points of the same space.
pub fn distance(p: &SpacePoint, q: &SpacePoint) -> Result<f64> {
    same_space(p, q)?;
    let d = match (p, q) {
        (SpacePoint::Euclidean(a), SpacePoint::Euclidean(b)) => euclidean::distance(a, b),
        (SpacePoint::Spd(a), SpacePoint::Spd(b)) => spd::distance(a, b),
        (SpacePoint::Hyperboloid(a), SpacePoint::Hyperboloid(b)) => hyperboloid::distance(a, b),
        (SpacePoint::Tripod(a), SpacePoint::Tripod(b)) => tripod::distance(a, b),
        _ => unreachable!("descriptors already compared"),
    };
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::numeric("distance evaluated to a non-finite value"))
    }
}

/// Point at parameter `t` on the unique geodesic from `p` (t = 0) to `q` (t = 1).
pub fn geodesic_point(p: &SpacePoint, q: &SpacePoint, t: f64) -> Result<SpacePoint> {
    same_space(p, q)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!(
            "geodesic parameter {t} outside [0, 1]"
        )));
    }
    if t == 0.0 {
        return Ok(p.clone());
    }
    if t == 1.0 {
        return Ok(q.clone());
    }
    Ok(match (p, q) {
        (SpacePoint::Euclidean(a), SpacePoint::Euclidean(b)) => {
            SpacePoint::Euclidean(euclidean::geodesic(a, b, t))
        }
        (SpacePoint::Spd(a), SpacePoint::Spd(b)) => SpacePoint::Spd(spd::geodesic(a, b, t)),
        (SpacePoint::Hyperboloid(a), SpacePoint::Hyperboloid(b)) => {
            SpacePoint::Hyperboloid(hyperboloid::geodesic(a, b, t))
        }
        (SpacePoint::Tripod(a), SpacePoint::Tripod(b)) => {
            SpacePoint::Tripod(tripod::geodesic(a, b, t))
        }
        _ => unreachable!("descriptors already compared"),
    })
}

/// Weighted points whose Fréchet mean is sought.
#[derive(Clone, Debug, PartialEq)]
pub struct BarycenterProblem {
    points: Vec<SpacePoint>,
    weights: Vec<f64>,
}

impl BarycenterProblem {
    pub fn new(points: Vec<SpacePoint>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::structural(
                "barycenter problem needs at least one point",
            ));
        }
        if points.len() != weights.len() {
            return Err(Error::structural(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::domain(format!("weights sum to {total}, expected 1")));
        }
        let desc = points[0].descriptor();
        if let Some(bad) = points.iter().find(|p| p.descriptor() != desc) {
            return Err(Error::structural(format!(
                "descriptor mismatch: {desc} vs {}",
                bad.descriptor()
            )));
        }
        Ok(BarycenterProblem { points, weights })
    }

    pub fn points(&self) -> &[SpacePoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        self.points[0].descriptor()
    }

    /// Index of the largest weight, lowest index on ties.
    pub(crate) fn heaviest(&self) -> usize {
        let mut best = 0;
        for (j, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = j;
            }
        }
        best
    }

    /// Largest pairwise distance among points carrying positive weight.
    pub fn diameter(&self) -> f64 {
        let active: Vec<&SpacePoint> = self
            .points
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(p, _)| p)
            .collect();
        let mut diam: f64 = 0.0;
        for (a, p) in active.iter().enumerate() {
            for q in &active[a + 1..] {
                diam = diam.max(distance(p, q).unwrap_or(f64::INFINITY));
            }
        }
        diam
    }

    /// Value of `y -> sum_j w_j d(x_j, y)^2`.
    pub fn objective(&self, y: &SpacePoint) -> Result<f64> {
        let mut acc = 0.0;
        for (p, w) in self.points.iter().zip(&self.weights) {
            let d = distance(p, y)?;
            acc += w * d * d;
        }
        Ok(acc)
    }
}

/// Weighted Fréchet mean (barycenter) of a [`BarycenterProblem`].
pub fn weighted_barycenter(prob: &BarycenterProblem) -> Result<SpacePoint> {
    if prob.points.len() == 1 {
        return Ok(prob.points[0].clone());
    }
    match prob.descriptor().kind {
        SpaceKind::Euclidean => Ok(SpacePoint::Euclidean(euclidean::barycenter(prob))),
        SpaceKind::Spd => spd::barycenter(prob),
        SpaceKind::Hyperboloid => hyperboloid::barycenter(prob),
        SpaceKind::Tripod => Ok(SpacePoint::Tripod(tripod::barycenter(prob))),
    }
}

/// Norm of the weighted sum of logarithms `sum_j w_j log_y(x_j)` at `y`, the
/// first-order stationarity residual of the barycenter functional. For the
/// tripod (not a manifold) this returns the one-sided slope of the
/// functional along the leg of `y`, which vanishes or is nonnegative at the
/// minimizer.
pub fn stationarity_residual(prob: &BarycenterProblem, y: &SpacePoint) -> Result<f64> {
    same_space(&prob.points[0], y)?;
    Ok(match y {
        SpacePoint::Euclidean(v) => euclidean::residual(prob, v),
        SpacePoint::Spd(m) => spd::residual(prob, m),
        SpacePoint::Hyperboloid(p) => hyperboloid::residual(prob, p),
        SpacePoint::Tripod(tp) => tripod::residual(prob, tp),
    })
}

/// Defect of the Hadamard inequality at the geodesic midpoint `y` of
/// `x0, x1`:
/// `d(z,y)^2 - (d(z,x0)^2 / 2 + d(z,x1)^2 / 2 - d(x0,x1)^2 / 4)`.
/// Nonpositive in every Hadamard space.
pub fn npc_residual(x0: &SpacePoint, x1: &SpacePoint, z: &SpacePoint) -> Result<f64> {
    same_space(x0, x1)?;
    same_space(x0, z)?;
    let y = geodesic_point(x0, x1, 0.5)?;
    let dzy = distance(z, &y)?;
    let dz0 = distance(z, x0)?;
    let dz1 = distance(z, x1)?;
    let d01 = distance(x0, x1)?;
    Ok(dzy * dzy - (0.5 * dz0 * dz0 + 0.5 * dz1 * dz1 - 0.25 * d01 * d01))
}

pub(crate) fn solver_error(iterations: usize, residual: f64, last: SpacePoint) -> Error {
    Error::Solver {
        iterations,
        residual,
        last: Box::new(last),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spd1(x: f64) -> SpacePoint {
        SpacePoint::spd(Matrix::diagonal(&[x])).unwrap()
    }

    fn tri(leg: u8, t: f64) -> SpacePoint {
        SpacePoint::tripod(leg, t).unwrap()
    }

    fn all_descriptors() -> Vec<SpaceDescriptor> {
        vec![
            SpaceDescriptor::euclidean(1),
            SpaceDescriptor::euclidean(3),
            SpaceDescriptor::spd(2),
            SpaceDescriptor::spd(3),
            SpaceDescriptor::hyperboloid(2),
            SpaceDescriptor::hyperboloid(3),
            SpaceDescriptor::tripod(),
        ]
    }

    #[test]
    fn distance_examples() {
        let d = distance(&SpacePoint::real(0.0), &SpacePoint::real(3.0)).unwrap();
        assert_eq!(d, 3.0);
        let d = distance(&spd1(1.0), &spd1(std::f64::consts::E.powi(2))).unwrap();
        assert!((d - 2.0).abs() < 1e-14);
        let d = distance(&tri(0, 1.0), &tri(1, 2.0)).unwrap();
        assert_eq!(d, 3.0);
    }

    #[test]
    fn distance_rejects_mismatched_spaces() {
        let err = distance(&SpacePoint::real(0.0), &spd1(1.0)).unwrap_err();
        assert_eq!(err.kind(), "structural");
        let err = distance(
            &SpacePoint::real(0.0),
            &SpacePoint::Euclidean(vec![0.0, 1.0]),
        )
        .unwrap_err();
        assert_eq!(err.kind(), "structural");
    }

    #[test]
    fn non_finite_payload_is_numeric_error() {
        assert_eq!(
            SpacePoint::euclidean(vec![f64::NAN]).unwrap_err().kind(),
            "numeric"
        );
    }

    #[test]
    fn geodesic_examples() {
        let g = geodesic_point(&SpacePoint::real(0.0), &SpacePoint::real(4.0), 0.25).unwrap();
        assert_eq!(g, SpacePoint::real(1.0));

        let g = geodesic_point(&spd1(1.0), &spd1(4.0), 0.5).unwrap();
        let oracle = (0.5 * 4.0f64.ln()).exp();
        assert!(g.approx_eq_tol(&spd1(oracle), 1e-14));

        let g = geodesic_point(&tri(0, 2.0), &tri(1, 2.0), 0.5).unwrap();
        assert!(g.approx_eq(&tri(2, 0.0)));
    }

    #[test]
    fn geodesic_rejects_out_of_range_parameter() {
        let err = geodesic_point(&SpacePoint::real(0.0), &SpacePoint::real(1.0), 1.5).unwrap_err();
        assert_eq!(err.kind(), "domain");
    }

    #[test]
    fn barycenter_examples() {
        let prob = BarycenterProblem::new(
            vec![SpacePoint::real(0.0), SpacePoint::real(2.0)],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(weighted_barycenter(&prob).unwrap(), SpacePoint::real(1.0));

        let prob = BarycenterProblem::new(vec![spd1(1.0), spd1(4.0)], vec![0.5, 0.5]).unwrap();
        let oracle = (0.5 * 1.0f64.ln() + 0.5 * 4.0f64.ln()).exp();
        assert!(weighted_barycenter(&prob)
            .unwrap()
            .approx_eq_tol(&spd1(oracle), 1e-12));

        let third = 1.0 / 3.0;
        let prob = BarycenterProblem::new(
            vec![tri(0, 1.0), tri(1, 1.0), tri(2, 1.0)],
            vec![third, third, 1.0 - 2.0 * third],
        )
        .unwrap();
        assert!(weighted_barycenter(&prob).unwrap().approx_eq(&tri(0, 0.0)));

        let prob = BarycenterProblem::new(vec![tri(0, 1.0), tri(1, 1.0)], vec![0.5, 0.5]).unwrap();
        assert!(weighted_barycenter(&prob).unwrap().approx_eq(&tri(0, 0.0)));
    }

    #[test]
    fn barycenter_problem_validation() {
        assert!(BarycenterProblem::new(vec![], vec![]).is_err());
        assert!(BarycenterProblem::new(vec![SpacePoint::real(0.0)], vec![0.5]).is_err());
        assert!(BarycenterProblem::new(
            vec![SpacePoint::real(0.0), SpacePoint::real(1.0)],
            vec![1.2, -0.2]
        )
        .is_err());
        assert!(
            BarycenterProblem::new(vec![SpacePoint::real(0.0), spd1(1.0)], vec![0.5, 0.5]).is_err()
        );
    }

    #[test]
    fn npc_residual_examples() {
        let r = npc_residual(
            &SpacePoint::Euclidean(vec![0.3, -1.0]),
            &SpacePoint::Euclidean(vec![2.0, 0.5]),
            &SpacePoint::Euclidean(vec![-0.7, 4.0]),
        )
        .unwrap();
        assert!(r.abs() < 1e-12);

        // midpoint of (leg0,1),(leg1,1) is the center; d(z,y)^2 = 1 and the
        // bracket is 2 + 2 - 1 = 3
        let r = npc_residual(&tri(0, 1.0), &tri(1, 1.0), &tri(2, 1.0)).unwrap();
        assert!((r + 2.0).abs() < 1e-14);
    }

    #[test]
    fn npc_residual_nonpositive_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for desc in all_descriptors() {
            for _ in 0..50 {
                let x0 = sample_point(desc, &mut rng);
                let x1 = sample_point(desc, &mut rng);
                let z = sample_point(desc, &mut rng);
                let r = npc_residual(&x0, &x1, &z).unwrap();
                assert!(r <= 1e-9, "{desc}: residual {r}");
            }
        }
    }

    #[test]
    fn geodesics_have_constant_speed_and_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for desc in all_descriptors() {
            for _ in 0..20 {
                let p = sample_point(desc, &mut rng);
                let q = sample_point(desc, &mut rng);
                let d = distance(&p, &q).unwrap();
                for &t in &[0.1, 0.25, 0.5, 0.9] {
                    let g = geodesic_point(&p, &q, t).unwrap();
                    let dg = distance(&p, &g).unwrap();
                    assert!((dg - t * d).abs() <= 1e-9 * d.max(1.0), "{desc}");
                    for &s in &[0.3, 0.5] {
                        let lhs = geodesic_point(&p, &q, s * t).unwrap();
                        let rhs = geodesic_point(&p, &g, s).unwrap();
                        assert!(distance(&lhs, &rhs).unwrap() <= 1e-9, "{desc}");
                    }
                }
                assert_eq!(geodesic_point(&p, &q, 0.0).unwrap(), p);
                assert_eq!(geodesic_point(&p, &q, 1.0).unwrap(), q);
            }
        }
    }

    #[test]
    fn barycenter_is_stationary_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for desc in all_descriptors() {
            for k in 2..6 {
                let points: Vec<_> = (0..k).map(|_| sample_point(desc, &mut rng)).collect();
                let raw: Vec<f64> = (0..k).map(|j| 1.0 + j as f64).collect();
                let total: f64 = raw.iter().sum();
                let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
                let prob = BarycenterProblem::new(points, weights).unwrap();
                let y = weighted_barycenter(&prob).unwrap();
                let again = weighted_barycenter(&prob).unwrap();
                assert_eq!(y, again);
                let res = stationarity_residual(&prob, &y).unwrap();
                if desc.kind == SpaceKind::Tripod {
                    assert!(res >= -1e-12, "{desc}: slope {res}");
                } else {
                    assert!(res <= 1e-10 * (1.0 + prob.diameter()), "{desc}: {res}");
                }
            }
        }
    }

    #[test]
    fn barycenter_with_concentrated_weight_returns_that_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for desc in all_descriptors() {
            let points: Vec<_> = (0..4).map(|_| sample_point(desc, &mut rng)).collect();
            for j in 0..4 {
                let mut weights = vec![0.0; 4];
                weights[j] = 1.0;
                let prob = BarycenterProblem::new(points.clone(), weights).unwrap();
                let y = weighted_barycenter(&prob).unwrap();
                assert!(y.approx_eq(&points[j]), "{desc}");
            }
            let single = BarycenterProblem::new(vec![points[0].clone()], vec![1.0]).unwrap();
            assert_eq!(weighted_barycenter(&single).unwrap(), points[0]);
        }
    }

    #[test]
    fn barycenters_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for desc in all_descriptors() {
            for _ in 0..10 {
                let xs: Vec<_> = (0..3).map(|_| sample_point(desc, &mut rng)).collect();
                let ys: Vec<_> = (0..3).map(|_| sample_point(desc, &mut rng)).collect();
                let w = vec![0.2, 0.5, 0.3];
                let bx =
                    weighted_barycenter(&BarycenterProblem::new(xs.clone(), w.clone()).unwrap())
                        .unwrap();
                let by =
                    weighted_barycenter(&BarycenterProblem::new(ys.clone(), w).unwrap()).unwrap();
                let bound = xs
                    .iter()
                    .zip(&ys)
                    .map(|(a, b)| distance(a, b).unwrap())
                    .fold(0.0, f64::max);
                assert!(distance(&bx, &by).unwrap() <= bound + 1e-8, "{desc}");
            }
        }
    }

    #[test]
    fn euclidean_barycenter_is_weighted_mean() {
        let prob = BarycenterProblem::new(
            vec![
                SpacePoint::Euclidean(vec![1.0, 2.0]),
                SpacePoint::Euclidean(vec![-3.0, 0.5]),
                SpacePoint::Euclidean(vec![0.25, 8.0]),
            ],
            vec![0.25, 0.5, 0.25],
        )
        .unwrap();
        let expect = vec![
            0.25 * 1.0 + 0.5 * -3.0 + 0.25 * 0.25,
            0.25 * 2.0 + 0.5 * 0.5 + 0.25 * 8.0,
        ];
        assert_eq!(
            weighted_barycenter(&prob).unwrap(),
            SpacePoint::Euclidean(expect)
        );
    }

    #[test]
    fn json_encodings() {
        let cases = [
            (r#"{"v":[1.0,2.0]}"#, SpaceKind::Euclidean),
            (r#"{"m":[[2.0,0.5],[0.5,1.0]]}"#, SpaceKind::Spd),
            (r#"{"p":[1.0,0.0,0.0]}"#, SpaceKind::Hyperboloid),
            (r#"{"leg":2,"t":1.5}"#, SpaceKind::Tripod),
        ];
        for (text, kind) in cases {
            let p: SpacePoint = serde_json::from_str(text).unwrap();
            assert_eq!(p.descriptor().kind, kind);
            let back: SpacePoint =
                serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
            assert_eq!(back, p);
        }
        assert!(serde_json::from_str::<SpacePoint>(r#"{"p":[1.0,1.0,0.0]}"#).is_err());
        assert!(serde_json::from_str::<SpacePoint>(r#"{"leg":3,"t":1.0}"#).is_err());
        assert!(serde_json::from_str::<SpacePoint>(r#"{"m":[[1.0,0.0],[0.0,-1.0]]}"#).is_err());

        let d: SpaceDescriptor = serde_json::from_str(r#"{"kind":"spd","dim":3}"#).unwrap();
        assert_eq!(d, SpaceDescriptor::spd(3));
        assert_eq!(
            "hyperboloid:2".parse::<SpaceDescriptor>().unwrap(),
            SpaceDescriptor::hyperboloid(2)
        );
        assert_eq!(
            "tripod".parse::<SpaceDescriptor>().unwrap(),
            SpaceDescriptor::tripod()
        );
        assert!("spd:0".parse::<SpaceDescriptor>().is_err());
    }
}

use rand::Rng;

use super::{hyperboloid, SpaceDescriptor, SpaceKind, SpacePoint, TripodPoint};
use crate::linalg::Matrix;

/// Draws a random point from a bounded region of the space:
///
/// * euclidean: uniform in `[0, 1]^dim`;
/// * spd: `exp(H)` with `H` symmetric, entries uniform in `[-1, 1]`;
/// * hyperboloid: `exp_o(v)` at the origin with `|v| <= 1` uniform in the ball;
/// * tripod: uniform leg, coordinate uniform in `[0, 1]`.
pub fn sample_point<R: Rng + ?Sized>(desc: SpaceDescriptor, rng: &mut R) -> SpacePoint {
    let dim = desc.dim;
    match desc.kind {
        SpaceKind::Euclidean => SpacePoint::Euclidean((0..dim).map(|_| rng.gen::<f64>()).collect()),
        SpaceKind::Spd => {
            let mut h = Matrix::zeros(dim);
            for i in 0..dim {
                for j in i..dim {
                    let v = rng.gen_range(-1.0..=1.0);
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
            SpacePoint::Spd(h.map_eigenvalues(f64::exp))
        }
        SpaceKind::Hyperboloid => {
            let w = loop {
                let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                if w.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                    break w;
                }
            };
            SpacePoint::Hyperboloid(hyperboloid::exp_origin(&w))
        }
        SpaceKind::Tripod => {
            let leg = rng.gen_range(0..3u8);
            let t = rng.gen::<f64>();
            SpacePoint::Tripod(TripodPoint::new(leg, t).expect("valid tripod sample"))
        }
    }
}

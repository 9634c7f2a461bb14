//! The tripod: three copies of `[0, inf)` glued at 0. Points on different
//! legs are joined through the center.

use super::{BarycenterProblem, SpacePoint};
use crate::error::{Error, Result};

pub const LEGS: u8 = 3;

/// Point `(leg, t)`; the center `t = 0` is stored on leg 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripodPoint {
    leg: u8,
    t: f64,
}

impl TripodPoint {
    pub fn new(leg: u8, t: f64) -> Result<Self> {
        if leg >= LEGS {
            return Err(Error::structural(format!(
                "tripod leg {leg} out of range 0..3"
            )));
        }
        if !t.is_finite() {
            return Err(Error::numeric("tripod coordinate is not finite"));
        }
        if t < 0.0 {
            return Err(Error::domain(format!("tripod coordinate {t} is negative")));
        }
        Ok(TripodPoint::on_leg(leg, t))
    }

    fn on_leg(leg: u8, t: f64) -> Self {
        if t == 0.0 {
            TripodPoint { leg: 0, t: 0.0 }
        } else {
            TripodPoint { leg, t }
        }
    }

    pub fn center() -> Self {
        TripodPoint { leg: 0, t: 0.0 }
    }

    pub fn leg(&self) -> u8 {
        self.leg
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Signed coordinate of this point along leg `leg`: positive on that leg,
    /// negative (distance through the center) elsewhere.
    fn signed_on(&self, leg: u8) -> f64 {
        if self.leg == leg {
            self.t
        } else {
            -self.t
        }
    }
}

fn tripod(p: &SpacePoint) -> &TripodPoint {
    match p {
        SpacePoint::Tripod(t) => t,
        _ => unreachable!("descriptor checked by caller"),
    }
}

pub(super) fn distance(a: &TripodPoint, b: &TripodPoint) -> f64 {
    if a.leg == b.leg {
        (a.t - b.t).abs()
    } else {
        a.t + b.t
    }
}

pub(super) fn geodesic(a: &TripodPoint, b: &TripodPoint, t: f64) -> TripodPoint {
    if a.leg == b.leg {
        return TripodPoint::on_leg(a.leg, a.t + t * (b.t - a.t));
    }
    let travelled = t * (a.t + b.t);
    if travelled <= a.t {
        TripodPoint::on_leg(a.leg, a.t - travelled)
    } else {
        TripodPoint::on_leg(b.leg, travelled - a.t)
    }
}

/// Closed form: on each leg the functional restricted to that leg is a 1D
/// quadratic in the leg coordinate `u >= 0`; the best per-leg minimizer wins
/// (lowest leg on ties).
pub(super) fn barycenter(prob: &BarycenterProblem) -> TripodPoint {
    let mut best = TripodPoint::center();
    let mut best_value = f64::INFINITY;
    for leg in 0..LEGS {
        let total: f64 = prob.weights().iter().sum();
        let mean: f64 = prob
            .points()
            .iter()
            .zip(prob.weights())
            .map(|(p, w)| w * tripod(p).signed_on(leg))
            .sum::<f64>()
            / total;
        let u = mean.max(0.0);
        let value: f64 = prob
            .points()
            .iter()
            .zip(prob.weights())
            .map(|(p, w)| {
                let e = u - tripod(p).signed_on(leg);
                w * e * e
            })
            .sum();
        if value < best_value {
            best_value = value;
            best = TripodPoint::on_leg(leg, u);
        }
    }
    best
}

/// Smallest directional derivative of the functional over the feasible unit
/// directions at `y`; nonnegative exactly at the minimizer.
pub(super) fn residual(prob: &BarycenterProblem, y: &TripodPoint) -> f64 {
    let outward = |leg: u8| -> f64 {
        2.0 * prob
            .points()
            .iter()
            .zip(prob.weights())
            .map(|(p, w)| {
                let u = if y.t == 0.0 { 0.0 } else { y.t };
                w * (u - tripod(p).signed_on(leg))
            })
            .sum::<f64>()
    };
    if y.t == 0.0 {
        (0..LEGS).map(outward).fold(f64::INFINITY, f64::min)
    } else {
        -outward(y.leg).abs()
    }
}

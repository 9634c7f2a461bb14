//! The characteristic Markov chain of a mask: the chain on `Z^s` that moves
//! from `i` to `j` with probability `a_{i-2j}`, so that its `n`-step kernel
//! is `p_n(i, j) = a^(n)_{i - 2^n j}`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{IndexBox, Stencils};
use crate::linear::{trial_rng, RefinableSamples};
use crate::masks::{default_gauge, iterated_mask, Mask};
use crate::spaces::{distance, weighted_barycenter, BarycenterProblem};
use crate::subdivision::{subdivide, GridData};

/// Sparse distribution over lattice points.
pub type Distribution = BTreeMap<Vec<i64>, f64>;

/// Update size at which the stationary power iteration stops.
pub const STATIONARY_TOL: f64 = 1e-15;
const STATIONARY_MAX_ITER: usize = 10_000;
/// A stationary mass this close to 1 marks the scheme as interpolatory.
pub const INTERPOLATORY_TOL: f64 = 1e-9;
/// Slack on the gauge bound in [`ball_confinement`].
pub const CONFINEMENT_SLACK: f64 = 1e-12;

mod entries {
    use super::Distribution;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        state: Vec<i64>,
        prob: f64,
    }

    pub fn serialize<S: Serializer>(d: &Distribution, ser: S) -> Result<S::Ok, S::Error> {
        let list: Vec<Entry> = d
            .iter()
            .map(|(k, v)| Entry {
                state: k.clone(),
                prob: *v,
            })
            .collect();
        list.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Distribution, D::Error> {
        let list = Vec::<Entry>::deserialize(de)?;
        Ok(list.into_iter().map(|e| (e.state, e.prob)).collect())
    }
}

/// `n`-step transition probabilities from `start`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub start: Vec<i64>,
    pub steps: u32,
    #[serde(with = "entries")]
    pub probs: Distribution,
}

impl KernelRow {
    pub fn prob(&self, j: &[i64]) -> f64 {
        self.probs.get(j).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }
}

/// Row of the kernel given the iterated mask `an = a^(n)`.
fn row_from(an: &Mask, start: &[i64], n: u32) -> Distribution {
    let period = 1i64 << n;
    let support = an.support_box();
    let targets = IndexBox {
        lo: (0..start.len())
            .map(|k| -(support.hi[k] - start[k]).div_euclid(period))
            .collect(),
        hi: (0..start.len())
            .map(|k| (start[k] - support.lo[k]).div_euclid(period))
            .collect(),
    };
    targets
        .iter()
        .filter_map(|j| {
            let at: Vec<i64> = (0..start.len()).map(|k| start[k] - period * j[k]).collect();
            let p = an.get(&at);
            (p > 0.0).then_some((j, p))
        })
        .collect()
}

fn check_start(a: &Mask, i: &[i64]) -> Result<()> {
    if i.len() != a.dim() {
        return Err(Error::structural(format!(
            "start {i:?} is not a point of Z^{}",
            a.dim()
        )));
    }
    Ok(())
}

/// `p_n(i, .)`, the law of `X_n` given `X_0 = i`.
pub fn kernel_row(a: &Mask, i: &[i64], n: u32) -> Result<KernelRow> {
    a.ensure_scheme()?;
    check_start(a, i)?;
    let probs = if n == 0 {
        BTreeMap::from([(i.to_vec(), 1.0)])
    } else {
        row_from(&iterated_mask(a, n)?, i, n)
    };
    Ok(KernelRow {
        start: i.to_vec(),
        steps: n,
        probs,
    })
}

/// Empirical law of `X_n` from independent trajectories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRow {
    pub start: Vec<i64>,
    pub steps: u32,
    pub trials: usize,
    pub seed: u64,
    #[serde(with = "entries")]
    pub freqs: Distribution,
}

/// Simulates `trials` trajectories of `n` steps. Trajectory `t` uses the
/// generator stream `(seed, t)`.
pub fn simulate_chain(
    a: &Mask,
    i: &[i64],
    n: u32,
    trials: usize,
    seed: u64,
) -> Result<EmpiricalRow> {
    a.ensure_scheme()?;
    check_start(a, i)?;
    if trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    let stencils = Stencils::new(a);
    let mut counts: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        let mut state = i.to_vec();
        for _ in 0..n {
            let moves = stencils.at(&state);
            let total: f64 = moves.iter().map(|(_, w)| w).sum();
            let mut u = rng.gen::<f64>() * total;
            let mut next = &moves[moves.len() - 1].0;
            for (j, w) in &moves {
                if u < *w {
                    next = j;
                    break;
                }
                u -= w;
            }
            state = next.clone();
        }
        *counts.entry(state).or_default() += 1;
    }
    Ok(EmpiricalRow {
        start: i.to_vec(),
        steps: n,
        trials,
        seed,
        freqs: counts
            .into_iter()
            .map(|(k, c)| (k, c as f64 / trials as f64))
            .collect(),
    })
}

/// Total variation distance `1/2 sum_j |p_j - q_j|`.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> f64 {
    let mut acc = 0.0;
    for (k, v) in p {
        acc += (v - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, v) in q {
        if !p.contains_key(k) {
            acc += v.abs();
        }
    }
    0.5 * acc
}

/// One application of the one-step kernel: `(pi P)_j = sum_i pi_i a_{i-2j}`.
pub fn kernel_step(a: &Mask, pi: &Distribution) -> Distribution {
    let stencils = Stencils::new(a);
    let mut out = Distribution::new();
    for (i, p) in pi {
        for (j, w) in stencils.at(i) {
            *out.entry(j).or_default() += p * w;
        }
    }
    out
}

fn sup_difference(p: &Distribution, q: &Distribution) -> f64 {
    p.keys()
        .chain(q.keys())
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

/// Stationary distribution `pi_j = phi(-j)` of the chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    #[serde(with = "entries")]
    pub pi: Distribution,
    /// `k` with `pi = delta_k`, if any.
    pub interpolatory: Option<Vec<i64>>,
    /// `sup_j |pi_j - (pi P)_j|`.
    pub residual: f64,
    /// Raw samples `a^(n)_{-j 2^n}` of the refinable function.
    #[serde(with = "entries")]
    pub samples: Distribution,
    /// `sup_j |samples_j - pi_j|`.
    pub sample_deviation: f64,
    pub level: u32,
    pub iterations: usize,
}

/// Reads `pi_j = phi(-j)` off the cascade samples and sharpens it by power
/// iteration to the fixed point of `pi -> pi P`.
pub fn stationary_from_refinable(r: &RefinableSamples) -> Result<StationaryReport> {
    r.mask.ensure_scheme()?;
    if r.level == 0 {
        return Err(Error::domain("cascade level must be at least 1"));
    }
    let period = 1i64 << r.level;
    let support = r.values.support_box();
    // integers -j with -j * period in the support
    let states = IndexBox {
        lo: support.hi.iter().map(|h| -h.div_euclid(period)).collect(),
        hi: support.lo.iter().map(|l| -l.div_euclid(period)).collect(),
    };
    let samples: Distribution = states
        .iter()
        .filter_map(|j| {
            let at: Vec<i64> = j.iter().map(|v| -v * period).collect();
            let v = r.values.get(&at);
            (v > 0.0).then_some((j, v))
        })
        .collect();
    let total: f64 = samples.values().sum();
    if total <= 0.0 || total.is_nan() {
        return Err(Error::numeric(
            "refinable function vanishes on the integers",
        ));
    }
    let mut pi: Distribution = samples
        .iter()
        .map(|(k, v)| (k.clone(), v / total))
        .collect();
    let mut iterations = 0;
    while iterations < STATIONARY_MAX_ITER {
        let next = kernel_step(&r.mask, &pi);
        let next_total: f64 = next.values().sum();
        let next: Distribution = next
            .into_iter()
            .filter(|(_, v)| *v > 0.0)
            .map(|(k, v)| (k, v / next_total))
            .collect();
        iterations += 1;
        let change = sup_difference(&pi, &next);
        pi = next;
        if change <= STATIONARY_TOL {
            break;
        }
    }
    let residual = sup_difference(&pi, &kernel_step(&r.mask, &pi));
    let interpolatory = pi
        .iter()
        .find(|(_, v)| **v >= 1.0 - INTERPOLATORY_TOL)
        .map(|(k, _)| k.clone());
    Ok(StationaryReport {
        sample_deviation: sup_difference(&samples, &pi),
        pi,
        interpolatory,
        residual,
        samples,
        level: r.level,
        iterations,
    })
}

fn euclidean_norm(v: &[i64]) -> f64 {
    v.iter()
        .map(|x| (*x as f64) * (*x as f64))
        .sum::<f64>()
        .sqrt()
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::domain(format!("p = {p} is outside [1, inf)")));
    }
    Ok(())
}

/// `E_ell |X_n - k|^p` with the Euclidean norm.
pub fn lp_moment(a: &Mask, ell: &[i64], n: u32, p: f64, k: &[i64]) -> Result<f64> {
    check_p(p)?;
    check_start(a, k)?;
    let row = kernel_row(a, ell, n)?;
    Ok(row
        .probs
        .iter()
        .map(|(j, w)| {
            let d: Vec<i64> = j.iter().zip(k).map(|(x, y)| x - y).collect();
            w * euclidean_norm(&d).powf(p)
        })
        .sum())
}

/// `E_ell |X_{2n} - X_n|^p`.
pub fn dispersion_gap(a: &Mask, ell: &[i64], n: u32, p: f64) -> Result<f64> {
    check_p(p)?;
    let first = kernel_row(a, ell, n)?;
    if n == 0 {
        return Ok(0.0);
    }
    let an = iterated_mask(a, n)?;
    let mut acc = 0.0;
    for (j, pj) in &first.probs {
        for (i, pi) in row_from(&an, j, n) {
            let d: Vec<i64> = i.iter().zip(j).map(|(x, y)| x - y).collect();
            acc += pj * pi * euclidean_norm(&d).powf(p);
        }
    }
    Ok(acc)
}

/// Largest gauge value over the support of one kernel row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepConfinement {
    pub steps: u32,
    pub gauge_radius: f64,
    pub confined: bool,
}

/// Outcome of [`ball_confinement`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallConfinement {
    /// Whether the support stays in `2C` at steps `n`, `n+1` and `n+2`.
    pub confined: bool,
    /// Largest gauge value over the support at step `n`.
    pub gauge_radius: f64,
    /// `rho(i)`.
    pub start_gauge: f64,
    /// Whether `rho(i) <= 2^n`, the hypothesis under which confinement holds.
    pub premise: bool,
    pub checks: Vec<StepConfinement>,
}

/// Checks that the chain of the recentred mask started at `i` lies in the
/// ball `2C` of the default gauge after `n`, `n+1` and `n+2` steps.
pub fn ball_confinement(a: &Mask, i: &[i64], n: u32) -> Result<BallConfinement> {
    a.ensure_scheme()?;
    check_start(a, i)?;
    let centred = a.recentred();
    let gauge = default_gauge(a);
    let mut checks = Vec::with_capacity(3);
    for steps in n..=n + 2 {
        let row = kernel_row(&centred, i, steps)?;
        let mut radius: f64 = 0.0;
        for j in row.probs.keys() {
            radius = radius.max(gauge.value_int(j)?);
        }
        checks.push(StepConfinement {
            steps,
            gauge_radius: radius,
            confined: radius <= 2.0 + CONFINEMENT_SLACK,
        });
    }
    let start_gauge = gauge.value_int(i)?;
    Ok(BallConfinement {
        confined: checks.iter().all(|c| c.confined),
        gauge_radius: checks[0].gauge_radius,
        start_gauge,
        premise: start_gauge <= 2f64.powi(n as i32),
        checks,
    })
}

/// Distance between the iterated value `(S^n x)_i` and the one-shot
/// barycenter of the data with weights `p_n(i, .)`.
pub fn nonassociativity_gap(a: &Mask, x: &GridData, i: &[i64], n: u32) -> Result<f64> {
    a.ensure_scheme()?;
    check_start(a, i)?;
    let mut level = x.clone();
    for _ in 0..n {
        level = subdivide(a, &level)?;
    }
    if !level.interior().contains(i) {
        return Err(Error::domain(format!(
            "index {i:?} is outside the level-{n} interior {:?}",
            level.interior()
        )));
    }
    let row = kernel_row(a, i, n)?;
    let total = row.total();
    let points = row.probs.keys().map(|j| x.get(j).clone()).collect();
    let weights = row.probs.values().map(|w| w / total).collect();
    let one_shot = weighted_barycenter(&BarycenterProblem::new(points, weights)?)?;
    distance(level.get(i), &one_shot)
}

//! The linear scheme `(S x)_i = sum_j a_{i-2j} x_j` on real data, the cascade
//! algorithm for the refinable function, and contractivity certificates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{contractivity_on, minimal_window_width, refine, Extension, Grid, IndexBox};
use crate::masks::{default_gauge, iterated_mask, BoxGauge, Mask};
use crate::stats::geometric_fit;

/// Level cap used when a convergence test consults the certificate.
pub const CERTIFICATE_CAP: u32 = 8;
/// Resolution `2^-6` of the sweep over shifts when computing `M`.
const LATTICE_SWEEP: i64 = 64;
/// Fitted rates must stay below `1 - RATE_MARGIN` to count as decay.
pub const RATE_MARGIN: f64 = 1e-3;

/// One step of the linear scheme. The mask must be nonnegative and satisfy
/// the sum rule.
pub fn linear_subdivide(a: &Mask, x: &Grid<f64>) -> Result<Grid<f64>> {
    a.ensure_scheme()?;
    refine(a, x, |_, terms| {
        Ok(terms.iter().fold(0.0, |acc, (v, w)| acc + w * **v))
    })
}

/// Samples of the refinable function at level `n`: `values[i] ~ phi(i / 2^n)`,
/// taken as the iterated mask `a^(n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinableSamples {
    /// Mask the cascade was run on.
    pub mask: Mask,
    pub level: u32,
    pub values: Mask,
    /// `cauchy_residual + midpoint_deviation`.
    pub eps_n: f64,
    /// `max_i |a^(n)_i - a^(n+1)_{2i}|`.
    pub cauchy_residual: f64,
    /// Largest deviation of a level-`n+1` value at an index with odd
    /// coordinates from the multilinear average of its level-`n` neighbours.
    pub midpoint_deviation: f64,
    /// `max_i |a^(n)_i - phi(i / 2^n)|` when `phi` is known in closed form
    /// (tensor powers of the hat mask).
    pub reference_eps: Option<f64>,
}

impl RefinableSamples {
    pub fn dim(&self) -> usize {
        self.values.dim()
    }

    pub fn support(&self) -> IndexBox {
        self.values.support_box()
    }

    /// Sample at dyadic index `i`, i.e. `phi(i / 2^level)`.
    pub fn at(&self, i: &[i64]) -> f64 {
        self.values.get(i)
    }
}

fn hat(t: f64) -> f64 {
    (1.0 - t.abs()).max(0.0)
}

/// Runs the cascade algorithm to level `n >= 1`.
pub fn cascade(a: &Mask, n: u32) -> Result<RefinableSamples> {
    if n == 0 {
        return Err(Error::domain("cascade level must be at least 1"));
    }
    if !a.is_nonnegative() {
        return Err(Error::domain("mask has negative coefficients"));
    }
    let current = iterated_mask(a, n)?;
    let next = crate::masks::dilated_convolution(a, 2, &current)?;

    let cur_box = current.bounds();
    let next_box = next.bounds();
    let s = a.dim();

    // indices i with i or 2i in the stored boxes
    let span = IndexBox {
        lo: (0..s)
            .map(|k| cur_box.lo[k].min(next_box.lo[k].div_euclid(2)))
            .collect(),
        hi: (0..s)
            .map(|k| cur_box.hi[k].max(next_box.hi[k].div_euclid(2) + 1))
            .collect(),
    };
    let mut cauchy: f64 = 0.0;
    for i in span.iter() {
        let twice: Vec<i64> = i.iter().map(|v| 2 * v).collect();
        cauchy = cauchy.max((current.get(&i) - next.get(&twice)).abs());
    }

    let mut midpoint: f64 = 0.0;
    let fine = span.scaled(2);
    for i in fine.iter() {
        let odd: Vec<usize> = (0..s).filter(|&k| i[k].rem_euclid(2) == 1).collect();
        if odd.is_empty() {
            continue;
        }
        let base: Vec<i64> = i.iter().map(|v| v.div_euclid(2)).collect();
        let corners = 1usize << odd.len();
        let mut avg = 0.0;
        for mask_bits in 0..corners {
            let mut corner = base.clone();
            for (b, &k) in odd.iter().enumerate() {
                corner[k] += ((mask_bits >> b) & 1) as i64;
            }
            avg += current.get(&corner);
        }
        avg /= corners as f64;
        midpoint = midpoint.max((next.get(&i) - avg).abs());
    }

    let reference_eps = if a.trimmed() == Mask::hat_power(s) {
        let scale = (1i64 << n) as f64;
        let mut worst: f64 = 0.0;
        for i in span.iter() {
            let phi: f64 = i.iter().map(|&v| hat(v as f64 / scale)).product();
            worst = worst.max((current.get(&i) - phi).abs());
        }
        Some(worst)
    } else {
        None
    };

    Ok(RefinableSamples {
        mask: a.clone(),
        level: n,
        values: current,
        eps_n: cauchy + midpoint,
        cauchy_residual: cauchy,
        midpoint_deviation: midpoint,
        reference_eps,
    })
}

/// `max_t |sum_j phi(t - j) - 1|` over the dyadic points `t` of one period,
/// evaluated on the level-`n` samples (coset sums modulo `2^n`).
pub fn partition_of_unity_residual(r: &RefinableSamples) -> f64 {
    let period = 1i64 << r.level;
    let residues = IndexBox::cube(r.dim(), 0, period - 1);
    let mut sums = vec![0.0; residues.len()];
    for (idx, v) in r.values.support() {
        let key: Vec<i64> = idx.iter().map(|i| i.rem_euclid(period)).collect();
        sums[residues.linear_index(&key)] += v;
    }
    sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
}

/// Values of the weak-contractivity bound at one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCertificate {
    pub level: u32,
    pub alpha: f64,
    pub eps: f64,
    pub gamma: f64,
}

/// Weak contractivity certificate `gamma_n = 1 - alpha_n + 2 eps_n + M^2 eps_n^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractivityCertificate {
    pub alpha_n: f64,
    pub eps_n: f64,
    #[serde(rename = "M")]
    pub m: u64,
    pub gamma_n: f64,
    /// Smallest level with `gamma_n < 1`.
    pub n0: Option<u32>,
    pub found: bool,
    pub gauge: BoxGauge,
    pub levels: Vec<LevelCertificate>,
}

pub fn gamma_bound(alpha: f64, eps: f64, m: u64) -> f64 {
    let m = m as f64;
    1.0 - alpha + 2.0 * eps + m * m * eps * eps
}

/// `max_t |Z^s ∩ (t + Omega)|` for the box `Omega` of the gauge, sweeping `t`
/// over the unit cell at resolution `2^-6`.
pub fn lattice_count(gauge: &BoxGauge) -> u64 {
    gauge
        .half_widths()
        .iter()
        .map(|&c| {
            (0..LATTICE_SWEEP)
                .map(|m| {
                    let t = m as f64 / LATTICE_SWEEP as f64;
                    ((t + c).floor() - (t - c).ceil() + 1.0) as u64
                })
                .max()
                .unwrap_or(0)
        })
        .product()
}

/// `min psi(s, t)` over dyadic pairs at level `n` with `gauge(t - s) < 2^{1-n}`,
/// where `psi(s, t) = sum_i phi(t - i) phi(s - i)` is evaluated on the samples.
pub fn near_diagonal_overlap(samples: &Mask, n: u32, gauge: &BoxGauge) -> f64 {
    let s = samples.dim();
    let period = 1i64 << n;
    let reach = gauge.strict_reach(2.0);
    let offsets = IndexBox {
        lo: reach.iter().map(|r| -r).collect(),
        hi: reach,
    };
    let support = samples.support_box();
    let mut alpha = f64::INFINITY;
    for sigma in IndexBox::cube(s, 0, period - 1).iter() {
        // shifts i with sigma - period * i in the support
        let shifts = IndexBox {
            lo: (0..s)
                .map(|k| -(support.hi[k] - sigma[k]).div_euclid(period))
                .collect(),
            hi: (0..s)
                .map(|k| (sigma[k] - support.lo[k]).div_euclid(period))
                .collect(),
        };
        let terms: Vec<(Vec<i64>, f64)> = shifts
            .iter()
            .filter_map(|i| {
                let at: Vec<i64> = (0..s).map(|k| sigma[k] - period * i[k]).collect();
                let v = samples.get(&at);
                (v != 0.0).then_some((at, v))
            })
            .collect();
        for delta in offsets.iter() {
            let psi: f64 = terms
                .iter()
                .map(|(at, v)| {
                    let shifted: Vec<i64> = at.iter().zip(&delta).map(|(a, d)| a + d).collect();
                    v * samples.get(&shifted)
                })
                .sum();
            alpha = alpha.min(psi);
        }
    }
    alpha
}

/// Searches levels `1..=level_cap` for `gamma_n < 1`.
pub fn contractivity_certificate(a: &Mask, level_cap: u32) -> Result<ContractivityCertificate> {
    a.ensure_scheme()?;
    if level_cap == 0 {
        return Err(Error::domain("level cap must be at least 1"));
    }
    let centred = a.recentred();
    let gauge = default_gauge(a);
    let m = lattice_count(&gauge);
    let mut levels = Vec::new();
    for n in 1..=level_cap {
        let samples = cascade(&centred, n)?;
        let alpha = near_diagonal_overlap(&samples.values, n, &gauge);
        let eps = samples.eps_n;
        levels.push(LevelCertificate {
            level: n,
            alpha,
            eps,
            gamma: gamma_bound(alpha, eps, m),
        });
    }
    let chosen = levels.iter().find(|l| l.gamma < 1.0);
    let n0 = chosen.map(|l| l.level);
    let pick = chosen.unwrap_or_else(|| levels.last().expect("at least one level"));
    Ok(ContractivityCertificate {
        alpha_n: pick.alpha,
        eps_n: pick.eps,
        m,
        gamma_n: pick.gamma,
        n0,
        found: n0.is_some(),
        gauge,
        levels,
    })
}

/// Outcome of [`linear_convergence_test`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearConvergence {
    pub converges: bool,
    /// Largest `D(S^n x) / (gamma^n D(x))` seen over trials and levels.
    #[serde(rename = "C")]
    pub c: f64,
    /// Largest fitted rate over trials.
    pub gamma: f64,
    pub trial_gammas: Vec<f64>,
    pub certificate_found: bool,
}

/// Default data window `[0, w]^s` for random trials that survives `levels`
/// refinements with a nonempty interior.
pub fn trial_window(a: &Mask, levels: u32) -> IndexBox {
    let base = if a.dim() == 1 { 15 } else { 5 };
    let need = minimal_window_width(&a.support_box(), levels);
    let width = need.iter().map(|w| (w + 3).max(base)).max().unwrap_or(base);
    IndexBox::cube(a.dim(), 0, width)
}

/// Per-trial generator: ChaCha8 seeded with `seed`, stream `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Per-level `D_inf` series of the linear scheme on `x`.
pub fn linear_d_inf_series(a: &Mask, x: &Grid<f64>, n_max: u32) -> Result<Vec<f64>> {
    let unit = BoxGauge::unit(a.dim());
    let dist = |p: &f64, q: &f64| Ok((p - q).abs());
    let mut series = vec![contractivity_on(x, &unit, dist)?];
    let mut cur = x.clone();
    for _ in 0..n_max {
        cur = linear_subdivide(a, &cur)?;
        if cur.interior().is_empty() {
            return Err(Error::domain(
                "data window too small for the requested levels",
            ));
        }
        series.push(contractivity_on(&cur, &unit, dist)?);
    }
    Ok(series)
}

/// Fits `D_inf(S^n x) ~ C gamma^n` on random real data (least squares on
/// `log D_inf` over `n in [2, n_max]`).
pub fn linear_convergence_test(
    a: &Mask,
    trials: usize,
    n_max: u32,
    seed: u64,
) -> Result<LinearConvergence> {
    a.ensure_scheme()?;
    if n_max < 2 || trials == 0 {
        return Err(Error::domain("need at least one trial and n_max >= 2"));
    }
    let window = trial_window(a, n_max);
    let first = if n_max >= 3 { 2 } else { 1 };
    let mut series_all = Vec::new();
    let mut trial_gammas = Vec::new();
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        let series = loop {
            let x = Grid::from_fn(window.clone(), Extension::ConstantNearest, |_| {
                rng.gen::<f64>()
            })?;
            let series = linear_d_inf_series(a, &x, n_max)?;
            if series[0] > 0.0 {
                break series;
            }
        };
        let (_, g) = geometric_fit(&series, first, f64::MIN_POSITIVE)
            .ok_or_else(|| Error::numeric("degenerate fit"))?;
        trial_gammas.push(g);
        series_all.push(series);
    }
    let gamma = trial_gammas.iter().copied().fold(0.0, f64::max);
    let c = series_all
        .iter()
        .flat_map(|s| {
            let d0 = s[0];
            s.iter()
                .enumerate()
                .map(move |(n, d)| d / (gamma.powi(n as i32) * d0))
        })
        .fold(0.0, f64::max);
    let certificate_found = contractivity_certificate(a, CERTIFICATE_CAP)?.found;
    Ok(LinearConvergence {
        converges: gamma < 1.0 - RATE_MARGIN,
        c,
        gamma,
        trial_gammas,
        certificate_found,
    })
}

//! Barycentric subdivision `(S x)_i = argmin_y sum_j a_{i-2j} d(x_j, y)^2` on
//! data with values in a Hadamard space, and the diagnostics built on it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    contractivity_on, minimal_window_width, refine, refined_interior, refined_window, Extension,
    Grid, IndexBox,
};
use crate::linear::{trial_rng, trial_window, RATE_MARGIN};
use crate::masks::{default_gauge, BoxGauge, Mask};
use crate::spaces::{
    distance, geodesic_point, sample_point, weighted_barycenter, BarycenterProblem,
    SpaceDescriptor, SpacePoint,
};
use crate::stats::geometric_fit;

/// Attempts per trial when the barycenter solver fails on random data.
pub const MAX_RESAMPLES: usize = 3;

/// Points of one space over a finite window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDataJson", into = "GridDataJson")]
pub struct GridData {
    descriptor: SpaceDescriptor,
    grid: Grid<SpacePoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GridDataJson {
    descriptor: SpaceDescriptor,
    window: IndexBox,
    #[serde(default)]
    extension: Extension,
    points: Vec<SpacePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interior: Option<IndexBox>,
}

impl TryFrom<GridDataJson> for GridData {
    type Error = Error;

    fn try_from(raw: GridDataJson) -> Result<Self> {
        let data = GridData::new(raw.descriptor, raw.window, raw.extension, raw.points)?;
        match raw.interior {
            None => Ok(data),
            Some(interior) => {
                if interior.dim() != data.dim() || !data.window().contains_box(&interior) {
                    return Err(Error::structural("interior must lie inside the window"));
                }
                Ok(data.with_interior(interior))
            }
        }
    }
}

impl From<GridData> for GridDataJson {
    fn from(d: GridData) -> Self {
        let interior = Some(d.grid.interior().clone());
        let window = d.grid.window().clone();
        let extension = d.grid.extension();
        GridDataJson {
            descriptor: d.descriptor,
            window,
            extension,
            points: d.grid.into_values(),
            interior,
        }
    }
}

impl GridData {
    /// Points in row-major order over `window`.
    pub fn new(
        descriptor: SpaceDescriptor,
        window: IndexBox,
        extension: Extension,
        points: Vec<SpacePoint>,
    ) -> Result<Self> {
        if let Some(bad) = points.iter().find(|p| p.descriptor() != descriptor) {
            return Err(Error::structural(format!(
                "point of {} in data declared as {descriptor}",
                bad.descriptor()
            )));
        }
        Ok(GridData {
            descriptor,
            grid: Grid::new(window, extension, points)?,
        })
    }

    pub fn from_fn(
        descriptor: SpaceDescriptor,
        window: IndexBox,
        extension: Extension,
        f: impl FnMut(&[i64]) -> SpacePoint,
    ) -> Result<Self> {
        let grid = Grid::from_fn(window, extension, f)?;
        GridData::from_grid(descriptor, grid)
    }

    fn from_grid(descriptor: SpaceDescriptor, grid: Grid<SpacePoint>) -> Result<Self> {
        if let Some(bad) = grid.values().iter().find(|p| p.descriptor() != descriptor) {
            return Err(Error::structural(format!(
                "point of {} in data declared as {descriptor}",
                bad.descriptor()
            )));
        }
        Ok(GridData { descriptor, grid })
    }

    /// Random data from the space's standard sampler.
    pub fn random<R: Rng + ?Sized>(
        descriptor: SpaceDescriptor,
        window: IndexBox,
        extension: Extension,
        rng: &mut R,
    ) -> Result<Self> {
        GridData::from_fn(descriptor, window, extension, |_| {
            sample_point(descriptor, rng)
        })
    }

    fn with_interior(self, interior: IndexBox) -> Self {
        GridData {
            descriptor: self.descriptor,
            grid: self.grid.with_interior(interior),
        }
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        self.descriptor
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn grid(&self) -> &Grid<SpacePoint> {
        &self.grid
    }

    pub fn window(&self) -> &IndexBox {
        self.grid.window()
    }

    pub fn interior(&self) -> &IndexBox {
        self.grid.interior()
    }

    pub fn extension(&self) -> Extension {
        self.grid.extension()
    }

    pub fn points(&self) -> &[SpacePoint] {
        self.grid.values()
    }

    pub fn get(&self, idx: &[i64]) -> &SpacePoint {
        self.grid.get(idx)
    }
}

/// One step of the barycentric scheme.
pub fn subdivide(a: &Mask, x: &GridData) -> Result<GridData> {
    a.ensure_scheme()?;
    let grid = refine(a, x.grid(), |i, terms| {
        let points = terms.iter().map(|(p, _)| (*p).clone()).collect();
        let weights = terms.iter().map(|(_, w)| *w).collect();
        BarycenterProblem::new(points, weights)
            .and_then(|prob| weighted_barycenter(&prob))
            .map_err(|e| Error::AtIndex {
                index: i.to_vec(),
                source: Box::new(e),
            })
    })?;
    Ok(GridData {
        descriptor: x.descriptor(),
        grid,
    })
}

/// Levels `S^0 x, ..., S^n x` with their contractivity values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace {
    pub levels: Vec<GridData>,
    pub interiors: Vec<IndexBox>,
    /// `D_inf` on each level's interior.
    pub d_inf_series: Vec<f64>,
    /// `D_Omega` for the mask's default gauge.
    pub gauge_series: Vec<f64>,
    pub gauge: BoxGauge,
}

/// Checks that the interior of `x` survives `n` steps of a mask with the
/// given support.
fn check_levels(a: &Mask, x: &GridData, n: u32) -> Result<()> {
    let support = a.support_box();
    let mut window = x.window().clone();
    let mut interior = x.interior().clone();
    for _ in 0..n {
        window = refined_window(&window, x.extension());
        interior = refined_interior(&interior, &support).intersect(&window);
    }
    if interior.is_empty() {
        let need = minimal_window_width(&support, n);
        return Err(Error::domain(format!(
            "interior vanishes after {n} levels; need an interior of width at least {need:?} (hi - lo per axis), have {:?}",
            x.interior()
                .lo
                .iter()
                .zip(&x.interior().hi)
                .map(|(l, h)| h - l)
                .collect::<Vec<_>>()
        )));
    }
    Ok(())
}

/// Applies the scheme `n >= 1` times.
pub fn iterate(a: &Mask, x: &GridData, n: u32) -> Result<IterateTrace> {
    a.ensure_scheme()?;
    if n == 0 {
        return Err(Error::domain("iterate needs at least one level"));
    }
    check_levels(a, x, n)?;
    let gauge = default_gauge(a);
    let unit = BoxGauge::unit(a.dim());
    let mut levels = vec![x.clone()];
    for _ in 0..n {
        let next = subdivide(a, levels.last().expect("nonempty"))?;
        levels.push(next);
    }
    let mut d_inf_series = Vec::with_capacity(levels.len());
    let mut gauge_series = Vec::with_capacity(levels.len());
    for level in &levels {
        d_inf_series.push(contractivity_d(level, &unit)?);
        gauge_series.push(contractivity_d(level, &gauge)?);
    }
    Ok(IterateTrace {
        interiors: levels.iter().map(|l| l.interior().clone()).collect(),
        levels,
        d_inf_series,
        gauge_series,
        gauge,
    })
}

/// `sup d(x_i, x_j)` over interior pairs with `gauge(i - j) < 2`.
pub fn contractivity_d(x: &GridData, gauge: &BoxGauge) -> Result<f64> {
    contractivity_on(x.grid(), gauge, distance)
}

/// Outcome of [`empirical_gamma`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalGamma {
    pub gamma_hat: f64,
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    pub trial_gammas: Vec<f64>,
    /// `D_inf` series of every trial.
    pub series: Vec<Vec<f64>>,
}

/// Fits `D_inf(S^n x) ~ C gamma^n` on random data from `space` and reports
/// the largest rate over trials.
pub fn empirical_gamma(
    a: &Mask,
    space: SpaceDescriptor,
    trials: usize,
    n_max: u32,
    seed: u64,
) -> Result<EmpiricalGamma> {
    a.ensure_scheme()?;
    if n_max < 2 || trials == 0 {
        return Err(Error::domain("need at least one trial and n_max >= 2"));
    }
    let window = trial_window(a, n_max);
    let first = if n_max >= 3 { 2 } else { 1 };
    let mut series = Vec::with_capacity(trials);
    let mut trial_gammas = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        let mut attempt = 0;
        let s = loop {
            let x = GridData::random(space, window.clone(), Extension::ConstantNearest, &mut rng)?;
            match iterate(a, &x, n_max) {
                Ok(trace) if trace.d_inf_series[0] > 0.0 => break trace.d_inf_series,
                Ok(_) => {}
                Err(e) if e.kind() == "solver" && attempt + 1 < MAX_RESAMPLES => {}
                Err(e) => return Err(e),
            }
            attempt += 1;
        };
        let (_, g) = geometric_fit(&s, first, f64::MIN_POSITIVE)
            .ok_or_else(|| Error::numeric("degenerate fit"))?;
        trial_gammas.push(g);
        series.push(s);
    }
    let gamma_hat = trial_gammas.iter().copied().fold(0.0, f64::max);
    let c_hat = series
        .iter()
        .flat_map(|s| {
            let d0 = s[0];
            s.iter()
                .enumerate()
                .map(move |(n, d)| d / (gamma_hat.powi(n as i32) * d0))
        })
        .fold(0.0, f64::max);
    Ok(EmpiricalGamma {
        gamma_hat,
        c_hat,
        trial_gammas,
        series,
    })
}

/// One step of the scheme of the tensor-power hat mask: even indices copy,
/// indices with one odd coordinate take the geodesic midpoint of their two
/// neighbours, and indices with several odd coordinates take the barycenter
/// of the surrounding cell's corners with equal weights.
pub fn bspline_comparison(x: &GridData) -> Result<GridData> {
    let s = x.dim();
    let window = refined_window(x.window(), x.extension());
    let interior =
        refined_interior(x.interior(), &Mask::hat_power(s).support_box()).intersect(&window);
    let mut values = Vec::with_capacity(window.len());
    for i in window.iter() {
        let base: Vec<i64> = i.iter().map(|v| v.div_euclid(2)).collect();
        let odd: Vec<usize> = (0..s).filter(|&k| i[k].rem_euclid(2) == 1).collect();
        let value = match odd.len() {
            0 => x.get(&base).clone(),
            1 => {
                let mut next = base.clone();
                next[odd[0]] += 1;
                geodesic_point(x.get(&base), x.get(&next), 0.5).map_err(|e| at_index(&i, e))?
            }
            m => {
                let corners = 1usize << m;
                // same order as the stencil of the tensor hat mask
                let points = IndexBox::cube(m, 0, 1)
                    .iter()
                    .map(|bits| {
                        let mut c = base.clone();
                        for (b, &k) in bits.iter().zip(&odd) {
                            c[k] += 1 - b;
                        }
                        x.get(&c).clone()
                    })
                    .collect();
                let weights = vec![1.0 / corners as f64; corners];
                BarycenterProblem::new(points, weights)
                    .and_then(|p| weighted_barycenter(&p))
                    .map_err(|e| at_index(&i, e))?
            }
        };
        values.push(value);
    }
    let grid = Grid::new(window, x.extension(), values)?.with_interior(interior);
    Ok(GridData {
        descriptor: x.descriptor(),
        grid,
    })
}

fn at_index(i: &[i64], e: Error) -> Error {
    Error::AtIndex {
        index: i.to_vec(),
        source: Box::new(e),
    }
}

/// `sup d(p_i, q_i)` over the indices interior to both grids.
pub fn interior_distance(p: &GridData, q: &GridData) -> Result<f64> {
    let shared = p.interior().intersect(q.interior());
    let mut worst: f64 = 0.0;
    for i in shared.iter() {
        worst = worst.max(distance(p.get(&i), q.get(&i))?);
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converging,
    Inconclusive,
}

/// Outcome of [`convergence_diagnostic`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceDiagnostic {
    /// `sup_i d((T S^n x)_i, (S^{n+1} x)_i)` for `n = 0..n_max`.
    pub cauchy_series: Vec<f64>,
    /// Fitted ratio over the last half of the levels.
    pub ratio: f64,
    pub verdict: Verdict,
}

/// Series below this multiple of `max(1, D_inf(x))` count as zero.
const NEGLIGIBLE: f64 = 1e-9;

/// Compares `S^{n+1} x` with the hat-scheme upsampling of `S^n x`. A finite
/// window can only support the verdicts "converging" and "inconclusive".
pub fn convergence_diagnostic(a: &Mask, x: &GridData, n_max: u32) -> Result<ConvergenceDiagnostic> {
    let trace = iterate(a, x, n_max)?;
    let mut cauchy_series = Vec::with_capacity(n_max as usize);
    for w in trace.levels.windows(2) {
        let upsampled = bspline_comparison(&w[0])?;
        cauchy_series.push(interior_distance(&upsampled, &w[1])?);
    }
    let len = cauchy_series.len();
    let first = (len / 2).min(len.saturating_sub(2));
    let tail_max = cauchy_series[first..].iter().copied().fold(0.0, f64::max);
    let scale = trace.d_inf_series[0].max(1.0);
    let (ratio, verdict) = if tail_max <= NEGLIGIBLE * scale {
        (0.0, Verdict::Converging)
    } else {
        let ratio = if len >= 2 {
            geometric_fit(&cauchy_series, first, f64::MIN_POSITIVE)
                .map(|(_, g)| g)
                .unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let verdict = if ratio < 1.0 - RATE_MARGIN {
            Verdict::Converging
        } else {
            Verdict::Inconclusive
        };
        (ratio, verdict)
    };
    Ok(ConvergenceDiagnostic {
        cauchy_series,
        ratio,
        verdict,
    })
}

/// Outcome of [`approximation_error`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximationReport {
    pub sup_err: f64,
    /// `r C h`.
    pub bound: f64,
    pub ok: bool,
    pub level: u32,
    pub compared: usize,
}

/// Slack added to the bound in [`ApproximationReport::ok`].
pub const APPROX_SLACK: f64 = 1e-8;

/// Samples `x_i = f(h i)` over `window`, refines `n` times and compares
/// `(S^n x)_i` with `f(h i / 2^n)` on the interior.
pub fn approximation_error(
    a: &Mask,
    f: impl Fn(&[f64]) -> SpacePoint,
    lipschitz: f64,
    radius: f64,
    h: f64,
    n: u32,
    window: IndexBox,
) -> Result<ApproximationReport> {
    if !(h > 0.0 && lipschitz >= 0.0 && radius >= 0.0) {
        return Err(Error::domain("h must be positive, C and r nonnegative"));
    }
    let descriptor = {
        let origin = vec![0.0; window.dim()];
        f(&origin).descriptor()
    };
    let mut bad = None;
    let x = GridData::from_fn(descriptor, window, Extension::ConstantNearest, |i| {
        let t: Vec<f64> = i.iter().map(|v| h * *v as f64).collect();
        let p = f(&t);
        if p.descriptor() != descriptor && bad.is_none() {
            bad = Some(p.descriptor());
        }
        p
    });
    if let Some(d) = bad {
        return Err(Error::structural(format!(
            "sampler returned a point of {d}, expected {descriptor}"
        )));
    }
    let x = x?;
    let mut level = x;
    if n > 0 {
        check_levels(a, &level, n)?;
    }
    for _ in 0..n {
        level = subdivide(a, &level)?;
    }
    let scale = h / (1i64 << n) as f64;
    let mut sup_err: f64 = 0.0;
    let mut compared = 0;
    for i in level.interior().iter() {
        let t: Vec<f64> = i.iter().map(|v| scale * *v as f64).collect();
        sup_err = sup_err.max(distance(level.get(&i), &f(&t))?);
        compared += 1;
    }
    let bound = radius * lipschitz * h;
    Ok(ApproximationReport {
        sup_err,
        bound,
        ok: sup_err <= bound + APPROX_SLACK,
        level: n,
        compared,
    })
}

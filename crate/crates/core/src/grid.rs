//! Integer boxes in `Z^s` and finite windows of data over them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive integer box `[lo_0, hi_0] x ... x [lo_{s-1}, hi_{s-1}]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl IndexBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::structural(
                "index box bounds must be nonempty and of equal length",
            ));
        }
        Ok(IndexBox { lo, hi })
    }

    /// `[lo, hi]^s`.
    pub fn cube(s: usize, lo: i64, hi: i64) -> Self {
        IndexBox {
            lo: vec![lo; s],
            hi: vec![hi; s],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| h < l)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| if h < l { 0 } else { (h - l + 1) as usize })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    /// Number of points, or `None` if it overflows `usize`.
    pub fn checked_len(&self) -> Option<usize> {
        self.shape()
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
    }

    pub fn contains(&self, idx: &[i64]) -> bool {
        idx.len() == self.dim()
            && idx
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(i, (l, h))| l <= i && i <= h)
    }

    /// Contains every point of `other` (an empty `other` is always contained).
    pub fn contains_box(&self, other: &IndexBox) -> bool {
        other.is_empty()
            || self
                .lo
                .iter()
                .zip(&self.hi)
                .zip(other.lo.iter().zip(&other.hi))
                .all(|((l, h), (ol, oh))| l <= ol && oh <= h)
    }

    pub fn intersect(&self, other: &IndexBox) -> IndexBox {
        IndexBox {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| *a.max(b))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| *a.min(b))
                .collect(),
        }
    }

    /// Row-major position of `idx` (which must be contained).
    pub fn linear_index(&self, idx: &[i64]) -> usize {
        let mut pos = 0usize;
        for k in 0..self.dim() {
            let extent = (self.hi[k] - self.lo[k] + 1) as usize;
            pos = pos * extent + (idx[k] - self.lo[k]) as usize;
        }
        pos
    }

    /// Multi-index at row-major position `pos`.
    pub fn index_at(&self, mut pos: usize) -> Vec<i64> {
        let shape = self.shape();
        let mut idx = vec![0i64; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = self.lo[k] + (pos % shape[k]) as i64;
            pos /= shape[k];
        }
        idx
    }

    /// Iterates over all points in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        let n = if self.is_empty() { 0 } else { self.len() };
        (0..n).map(move |p| self.index_at(p))
    }

    pub fn scaled(&self, factor: i64) -> IndexBox {
        IndexBox {
            lo: self.lo.iter().map(|v| v * factor).collect(),
            hi: self.hi.iter().map(|v| v * factor).collect(),
        }
    }
}

/// How data is continued outside its window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// Clamp each coordinate into the window.
    #[default]
    ConstantNearest,
    /// Wrap each coordinate modulo the window extent.
    Periodic,
}

impl Extension {
    /// Maps an arbitrary index into `window` according to the policy.
    pub fn resolve(self, window: &IndexBox, idx: &[i64]) -> Vec<i64> {
        idx.iter()
            .enumerate()
            .map(|(k, &i)| {
                let (lo, hi) = (window.lo[k], window.hi[k]);
                match self {
                    Extension::ConstantNearest => i.clamp(lo, hi),
                    Extension::Periodic => lo + (i - lo).rem_euclid(hi - lo + 1),
                }
            })
            .collect()
    }
}

/// Values over a finite window of `Z^s`, continued outside by an
/// [`Extension`], with the sub-box (`interior`) on which values do not depend
/// on the extension.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    window: IndexBox,
    interior: IndexBox,
    extension: Extension,
    values: Vec<T>,
}

impl<T> Grid<T> {
    pub fn new(window: IndexBox, extension: Extension, values: Vec<T>) -> Result<Self> {
        if window.is_empty() {
            return Err(Error::structural("grid window is empty"));
        }
        if window.checked_len() != Some(values.len()) {
            return Err(Error::structural(format!(
                "window holds {} points but {} values were given",
                window.len(),
                values.len()
            )));
        }
        Ok(Grid {
            interior: window.clone(),
            window,
            extension,
            values,
        })
    }

    pub(crate) fn with_interior(mut self, interior: IndexBox) -> Self {
        self.interior = interior;
        self
    }

    pub fn from_fn(
        window: IndexBox,
        extension: Extension,
        mut f: impl FnMut(&[i64]) -> T,
    ) -> Result<Self> {
        let values = window.iter().map(|i| f(&i)).collect();
        Grid::new(window, extension, values)
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn window(&self) -> &IndexBox {
        &self.window
    }

    pub fn interior(&self) -> &IndexBox {
        &self.interior
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Value at any index of `Z^s`, continued by the extension policy.
    pub fn get(&self, idx: &[i64]) -> &T {
        let pos = if self.window.contains(idx) {
            self.window.linear_index(idx)
        } else {
            self.window
                .linear_index(&self.extension.resolve(&self.window, idx))
        };
        &self.values[pos]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, &T)> + '_ {
        self.window.iter().zip(self.values.iter())
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            window: self.window.clone(),
            interior: self.interior.clone(),
            extension: self.extension,
            values: self.values.iter().map(f).collect(),
        }
    }
}

/// Output window of one refinement step: `[2 lo, 2 hi]`, or `[2 lo, 2 hi + 1]`
/// under periodic extension so that the doubled period fits exactly.
pub fn refined_window(window: &IndexBox, extension: Extension) -> IndexBox {
    let extra = match extension {
        Extension::ConstantNearest => 0,
        Extension::Periodic => 1,
    };
    IndexBox {
        lo: window.lo.iter().map(|l| 2 * l).collect(),
        hi: window.hi.iter().map(|h| 2 * h + extra).collect(),
    }
}

/// Output indices whose stencil `{j : a_{i-2j} != 0}` lies in `interior`,
/// for a mask with the given support box.
pub fn refined_interior(interior: &IndexBox, support: &IndexBox) -> IndexBox {
    IndexBox {
        lo: interior
            .lo
            .iter()
            .zip(&support.hi)
            .map(|(l, sh)| 2 * l + sh - 1)
            .collect(),
        hi: interior
            .hi
            .iter()
            .zip(&support.lo)
            .map(|(h, sl)| 2 * h + sl + 1)
            .collect(),
    }
}

/// Smallest initial window width per axis (`hi - lo`) whose interior
/// survives `levels` refinements with the given support box, starting from
/// an interior equal to the window.
pub fn minimal_window_width(support: &IndexBox, levels: u32) -> Vec<i64> {
    (0..support.dim())
        .map(|k| {
            let axis = IndexBox::cube(1, support.lo[k], support.hi[k]);
            (0i64..)
                .find(|&w| {
                    let mut window = IndexBox::cube(1, 0, w);
                    let mut interior = window.clone();
                    for _ in 0..levels {
                        window = refined_window(&window, Extension::ConstantNearest);
                        interior = refined_interior(&interior, &axis).intersect(&window);
                        if interior.is_empty() {
                            return false;
                        }
                    }
                    true
                })
                .expect("some width suffices")
        })
        .collect()
}

/// Nonzero mask coefficients grouped by parity coset, for stencil lookup.
pub(crate) struct Stencils {
    by_coset: Vec<Vec<(Vec<i64>, f64)>>,
}

impl Stencils {
    pub(crate) fn new(mask: &crate::masks::Mask) -> Self {
        let s = mask.dim();
        let mut by_coset = vec![Vec::new(); 1 << s];
        for (k, c) in mask.support() {
            by_coset[parity(&k)].push((k, c));
        }
        Stencils { by_coset }
    }

    /// Pairs `(j, a_{i-2j})` with nonzero weight, in row-major order of `i-2j`.
    pub(crate) fn at(&self, i: &[i64]) -> Vec<(Vec<i64>, f64)> {
        self.by_coset[parity(i)]
            .iter()
            .map(|(k, c)| {
                let j = i.iter().zip(k).map(|(a, b)| (a - b) / 2).collect();
                (j, *c)
            })
            .collect()
    }
}

fn parity(idx: &[i64]) -> usize {
    idx.iter()
        .fold(0usize, |acc, &i| (acc << 1) | (i.rem_euclid(2) as usize))
}

/// One refinement step `(Sx)_i = combine({(x_j, a_{i-2j})})` over the refined
/// window. `combine` receives the stencil in a fixed order.
pub(crate) fn refine<T, F>(
    mask: &crate::masks::Mask,
    x: &Grid<T>,
    mut combine: F,
) -> Result<Grid<T>>
where
    F: FnMut(&[i64], &[(&T, f64)]) -> Result<T>,
{
    if mask.dim() != x.dim() {
        return Err(Error::structural(format!(
            "{}-variate mask applied to {}-variate data",
            mask.dim(),
            x.dim()
        )));
    }
    let stencils = Stencils::new(mask);
    let window = refined_window(x.window(), x.extension());
    let interior = refined_interior(x.interior(), &mask.support_box()).intersect(&window);
    let mut values = Vec::with_capacity(window.len());
    for i in window.iter() {
        let stencil = stencils.at(&i);
        let terms: Vec<(&T, f64)> = stencil.iter().map(|(j, w)| (x.get(j), *w)).collect();
        values.push(combine(&i, &terms)?);
    }
    Ok(Grid::new(window, x.extension(), values)?.with_interior(interior))
}

/// `sup d(x_i, x_j)` over interior pairs with `gauge(i - j) < 2`.
pub(crate) fn contractivity_on<T>(
    x: &Grid<T>,
    gauge: &crate::masks::BoxGauge,
    mut dist: impl FnMut(&T, &T) -> Result<f64>,
) -> Result<f64> {
    if gauge.dim() != x.dim() {
        return Err(Error::structural("gauge and data dimensions differ"));
    }
    let reach = gauge.strict_reach(2.0);
    let offsets = IndexBox {
        lo: reach.iter().map(|r| -r).collect(),
        hi: reach.clone(),
    };
    // half of the symmetric offset set: lexicographically positive offsets
    let half: Vec<Vec<i64>> = offsets
        .iter()
        .filter(|d| d.iter().find(|v| **v != 0).is_some_and(|v| *v > 0))
        .collect();
    let interior = x.interior();
    let mut best: f64 = 0.0;
    for i in interior.iter() {
        for d in &half {
            let j: Vec<i64> = i.iter().zip(d).map(|(a, b)| a + b).collect();
            if interior.contains(&j) {
                best = best.max(dist(x.get(&i), x.get(&j))?);
            }
        }
    }
    Ok(best)
}

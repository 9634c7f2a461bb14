//! Subdivision masks: finitely supported coefficient arrays on `Z^s`,
//! their validation, iterates `a^(n)`, box gauges and tensor products.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::grid::IndexBox;

/// Tolerance on the coset sums of the basic sum rule.
pub const SUM_RULE_TOL: f64 = 1e-12;
/// Largest number of stored coefficients an iterated mask may occupy.
pub const MAX_SUPPORT_ENTRIES: usize = 1 << 22;

/// Dense coefficient array over an integer box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaskJson", into = "MaskJson")]
pub struct Mask {
    bounds: IndexBox,
    coeffs: Vec<f64>,
}

impl Mask {
    /// Builds a mask whose first stored coefficient sits at `offset`;
    /// `coeffs` is row-major with extents `shape`.
    pub fn new(offset: Vec<i64>, shape: Vec<usize>, coeffs: Vec<f64>) -> Result<Self> {
        if offset.is_empty() || offset.len() != shape.len() {
            return Err(Error::structural(
                "mask offset and shape must have the same positive length",
            ));
        }
        if shape.contains(&0) || coeffs.is_empty() {
            return Err(Error::structural("mask is empty"));
        }
        let hi = offset
            .iter()
            .zip(&shape)
            .map(|(o, n)| o + *n as i64 - 1)
            .collect();
        let bounds = IndexBox::new(offset, hi)?;
        if bounds.checked_len() != Some(coeffs.len()) {
            return Err(Error::structural(format!(
                "mask shape {:?} needs {} coefficients, got {}",
                shape,
                bounds.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::numeric("mask has non-finite coefficients"));
        }
        if !coeffs.iter().any(|&c| c > 0.0) {
            return Err(Error::structural("mask has no positive coefficient"));
        }
        Ok(Mask { bounds, coeffs })
    }

    pub fn univariate(offset: i64, coeffs: Vec<f64>) -> Result<Self> {
        let n = coeffs.len();
        Mask::new(vec![offset], vec![n], coeffs)
    }

    /// Unit impulse at the origin of `Z^s`, i.e. `a^(0)`.
    pub fn delta(s: usize) -> Self {
        Mask {
            bounds: IndexBox::cube(s, 0, 0),
            coeffs: vec![1.0],
        }
    }

    /// Linear B-spline (hat) mask `(1/2, 1, 1/2)` on `{-1, 0, 1}`.
    pub fn hat() -> Self {
        Mask::univariate(-1, vec![0.5, 1.0, 0.5]).expect("valid mask")
    }

    /// Chaikin's corner-cutting mask `(1/4, 3/4, 3/4, 1/4)` on `{0, .., 3}`.
    pub fn chaikin() -> Self {
        Mask::univariate(0, vec![0.25, 0.75, 0.75, 0.25]).expect("valid mask")
    }

    /// `s`-fold tensor power of the hat mask.
    pub fn hat_power(s: usize) -> Self {
        let mut m = Mask::hat();
        for _ in 1..s {
            m = tensor_product(&m, &Mask::hat());
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// Box of stored coefficients (may include zeros at the edges).
    pub fn bounds(&self) -> &IndexBox {
        &self.bounds
    }

    pub fn offset(&self) -> &[i64] {
        &self.bounds.lo
    }

    pub fn shape(&self) -> Vec<usize> {
        self.bounds.shape()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient at `idx`, zero outside the stored box.
    pub fn get(&self, idx: &[i64]) -> f64 {
        if self.bounds.contains(idx) {
            self.coeffs[self.bounds.linear_index(idx)]
        } else {
            0.0
        }
    }

    /// Nonzero coefficients in row-major order.
    pub fn support(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.bounds
            .iter()
            .zip(self.coeffs.iter())
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (i, *c))
    }

    /// Smallest box containing every nonzero coefficient.
    pub fn support_box(&self) -> IndexBox {
        let s = self.dim();
        let mut lo = vec![i64::MAX; s];
        let mut hi = vec![i64::MIN; s];
        for (idx, _) in self.support() {
            for k in 0..s {
                lo[k] = lo[k].min(idx[k]);
                hi[k] = hi[k].max(idx[k]);
            }
        }
        IndexBox { lo, hi }
    }

    /// Same coefficients stored on exactly the support box.
    pub fn trimmed(&self) -> Mask {
        let support = self.support_box();
        if support == self.bounds {
            return self.clone();
        }
        let coeffs = support.iter().map(|i| self.get(&i)).collect();
        Mask {
            bounds: support,
            coeffs,
        }
    }

    /// Mask `b_i = a_{i + shift}`.
    pub fn translated(&self, shift: &[i64]) -> Mask {
        Mask {
            bounds: IndexBox {
                lo: self
                    .bounds
                    .lo
                    .iter()
                    .zip(shift)
                    .map(|(l, t)| l - t)
                    .collect(),
                hi: self
                    .bounds
                    .hi
                    .iter()
                    .zip(shift)
                    .map(|(h, t)| h - t)
                    .collect(),
            },
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|&c| c >= 0.0)
    }

    /// Sums `sum_j a_{e + 2j}` over the `2^s` parity cosets `e in {0,1}^s`.
    pub fn coset_sums(&self) -> Vec<(Vec<u8>, f64)> {
        let s = self.dim();
        let mut sums = vec![0.0; 1 << s];
        for (idx, c) in self.support() {
            sums[parity_code(&idx)] += c;
        }
        sums.into_iter()
            .enumerate()
            .map(|(code, sum)| {
                (
                    (0..s).map(|k| ((code >> (s - 1 - k)) & 1) as u8).collect(),
                    sum,
                )
            })
            .collect()
    }

    /// Largest coset deviation `|sum_j a_{i-2j} - 1|`.
    pub fn sum_rule_residual(&self) -> f64 {
        self.coset_sums()
            .iter()
            .map(|(_, s)| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn satisfies_sum_rule(&self) -> bool {
        self.sum_rule_residual() <= SUM_RULE_TOL
    }

    /// Fails unless the mask is nonnegative and satisfies the sum rule, the
    /// standing assumptions of barycentric schemes.
    pub fn ensure_scheme(&self) -> Result<()> {
        if !self.is_nonnegative() {
            return Err(Error::domain("mask has negative coefficients"));
        }
        let r = self.sum_rule_residual();
        if r > SUM_RULE_TOL {
            return Err(Error::domain(format!(
                "mask violates the basic sum rule (coset residual {r:e})"
            )));
        }
        Ok(())
    }

    /// Integer translation `t` minimizing the half-widths of the support box
    /// of `b_i = a_{i+t}` around the origin.
    pub fn recentring(&self) -> Vec<i64> {
        let sb = self.support_box();
        sb.lo
            .iter()
            .zip(&sb.hi)
            .map(|(l, h)| (l + h).div_euclid(2))
            .collect()
    }

    /// The mask translated by [`Mask::recentring`].
    pub fn recentred(&self) -> Mask {
        self.translated(&self.recentring())
    }
}

fn parity_code(idx: &[i64]) -> usize {
    idx.iter()
        .fold(0usize, |acc, &i| (acc << 1) | (i.rem_euclid(2) as usize))
}

#[derive(Serialize, Deserialize)]
struct MaskJson {
    dim: usize,
    offset: Vec<i64>,
    coeffs: Value,
}

fn nested_shape(v: &Value, depth: usize, shape: &mut Vec<usize>) -> Result<()> {
    if depth == 0 {
        return Ok(());
    }
    match v {
        Value::Array(items) if !items.is_empty() => {
            shape.push(items.len());
            nested_shape(&items[0], depth - 1, shape)
        }
        _ => Err(Error::structural(
            "mask coefficients must be nonempty nested arrays",
        )),
    }
}

fn flatten_into(v: &Value, depth: usize, shape: &[usize], out: &mut Vec<f64>) -> Result<()> {
    match v {
        Value::Array(items) if depth > 0 => {
            if items.len() != shape[0] {
                return Err(Error::structural("mask coefficient array is ragged"));
            }
            items
                .iter()
                .try_for_each(|item| flatten_into(item, depth - 1, &shape[1..], out))
        }
        Value::Number(n) if depth == 0 => {
            out.push(
                n.as_f64()
                    .ok_or_else(|| Error::numeric("bad coefficient"))?,
            );
            Ok(())
        }
        _ => Err(Error::structural(
            "mask coefficient nesting does not match dim",
        )),
    }
}

fn nest(values: &[f64], shape: &[usize]) -> Value {
    if shape.len() == 1 {
        return Value::Array(values.iter().map(|v| Value::from(*v)).collect());
    }
    let stride: usize = shape[1..].iter().product();
    Value::Array(
        values
            .chunks(stride)
            .map(|chunk| nest(chunk, &shape[1..]))
            .collect(),
    )
}

impl TryFrom<MaskJson> for Mask {
    type Error = Error;
    fn try_from(raw: MaskJson) -> Result<Self> {
        if raw.dim == 0 || raw.offset.len() != raw.dim {
            return Err(Error::structural("mask offset length must equal dim"));
        }
        let mut shape = Vec::new();
        nested_shape(&raw.coeffs, raw.dim, &mut shape)?;
        let mut coeffs = Vec::new();
        flatten_into(&raw.coeffs, raw.dim, &shape, &mut coeffs)?;
        Mask::new(raw.offset, shape, coeffs)
    }
}

impl From<Mask> for MaskJson {
    fn from(m: Mask) -> Self {
        MaskJson {
            dim: m.dim(),
            offset: m.offset().to_vec(),
            coeffs: nest(&m.coeffs, &m.shape()),
        }
    }
}

/// `out_i = sum_k left_{i - factor k} right_k`.
///
/// With `factor = 2^m`, `left = a^(m)` and `right = a^(n)` this is the
/// Chapman-Kolmogorov composition yielding `a^(m+n)`.
pub fn dilated_convolution(left: &Mask, factor: i64, right: &Mask) -> Result<Mask> {
    if left.dim() != right.dim() {
        return Err(Error::structural("masks of different dimension"));
    }
    let (lb, rb) = (left.support_box(), right.support_box());
    let bounds = IndexBox {
        lo: lb
            .lo
            .iter()
            .zip(&rb.lo)
            .map(|(l, r)| l + factor * r)
            .collect(),
        hi: lb
            .hi
            .iter()
            .zip(&rb.hi)
            .map(|(l, r)| l + factor * r)
            .collect(),
    };
    match bounds.checked_len() {
        Some(n) if n <= MAX_SUPPORT_ENTRIES => {}
        _ => {
            return Err(Error::Resource(format!(
                "iterated mask would span {:?} entries (cap {MAX_SUPPORT_ENTRIES})",
                bounds.shape()
            )))
        }
    }
    let mut coeffs = vec![0.0; bounds.len()];
    let left_support: Vec<_> = left.support().collect();
    let mut target = vec![0i64; left.dim()];
    for (k, rk) in right.support() {
        for (l, al) in &left_support {
            for d in 0..target.len() {
                target[d] = l[d] + factor * k[d];
            }
            coeffs[bounds.linear_index(&target)] += al * rk;
        }
    }
    Ok(Mask { bounds, coeffs })
}

/// The iterated mask `a^(n)`: `a^(0) = delta`, `a^(n+1)_i = sum_j a_{i-2j} a^(n)_j`.
pub fn iterated_mask(a: &Mask, n: u32) -> Result<Mask> {
    let mut current = Mask::delta(a.dim());
    for _ in 0..n {
        current = dilated_convolution(a, 2, &current)?;
    }
    Ok(current)
}

/// Result of [`validate_mask`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskReport {
    pub sum_rule_ok: bool,
    /// Largest `|sum_j a_{i-2j} - 1|` over the parity cosets.
    pub sum_rule_residual: f64,
    pub coset_sums: Vec<CosetSum>,
    pub nonnegative_ok: bool,
    pub univariate_zhou: Option<ZhouReport>,
    pub support_box: IndexBox,
    /// Translation applied before building the default gauge.
    pub recentring: Vec<i64>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosetSum {
    pub coset: Vec<u8>,
    pub sum: f64,
    pub residual: f64,
}

/// Support criterion for univariate masks, evaluated after translating the
/// support to `{0, ..., last}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZhouReport {
    pub translation: i64,
    pub last: i64,
    /// gcd of the positive support indices (0 when the support is `{0}`).
    pub support_gcd: u64,
    pub support_gcd_ok: bool,
    pub first_coeff: f64,
    pub last_coeff: f64,
    /// `0 < a_0 < 1` and `0 < a_last < 1`.
    pub endpoint_ok: bool,
    /// The condition as literally stated with `a_1`: `0 < a_0 < 1` and `0 < a_1 < 1`.
    pub literal_a0_a1_ok: bool,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn in_open_unit(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

fn zhou_report(a: &Mask) -> ZhouReport {
    let sb = a.support_box();
    let (first, last_abs) = (sb.lo[0], sb.hi[0]);
    let support_gcd = a
        .support()
        .map(|(i, _)| (i[0] - first) as u64)
        .filter(|&i| i > 0)
        .fold(0, gcd);
    let coeff = |i: i64| a.get(&[first + i]);
    let last = last_abs - first;
    let (a0, an) = (coeff(0), coeff(last));
    ZhouReport {
        translation: first,
        last,
        support_gcd,
        support_gcd_ok: support_gcd == 1,
        first_coeff: a0,
        last_coeff: an,
        endpoint_ok: in_open_unit(a0) && in_open_unit(an),
        literal_a0_a1_ok: in_open_unit(a0) && in_open_unit(coeff(1)),
    }
}

/// Checks the basic sum rule, nonnegativity and, for `s = 1`, the support
/// criterion of Zhou.
pub fn validate_mask(a: &Mask) -> MaskReport {
    let coset_sums: Vec<CosetSum> = a
        .coset_sums()
        .into_iter()
        .map(|(coset, sum)| CosetSum {
            coset,
            sum,
            residual: (sum - 1.0).abs(),
        })
        .collect();
    let residual = coset_sums.iter().map(|c| c.residual).fold(0.0, f64::max);
    let recentring = a.recentring();
    let mut notes = Vec::new();
    if recentring.iter().any(|&t| t != 0) {
        notes.push(format!(
            "support recentred by integer translation {recentring:?} for the default gauge"
        ));
    }
    let univariate_zhou = if a.dim() == 1 {
        Some(zhou_report(a))
    } else {
        notes.push("zonotope support criterion is not evaluated for s >= 2".to_string());
        None
    };
    MaskReport {
        sum_rule_ok: residual <= SUM_RULE_TOL,
        sum_rule_residual: residual,
        coset_sums,
        nonnegative_ok: a.is_nonnegative(),
        univariate_zhou,
        support_box: a.support_box(),
        recentring,
        notes,
    }
}

/// Axis-aligned box `prod [-c_k, c_k]` and its Minkowski functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxGauge {
    half_widths: Vec<f64>,
}

impl BoxGauge {
    pub fn new(half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.is_empty() {
            return Err(Error::structural("gauge needs at least one axis"));
        }
        if half_widths.iter().any(|c| !c.is_finite() || *c <= 0.0) {
            return Err(Error::domain(
                "gauge half-widths must be positive and finite",
            ));
        }
        Ok(BoxGauge { half_widths })
    }

    /// Unit cube, whose functional is the max-norm.
    pub fn unit(s: usize) -> Self {
        BoxGauge {
            half_widths: vec![1.0; s],
        }
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn dim(&self) -> usize {
        self.half_widths.len()
    }

    /// `max_k |v_k| / c_k`.
    pub fn value(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::structural(format!(
                "vector of length {} for a {}-dimensional gauge",
                v.len(),
                self.dim()
            )));
        }
        Ok(self.value_unchecked(v.iter().copied()))
    }

    pub fn value_int(&self, v: &[i64]) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::structural(format!(
                "vector of length {} for a {}-dimensional gauge",
                v.len(),
                self.dim()
            )));
        }
        Ok(self.value_unchecked(v.iter().map(|&x| x as f64)))
    }

    fn value_unchecked(&self, v: impl Iterator<Item = f64>) -> f64 {
        v.zip(&self.half_widths)
            .map(|(x, c)| x.abs() / c)
            .fold(0.0, f64::max)
    }

    /// Largest integer offset magnitude per axis with gauge value `< bound`.
    pub(crate) fn strict_reach(&self, bound: f64) -> Vec<i64> {
        self.half_widths
            .iter()
            .map(|c| {
                let r = bound * c;
                let m = r.floor() as i64;
                if m as f64 == r {
                    m - 1
                } else {
                    m
                }
            })
            .collect()
    }
}

/// Gauge of the smallest symmetric integer box containing the support after
/// [`Mask::recentring`]; axes of zero width get half-width 1.
pub fn default_gauge(a: &Mask) -> BoxGauge {
    let sb = a.recentred().support_box();
    let half_widths = sb
        .lo
        .iter()
        .zip(&sb.hi)
        .map(|(l, h)| l.abs().max(h.abs()).max(1) as f64)
        .collect();
    BoxGauge { half_widths }
}

/// `(a (x) b)_{(i,j)} = a_i b_j` on `Z^{s+t}`.
pub fn tensor_product(a: &Mask, b: &Mask) -> Mask {
    let mut lo = a.bounds.lo.clone();
    lo.extend_from_slice(&b.bounds.lo);
    let mut hi = a.bounds.hi.clone();
    hi.extend_from_slice(&b.bounds.hi);
    let coeffs = a
        .coeffs
        .iter()
        .flat_map(|x| b.coeffs.iter().map(move |y| x * y))
        .collect();
    Mask {
        bounds: IndexBox { lo, hi },
        coeffs,
    }
}

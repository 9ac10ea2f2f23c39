//! Balanced tensors on the uniform lattice `[n1]^d`.
//!
//! Storage is row-major with the last axis fastest. Indices are 0-based in
//! code; the text format carries no indices at all, only values in storage
//! order.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numeric::neumaier_sum;

/// Row-major strides for a (possibly rectangular) lattice with the given
/// per-axis sizes. Every module computes linear offsets through this.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut out = vec![1; dims.len()];
    for j in (0..dims.len().saturating_sub(1)).rev() {
        out[j] = out[j + 1] * dims[j + 1];
    }
    out
}

/// Linear offset of a multi-index under row-major strides.
#[inline]
pub fn offset(strides: &[usize], index: &[usize]) -> usize {
    strides.iter().zip(index).map(|(s, i)| s * i).sum()
}

/// Inverse of [`offset`]: writes the multi-index of `off` into `index`.
#[inline]
pub fn unravel(dims: &[usize], mut off: usize, index: &mut [usize]) {
    for j in (0..dims.len()).rev() {
        index[j] = off % dims[j];
        off /= dims[j];
    }
}

/// Order `d` and side length `n1` of a balanced lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeShape {
    d: usize,
    n1: usize,
}

impl LatticeShape {
    pub fn new(d: usize, n1: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidShape("order d must be at least 1".into()));
        }
        if n1 < 2 {
            return Err(Error::InvalidShape(format!("side length n1 = {n1} must be at least 2")));
        }
        let mut n: usize = 1;
        for _ in 0..d {
            n = n
                .checked_mul(n1)
                .ok_or_else(|| Error::InvalidShape(format!("{n1}^{d} overflows the index type")))?;
        }
        Ok(Self { d, n1 })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    /// Total number of cells, `n1^d`.
    pub fn n(&self) -> usize {
        self.n1.pow(self.d as u32)
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.n1; self.d]
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.dims())
    }
}

/// A real-valued balanced tensor. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: LatticeShape,
    values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: LatticeShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.n() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for shape ({}, {}), got {}",
                shape.n(),
                shape.d(),
                shape.n1(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { shape, values })
    }

    pub fn filled(shape: LatticeShape, value: f64) -> Self {
        Self { shape, values: vec![value; shape.n()] }
    }

    pub fn zeros(shape: LatticeShape) -> Self {
        Self::filled(shape, 0.0)
    }

    /// Builds a tensor by evaluating `f` at every multi-index in storage order.
    pub fn from_fn(shape: LatticeShape, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let dims = shape.dims();
        let mut idx = vec![0; shape.d()];
        let values = (0..shape.n())
            .map(|off| {
                unravel(&dims, off, &mut idx);
                f(&idx)
            })
            .collect();
        Self::new(shape, values)
    }

    pub fn shape(&self) -> LatticeShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[offset(&self.shape.strides(), index)]
    }

    /// Applies `f` entrywise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.shape, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Squared Euclidean norm (unnormalized sum of squares).
    pub fn sq_norm(&self) -> f64 {
        neumaier_sum(self.values.iter().map(|v| v * v))
    }

    pub fn mean(&self) -> f64 {
        neumaier_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    fn check_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.shape.d(),
                self.shape.n1(),
                other.shape.d(),
                other.shape.n1()
            )));
        }
        Ok(())
    }

    /// Entrywise sum.
    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other)?;
        Tensor::new(
            self.shape,
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        )
    }

    /// Serializes in the text format: a `d n1` header line followed by the
    /// values in storage order with 17 significant digits, one row of the
    /// last axis per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.shape.d(), self.shape.n1());
        for row in self.values.chunks(self.shape.n1()) {
            let line: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Parses the text format written by [`Tensor::to_text`]. Any whitespace
    /// layout of the values is accepted.
    pub fn from_text(text: &str) -> Result<Tensor> {
        let mut tokens = text.split_whitespace();
        let mut header = |name: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {name} in header")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad {name}: {e}")))
        };
        let d = header("d")?;
        let n1 = header("n1")?;
        let shape = LatticeShape::new(d, n1)?;
        let values = tokens
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("bad value {t:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        Tensor::new(shape, values)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    // Normalize -0 so that writers are byte-stable across sign-of-zero noise.
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

/// One permutation of `[n1]` per axis, stored as index arrays.
///
/// `perms[j][i]` is the image of index `i` under the axis-`j` permutation.
/// For estimated permutations the image is read as the rank (position) of
/// index `i` in the latent order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct PermutationTuple {
    perms: Vec<Vec<usize>>,
}

pub(crate) fn validate_permutation(p: &[usize]) -> Result<()> {
    let mut seen = vec![false; p.len()];
    for &v in p {
        if v >= p.len() || seen[v] {
            return Err(Error::InvalidPermutation(format!("{p:?} is not a bijection")));
        }
        seen[v] = true;
    }
    Ok(())
}

pub(crate) fn invert_permutation(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &v) in p.iter().enumerate() {
        inv[v] = i;
    }
    inv
}

impl PermutationTuple {
    pub fn new(perms: Vec<Vec<usize>>) -> Result<Self> {
        if perms.is_empty() {
            return Err(Error::InvalidPermutation("empty tuple".into()));
        }
        let n1 = perms[0].len();
        for p in &perms {
            if p.len() != n1 {
                return Err(Error::InvalidPermutation("axes have different lengths".into()));
            }
            validate_permutation(p)?;
        }
        Ok(Self { perms })
    }

    pub fn identity(shape: LatticeShape) -> Self {
        Self { perms: vec![(0..shape.n1()).collect(); shape.d()] }
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn axis(&self, j: usize) -> &[usize] {
        &self.perms[j]
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self { perms: self.perms.iter().map(|p| invert_permutation(p)).collect() }
    }

    fn check_shape(&self, shape: LatticeShape) -> Result<()> {
        if self.perms.len() != shape.d() || self.perms.iter().any(|p| p.len() != shape.n1()) {
            return Err(Error::ShapeMismatch(format!(
                "permutation tuple of {} axes does not fit shape ({}, {})",
                self.perms.len(),
                shape.d(),
                shape.n1()
            )));
        }
        Ok(())
    }
}

/// Views `t` along the permutations: `out(i_1..i_d) = t(p_1(i_1), .., p_d(i_d))`.
pub fn apply_permutations(t: &Tensor, p: &PermutationTuple) -> Result<Tensor> {
    let shape = t.shape();
    p.check_shape(shape)?;
    let dims = shape.dims();
    let st = shape.strides();
    let mut idx = vec![0; shape.d()];
    let values = (0..shape.n())
        .map(|off| {
            unravel(&dims, off, &mut idx);
            let src: usize = idx
                .iter()
                .enumerate()
                .map(|(j, &i)| st[j] * p.perms[j][i])
                .sum();
            t.values[src]
        })
        .collect();
    Ok(Tensor { shape, values })
}

/// `(1/n) * sum (a - b)^2`.
pub fn empirical_sq_loss(a: &Tensor, b: &Tensor) -> Result<f64> {
    a.check_same_shape(b)?;
    let n = a.values.len() as f64;
    Ok(neumaier_sum(a.values.iter().zip(&b.values).map(|(x, y)| (x - y) * (x - y))) / n)
}

pub fn linf_distance(a: &Tensor, b: &Tensor) -> Result<f64> {
    a.check_same_shape(b)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

//! Dense m×n fields and the periodic forward-difference calculus on them.
//!
//! Entry `(i, j)` (0-based row, column) is stored at `i * cols + j`. Math in
//! the docs uses the same 0-based indices; the wrap terms are the last column
//! (`j = n - 1`) and last row (`i = m - 1`).
//!
//! The discrete gradient `D = (Dx, Dy)` is
//!
//! ```text
//! (Dx u)[i, j] = u[i, (j + 1) mod n] - u[i, j]
//! (Dy u)[i, j] = u[(i + 1) mod m, j] - u[i, j]
//! ```
//!
//! and [`grad_adjoint`] is its exact transpose under the Frobenius inner
//! product (a negated backward-difference divergence with the same wrap).

use crate::error::{Error, Result};

/// A real m×n field: a grayscale image, a membership function, or one
/// component of a vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(rows > 0 && cols > 0, "field dimensions must be positive");
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    /// Wraps row-major data. Fails if the length does not match or an entry
    /// is not finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!("empty field {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: (rows, cols), found: (data.len(), 1) });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite entry at ({}, {})", pos / cols, pos % cols)));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "field dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a field from nested rows; handy in tests.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(m * n);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: (m, n), found: (m, r.len()) });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(m, n, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        self.assert_same_shape(other);
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, scale: f64, other: &Self) {
        self.assert_same_shape(other);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when every entry lies in `[0, 1]`.
    pub fn is_in_unit_box(&self) -> bool {
        self.data.iter().all(|&v| (0.0..=1.0).contains(&v))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }

    pub(crate) fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.shape(), found: other.shape() })
        }
    }

    #[inline]
    fn assert_same_shape(&self, other: &Self) {
        assert_eq!(self.shape(), other.shape(), "field dimension mismatch");
    }
}

/// A pair of fields `(x, y)`: the image of [`grad`], and the dual variable
/// of the primal-dual solver.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl GradientField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self> {
        x.check_shape(&y)?;
        Ok(Self { x, y })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { x: ScalarField::zeros(rows, cols), y: ScalarField::zeros(rows, cols) }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.x.shape()
    }

    /// Pixelwise pairs `(x[i, j], y[i, j])` in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.as_slice().iter().copied().zip(self.y.as_slice().iter().copied())
    }
}

/// Forward differences with periodic wrap.
pub fn grad(u: &ScalarField) -> GradientField {
    let (m, n) = u.shape();
    let mut gx = ScalarField::zeros(m, n);
    let mut gy = ScalarField::zeros(m, n);
    grad_into(u, &mut gx, &mut gy);
    GradientField { x: gx, y: gy }
}

pub(crate) fn grad_into(u: &ScalarField, gx: &mut ScalarField, gy: &mut ScalarField) {
    let (m, n) = u.shape();
    let src = u.as_slice();
    let dx = gx.as_mut_slice();
    for i in 0..m {
        let row = &src[i * n..(i + 1) * n];
        let out = &mut dx[i * n..(i + 1) * n];
        for j in 0..n - 1 {
            out[j] = row[j + 1] - row[j];
        }
        out[n - 1] = row[0] - row[n - 1];
    }
    let dy = gy.as_mut_slice();
    for i in 0..m {
        let next = if i + 1 == m { 0 } else { i + 1 };
        for j in 0..n {
            dy[i * n + j] = src[next * n + j] - src[i * n + j];
        }
    }
}

/// `Dxᵀ p`: `p[i, j-1] - p[i, j]` with the column index wrapping.
pub fn grad_x_adjoint(px: &ScalarField) -> ScalarField {
    let mut out = ScalarField::zeros(px.rows(), px.cols());
    grad_x_adjoint_into(px, &mut out);
    out
}

/// `Dyᵀ p`: `p[i-1, j] - p[i, j]` with the row index wrapping.
pub fn grad_y_adjoint(py: &ScalarField) -> ScalarField {
    let mut out = ScalarField::zeros(py.rows(), py.cols());
    grad_y_adjoint_into(py, &mut out);
    out
}

pub(crate) fn grad_x_adjoint_into(px: &ScalarField, out: &mut ScalarField) {
    let (m, n) = px.shape();
    let src = px.as_slice();
    let dst = out.as_mut_slice();
    for i in 0..m {
        let row = &src[i * n..(i + 1) * n];
        let o = &mut dst[i * n..(i + 1) * n];
        o[0] = row[n - 1] - row[0];
        for j in 1..n {
            o[j] = row[j - 1] - row[j];
        }
    }
}

pub(crate) fn grad_y_adjoint_into(py: &ScalarField, out: &mut ScalarField) {
    let (m, n) = py.shape();
    let src = py.as_slice();
    let dst = out.as_mut_slice();
    for i in 0..m {
        let prev = if i == 0 { m - 1 } else { i - 1 };
        for j in 0..n {
            dst[i * n + j] = src[prev * n + j] - src[i * n + j];
        }
    }
}

/// `Dᵀ p = Dxᵀ p.x + Dyᵀ p.y`.
pub fn grad_adjoint(p: &GradientField) -> ScalarField {
    let mut out = grad_x_adjoint(&p.x);
    let ay = grad_y_adjoint(&p.y);
    out.add_scaled(1.0, &ay);
    out
}

pub fn inner_x(u: &ScalarField, v: &ScalarField) -> f64 {
    assert_eq!(u.shape(), v.shape(), "field dimension mismatch");
    u.as_slice().iter().zip(v.as_slice()).map(|(a, b)| a * b).sum()
}

pub fn norm_x(u: &ScalarField) -> f64 {
    inner_x(u, u).sqrt()
}

pub fn inner_y(p: &GradientField, q: &GradientField) -> f64 {
    inner_x(&p.x, &q.x) + inner_x(&p.y, &q.y)
}

pub fn norm_y(p: &GradientField) -> f64 {
    inner_y(p, p).sqrt()
}

/// Anisotropic norm: `Σ |p.x| + |p.y|`.
pub fn norm_l1(p: &GradientField) -> f64 {
    p.pairs().map(|(a, b)| a.abs() + b.abs()).sum()
}

/// Isotropic norm: `Σ sqrt(p.x² + p.y²)`.
pub fn norm_l21(p: &GradientField) -> f64 {
    p.pairs().map(|(a, b)| a.hypot(b)).sum()
}

/// `‖u - v‖ / max(‖u‖, ‖v‖, ε)` with ε the f64 machine epsilon.
pub fn relerr(u: &ScalarField, v: &ScalarField) -> f64 {
    assert_eq!(u.shape(), v.shape(), "field dimension mismatch");
    let diff: f64 = u.as_slice().iter().zip(v.as_slice()).map(|(a, b)| (a - b).powi(2)).sum();
    diff.sqrt() / norm_x(u).max(norm_x(v)).max(f64::EPSILON)
}

/// [`relerr`] over a stack of fields treated as one concatenated vector.
pub fn relerr_stacked(u: &[ScalarField], v: &[ScalarField]) -> f64 {
    assert_eq!(u.len(), v.len());
    let mut diff = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        assert_eq!(a.shape(), b.shape(), "field dimension mismatch");
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            diff += (x - y).powi(2);
            nu += x * x;
            nv += y * y;
        }
    }
    diff.sqrt() / nu.sqrt().max(nv.sqrt()).max(f64::EPSILON)
}

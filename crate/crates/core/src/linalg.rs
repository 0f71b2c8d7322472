//! Dense complex linear algebra used by every other module.
//!
//! Matrices are small (4×4 operators up to 2^N×2^N transfer matrices), so a
//! plain row-major `Vec` is the storage. Residuals are measured with the
//! max-absolute-entry norm.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Largest dimension any constructor accepts (2^12).
pub const MAX_DIM: usize = 4096;

#[derive(Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl SquareMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::SizeGuard(format!("matrix dimension {dim} not in 1..={MAX_DIM}")));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self> {
        Self::new(dim, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Builds a matrix from real rows, panicking on ragged input. Intended for
    /// literal operator tables.
    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        let data = rows.iter().flatten().map(|&x| C64::new(x, 0.0)).collect();
        Self { dim: N, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * entries.len() + i] = z;
        }
        m
    }

    pub fn sigma_x() -> Self {
        Self::from_real_rows([[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn sigma_z() -> Self {
        Self::from_real_rows([[1.0, 0.0], [0.0, -1.0]])
    }

    /// The swap operator on `C² ⊗ C²`.
    pub fn permutation() -> Self {
        Self::from_real_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Max-absolute-entry norm.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| z * factor).collect() }
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    /// Dense product. Zero entries of `self` are skipped, which makes products
    /// with permutation-like and parity-conserving matrices cheap.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let row_out = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row_rhs = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in row_out.iter_mut().zip(row_rhs) {
                    *o += a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    pub fn try_matmul(&self, rhs: &Self) -> Result<Self> {
        check_same_dim(self, rhs)?;
        Ok(self.matmul(rhs))
    }

    /// Integer power by repeated squaring; `pow(0)` is the identity.
    pub fn pow(&self, mut exp: usize) -> Self {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                result = result.matmul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.matmul(&base);
            }
        }
        result
    }

    /// Kronecker product: `entry[(i·dimB+k),(j·dimB+l)] = A[i,j]·B[k,l]`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (na, nb) = (self.dim, rhs.dim);
        let n = na * nb;
        let mut out = vec![ZERO; n * n];
        for i in 0..na {
            for j in 0..na {
                let a = self.data[i * na + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..nb {
                    let dst = (i * nb + k) * n + j * nb;
                    let src = &rhs.data[k * nb..(k + 1) * nb];
                    for (o, &b) in out[dst..dst + nb].iter_mut().zip(src) {
                        *o = a * b;
                    }
                }
            }
        }
        Self { dim: n, data: out }
    }

    /// `max|A − B|` over entries.
    pub fn max_abs_diff(&self, rhs: &Self) -> Result<f64> {
        check_same_dim(self, rhs)?;
        Ok(self.data.iter().zip(&rhs.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Block `(r, c)` of size `block` from the block-partitioned matrix.
    pub fn block(&self, r: usize, c: usize, block: usize) -> Self {
        let mut out = Self::zeros(block);
        for i in 0..block {
            for j in 0..block {
                out.data[i * block + j] = self.get(r * block + i, c * block + j);
            }
        }
        out
    }

    /// Scales so the entry of largest magnitude becomes real positive with
    /// modulus 1. Returns `None` for the zero matrix.
    pub fn normalized_by_max_entry(&self) -> Option<Self> {
        let pivot = *self.data.iter().max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
        if pivot == ZERO {
            return None;
        }
        Some(self.scale(pivot.inv()))
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SquareMatrix({}×{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.get(i, j);
                    if z.im == 0.0 { format!("{:.6}", z.re) } else { format!("{:.6}{:+.6}i", z.re, z.im) }
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Mul for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        self.matmul(rhs)
    }
}

impl Add for &SquareMatrix {
    type Output = SquareMatrix;
    fn add(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        SquareMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &SquareMatrix {
    type Output = SquareMatrix;
    fn sub(self, rhs: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        SquareMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

fn check_same_dim(a: &SquareMatrix, b: &SquareMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, found: b.dim });
    }
    Ok(())
}

pub fn kron(a: &SquareMatrix, b: &SquareMatrix) -> SquareMatrix {
    a.kron(b)
}

/// `‖AB − BA‖_∞`; exactly zero when `A = B`.
pub fn commutator_norm(a: &SquareMatrix, b: &SquareMatrix) -> Result<f64> {
    check_same_dim(a, b)?;
    if a == b {
        return Ok(0.0);
    }
    (a * b).max_abs_diff(&(b * a))
}

/// Commutator norm divided by `‖A‖·‖B‖`. Zero operands give zero.
pub fn relative_commutator(a: &SquareMatrix, b: &SquareMatrix) -> Result<f64> {
    let raw = commutator_norm(a, b)?;
    let scale = a.max_abs() * b.max_abs();
    Ok(if scale == 0.0 { 0.0 } else { raw / scale })
}

/// `|x − y| / max(|x|, |y|)`, zero when both vanish.
pub fn relative_difference(x: C64, y: C64) -> f64 {
    let scale = x.norm().max(y.norm());
    if scale == 0.0 { 0.0 } else { (x - y).norm() / scale }
}

/// Dense rectangular complex matrix, row-major. Only needed as input to
/// [`null_space`].
#[derive(Debug, Clone, PartialEq)]
pub struct RectMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl RectMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.cols + col]
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl From<&SquareMatrix> for RectMatrix {
    fn from(m: &SquareMatrix) -> Self {
        Self { rows: m.dim, cols: m.dim, data: m.data.clone() }
    }
}

/// Singular values (descending) and an orthonormal null-space basis.
#[derive(Debug, Clone)]
pub struct NullSpace {
    pub singular_values: Vec<f64>,
    pub basis: Vec<Vec<C64>>,
}

/// Right-singular vectors whose singular values are below `rel_tol·σ_max`.
/// A zero matrix has the full space as its kernel.
pub fn null_space(m: &RectMatrix, rel_tol: f64) -> Result<Vec<Vec<C64>>> {
    Ok(null_space_with_spectrum(m, rel_tol)?.basis)
}

pub fn null_space_with_spectrum(m: &RectMatrix, rel_tol: f64) -> Result<NullSpace> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Domain(format!("rel_tol {rel_tol} not in (0,1)")));
    }
    let n = m.cols;
    if n == 0 {
        return Ok(NullSpace { singular_values: vec![], basis: vec![] });
    }
    // Thin SVD only yields min(rows, cols) right vectors; pad with zero rows
    // so every direction of the domain is represented.
    let rows = m.rows.max(n);
    let dense = DMatrix::from_fn(rows, n, |i, j| if i < m.rows { m.get(i, j) } else { ZERO });
    let max_iter = 200 * n.max(m.rows);
    let svd = SVD::try_new(dense, false, true, f64::EPSILON, max_iter)
        .ok_or(Error::SvdNoConvergence { max_iter })?;
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sigma_max = singular_values[0];

    let basis = order
        .iter()
        .filter(|&&i| sigma_max == 0.0 || svd.singular_values[i] < rel_tol * sigma_max)
        .map(|&i| (0..n).map(|j| v_t[(i, j)].conj()).collect())
        .collect();
    Ok(NullSpace { singular_values, basis })
}

//! Dense matrix kernel for the small symmetric problems in this crate.
//!
//! Everything here is sized for p in the tens: a row-major [`Matrix`], the
//! [`SpdMatrix`] newtype that carries its own Cholesky factor, a cyclic
//! Jacobi eigensolver and Givens-rotation products.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Sweep budget of the cyclic Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Convergence threshold on the off-diagonal Frobenius norm, relative to the
/// Frobenius norm of the input.
pub const JACOBI_TOLERANCE: f64 = 1e-13;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row slices; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { data, ..*self })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { data, ..*self })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            data: self.data.iter().map(|a| a * factor).collect(),
            ..*self
        }
    }

    /// In-place `self += factor * other`.
    pub fn add_scaled(&mut self, other: &Matrix, factor: f64) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
        Ok(())
    }

    /// Returns `self + diag(d)`.
    pub fn add_diag(&self, d: &[f64]) -> Result<Self> {
        if !self.is_square() || d.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: d.len(),
            });
        }
        let mut out = self.clone();
        for (i, &v) in d.iter().enumerate() {
            out[(i, i)] += v;
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Largest `|m[i][j] - m[j][i]|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `(M + Mᵀ) / 2`, exactly symmetric.
    pub fn symmetrized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Lower-triangular factor `L` with `M = L·Lᵀ`.
///
/// Only the lower triangle of `m` is read. Fails with
/// [`Error::NotPositiveDefinite`] when a pivot is not strictly positive.
pub fn cholesky(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    let n = m.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L·X = B` for lower-triangular `L`.
pub fn solve_lower(l: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = l.rows();
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.rows(),
        });
    }
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// Symmetric positive-definite matrix together with its Cholesky factor.
///
/// The stored entries are exactly symmetric; construction fails unless the
/// factorization succeeds.
#[derive(Clone, PartialEq)]
pub struct SpdMatrix {
    mat: Matrix,
    chol: Matrix,
}

impl SpdMatrix {
    /// Validates `m` as SPD. Asymmetry up to `1e-12·max|m|` is averaged away;
    /// anything larger is rejected.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                found: m.cols(),
            });
        }
        let asym = m.asymmetry();
        if asym > 1e-12 * m.max_abs().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let mat = m.symmetrized();
        let chol = cholesky(&mat)?;
        Ok(Self { mat, chol })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: Matrix::identity(n),
            chol: Matrix::identity(n),
        }
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diag(diag))
    }

    /// `L·Lᵀ` for a lower-triangular `L` with positive diagonal.
    pub fn from_cholesky(l: Matrix) -> Result<Self> {
        let mat = l.matmul(&l.transpose())?;
        Self::new(mat)
    }

    /// `L·Lᵀ` where `L` is already known to be lower triangular with a
    /// strictly positive diagonal; the factor is kept as is.
    pub(crate) fn from_trusted_factor(l: Matrix) -> Self {
        debug_assert!(l.diag().iter().all(|&d| d > 0.0));
        let mat = l.matmul(&l.transpose()).expect("square factor").symmetrized();
        Self { mat, chol: l }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    pub fn into_matrix(self) -> Matrix {
        self.mat
    }

    /// The lower-triangular Cholesky factor computed at construction.
    pub fn cholesky(&self) -> &Matrix {
        &self.chol
    }

    pub fn inverse(&self) -> SpdMatrix {
        let n = self.dim();
        let l_inv = solve_lower(&self.chol, &Matrix::identity(n)).expect("square factor");
        // Σ⁻¹ = L⁻ᵀ L⁻¹; its factor is not triangular, so refactor.
        let inv = l_inv
            .transpose()
            .matmul(&l_inv)
            .expect("square factor")
            .symmetrized();
        let chol = cholesky(&inv).expect("inverse of an SPD matrix is SPD");
        SpdMatrix { mat: inv, chol }
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.diag().iter().map(|d| d.ln()).sum::<f64>()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace()
    }

    pub fn diag(&self) -> Vec<f64> {
        self.mat.diag()
    }
}

impl Index<(usize, usize)> for SpdMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.mat[idx]
    }
}

impl fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Spd{:?}", self.mat)
    }
}

/// Inverse of an SPD matrix.
pub fn spd_inverse(m: &SpdMatrix) -> SpdMatrix {
    m.inverse()
}

/// `log|M| = 2·Σ log Lᵢᵢ`.
pub fn log_det(m: &SpdMatrix) -> f64 {
    m.log_det()
}

/// Diagonal matrix with strictly positive entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagMatrix {
    diag: Vec<f64>,
}

impl DiagMatrix {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParameter("empty diagonal".into()));
        }
        if let Some(bad) = diag.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diagonal entries must be positive and finite, found {bad}"
            )));
        }
        Ok(Self { diag })
    }

    /// `value·I` of dimension `dim`.
    pub fn scalar(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.diag
    }

    pub fn log_det(&self) -> f64 {
        self.diag.iter().map(|d| d.ln()).sum()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_diag(&self.diag)
    }
}

/// Eigenvalues sorted descending with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenDecomp {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenDecomp {
    /// `Q·Λ·Qᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.values.len();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n)
                    .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)])
                    .sum();
            }
        }
        out
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigen(m: &Matrix) -> Result<EigenDecomp> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    let n = m.rows();
    let mut a = m.symmetrized();
    let mut v = Matrix::identity(n);
    let threshold = JACOBI_TOLERANCE * m.frobenius_norm();

    let off_norm = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_norm(&a) > threshold {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(EigenDecomp { values, vectors })
}

/// Number of plane rotations parametrizing a `p×p` orthogonal matrix.
pub fn givens_angle_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// Ordered product of plane rotations `G(i, j, θ)`.
///
/// Pairs `(i, j)` with `i < j` are visited in lexicographic order
/// `(0,1), (0,2), …, (p-2,p-1)` and each rotation multiplies on the right,
/// `Q ← Q·G`. `G` is the identity except `G[i][i] = G[j][j] = cos θ`,
/// `G[i][j] = -sin θ` and `G[j][i] = sin θ`.
pub fn givens_rotation_product(p: usize, angles: &[f64]) -> Result<Matrix> {
    let expected = givens_angle_count(p);
    if angles.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: angles.len(),
        });
    }
    let mut q = Matrix::identity(p);
    let pairs = (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j)));
    for ((i, j), &theta) in pairs.zip(angles) {
        let (s, c) = theta.sin_cos();
        for r in 0..p {
            let qi = q[(r, i)];
            let qj = q[(r, j)];
            q[(r, i)] = c * qi + s * qj;
            q[(r, j)] = -s * qi + c * qj;
        }
    }
    Ok(q)
}

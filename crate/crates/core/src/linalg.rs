//! Dense symmetric-matrix kernel: storage, cyclic Jacobi eigensolver,
//! Cholesky factorization and the norms the certificate needs.
//!
//! Everything here is plain `f64` on packed or row-major storage. The
//! matrices this crate meets are small (N up to a few hundred), so a
//! cyclic Jacobi sweep is accurate and fast enough; no LAPACK binding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cholesky pivots at or below `PIVOT_TOL * max_diagonal` count as not
/// positive definite; separates genuine indefiniteness from roundoff.
const CHOLESKY_PIVOT_TOL: f64 = 1e-13;

/// Jacobi sweep cap and off-diagonal convergence threshold (relative to
/// the Frobenius norm of the input).
const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-12;

/// Asymmetry accepted when loading a matrix from its JSON form, relative
/// to the largest absolute entry (floored at 1).
const SYMMETRY_LOAD_TOL: f64 = 1e-12;

/// Dense symmetric matrix with packed upper-triangle storage, so the
/// symmetry invariant holds exactly by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    /// Row-major packed upper triangle: entry (i, j) with i <= j lives at
    /// `i * (2 * dim - i - 1) / 2 + j`.
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix dimension must be at least 1");
        Self {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds from full row data, averaging the two triangles. Rows must be
    /// square; asymmetry beyond `tol * max(1, max |entry|)` is rejected.
    pub fn from_rows_checked(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidShape(format!(
                "expected square row data, got {} rows",
                dim
            )));
        }
        let mut max_abs: f64 = 0.0;
        for r in rows {
            for &v in r {
                if !v.is_finite() {
                    return Err(Error::InvalidInput("non-finite matrix entry".into()));
                }
                max_abs = max_abs.max(v.abs());
            }
        }
        let scale = max_abs.max(1.0);
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let a = rows[i][j];
                let b = rows[j][i];
                if (a - b).abs() > tol * scale {
                    return Err(Error::InvalidInput(format!(
                        "asymmetric entry ({i},{j}): {a:.17e} vs {b:.17e}"
                    )));
                }
                m.set(i, j, 0.5 * (a + b));
            }
        }
        Ok(m)
    }

    /// `from_rows_checked` with the JSON-load tolerance.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows_checked(rows, SYMMETRY_LOAD_TOL)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        r * (2 * self.dim - r - 1) / 2 + c
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Entry of largest magnitude.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// self - other, entrywise.
    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {}",
                self.dim, other.dim
            )));
        }
        let mut out = SymMatrix::zeros(self.dim);
        for k in 0..self.data.len() {
            out.data[k] = self.data[k] - other.data[k];
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    /// y = M x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut s = 0.0;
            for j in 0..self.dim {
                s += self.get(i, j) * x[j];
            }
            y[i] = s;
        }
        y
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Minimal dense row-major matrix; carrier for eigenvector bases and
/// solve right-hand sides. Not a general linear-algebra type.
#[derive(Debug, Clone, PartialEq)]
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
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_column(col: &[f64]) -> Self {
        let mut m = Self::zeros(col.len(), 1);
        for (i, &v) in col.iter().enumerate() {
            m.set(i, 0, v);
        }
        m
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Symmetrizes a square matrix by averaging with its transpose.
    pub fn to_sym(&self) -> Result<SymMatrix> {
        if self.rows != self.cols {
            return Err(Error::InvalidShape(format!(
                "cannot symmetrize a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let mut m = SymMatrix::zeros(self.rows);
        for i in 0..self.rows {
            for j in i..self.cols {
                m.set(i, j, 0.5 * (self.get(i, j) + self.get(j, i)));
            }
        }
        Ok(m)
    }
}

/// Eigendecomposition of a symmetric matrix: `V diag(values) V^T`
/// reconstructs the input; eigenvalues ascending, eigenvectors are the
/// columns of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps rotate away every off-diagonal pair; stops when the
/// off-diagonal Frobenius mass falls below `1e-12 * ||m||_F`.
pub fn eigh(m: &SymMatrix) -> Result<EigenDecomp> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let n = m.dim();
    let mut a = m.to_matrix();
    let mut v = Matrix::identity(n);
    let threshold = JACOBI_OFF_TOL * frobenius_norm(m);

    let off = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a.get(i, j) * a.get(i, j);
            }
        }
        s.sqrt()
    };

    let mut converged = off(&a) <= threshold;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = 0.5 * (aqq - app) / apq;
                // Smaller-magnitude tangent root keeps rotations stable.
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for k in 0..n {
                    if k != p && k != q {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        let new_kp = akp - s * (akq + tau * akp);
                        let new_kq = akq + s * (akp - tau * akq);
                        a.set(k, p, new_kp);
                        a.set(p, k, new_kp);
                        a.set(k, q, new_kq);
                        a.set(q, k, new_kq);
                    }
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp - s * (vkq + tau * vkp));
                    v.set(k, q, vkq + s * (vkp - tau * vkq));
                }
            }
        }
        converged = off(&a) <= threshold;
    }
    if !converged {
        return Err(Error::NoConvergence(format!(
            "Jacobi off-diagonal mass above threshold after {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, v.get(row, src));
        }
    }
    Ok(EigenDecomp {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// Lower-triangular Cholesky factor of an SPD matrix.
fn cholesky(m: &SymMatrix) -> Result<Matrix> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let n = m.dim();
    let max_diag = (0..n).fold(0.0_f64, |acc, i| acc.max(m.get(i, i)));
    let tol = CHOLESKY_PIVOT_TOL * max_diag.max(0.0);
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if s <= tol {
                    return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                }
                l.set(i, j, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// log det of an SPD matrix via Cholesky: `2 * sum log L_ii`.
pub fn logdet_posdef(m: &SymMatrix) -> Result<f64> {
    let l = cholesky(m)?;
    Ok((0..m.dim()).map(|i| l.get(i, i).ln()).sum::<f64>() * 2.0)
}

/// Solves `m X = rhs` for SPD `m` by forward/back substitution on the
/// Cholesky factor, one right-hand column at a time.
pub fn solve_posdef(m: &SymMatrix, rhs: &Matrix) -> Result<Matrix> {
    if rhs.rows() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix dim {} vs rhs rows {}",
            m.dim(),
            rhs.rows()
        )));
    }
    let l = cholesky(m)?;
    let n = m.dim();
    let mut out = Matrix::zeros(n, rhs.cols());
    let mut y = vec![0.0; n];
    for col in 0..rhs.cols() {
        for i in 0..n {
            let mut s = rhs.get(i, col);
            for k in 0..i {
                s -= l.get(i, k) * y[k];
            }
            y[i] = s / l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l.get(k, i) * y[k];
            }
            y[i] = s / l.get(i, i);
            out.set(i, col, y[i]);
        }
    }
    Ok(out)
}

/// Convenience single-vector SPD solve.
pub fn solve_posdef_vec(m: &SymMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let sol = solve_posdef(m, &Matrix::from_column(rhs))?;
    Ok(sol.column(0))
}

/// Symmetric PSD square root via eigendecomposition. Eigenvalues below
/// `-1e-12 * ||m||_2` are rejected; small negative roundoff is clamped
/// to zero before the root.
pub fn sym_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let decomp = eigh(m)?;
    let n = m.dim();
    let norm2 = decomp
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, &l| acc.max(l.abs()));
    for &l in &decomp.eigenvalues {
        if l < -1e-12 * norm2 {
            return Err(Error::NotPsd { eigenvalue: l });
        }
    }
    let roots: Vec<f64> = decomp
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    let v = &decomp.eigenvectors;
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for k in 0..n {
                s += v.get(i, k) * roots[k] * v.get(j, k);
            }
            out.set(i, j, s);
        }
    }
    Ok(out)
}

/// Largest absolute eigenvalue.
pub fn spectral_norm(m: &SymMatrix) -> Result<f64> {
    let decomp = eigh(m)?;
    Ok(decomp
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, &l| acc.max(l.abs())))
}

/// Entrywise Euclidean norm; off-diagonal entries count twice.
pub fn frobenius_norm(m: &SymMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..m.dim() {
        let d = m.get(i, i);
        s += d * d;
        for j in (i + 1)..m.dim() {
            let v = m.get(i, j);
            s += 2.0 * v * v;
        }
    }
    s.sqrt()
}

/// JSON wire form of a symmetric matrix: full row-major rows. Symmetry is
/// validated on load and the triangles averaged.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_sym(m: &SymMatrix) -> Self {
        Self {
            dim: m.dim(),
            rows: m.to_rows(),
        }
    }

    pub fn to_sym(&self) -> Result<SymMatrix> {
        if self.rows.len() != self.dim {
            return Err(Error::InvalidShape(format!(
                "declared dim {} but {} rows",
                self.dim,
                self.rows.len()
            )));
        }
        SymMatrix::from_rows(&self.rows)
    }
}

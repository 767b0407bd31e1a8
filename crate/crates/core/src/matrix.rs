//! Dense complex matrices and the three kernels the rest of the crate is
//! built on: Kronecker products, the Hermitian eigensolver, and nullspace
//! extraction.
//!
//! Storage is flat row-major. For Kronecker products the pair index `(i, k)`
//! of the product space maps to the flat index `i * inner_dim + k`; every
//! module relies on that convention when it compares coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shorthand constructor for a complex scalar.
#[inline]
pub const fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const ZERO: Complex64 = c64(0.0, 0.0);
pub const ONE: Complex64 = c64(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix shape must be positive, got {rows}x{cols}")]
    EmptyShape { rows: usize, cols: usize },
    #[error("expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-finite entry at flat index {index}")]
    NonFinite { index: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// Dense `rows x cols` complex matrix in row-major order.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl TryFrom<MatrixRepr> for ComplexMatrix {
    type Error = MatrixError;

    fn try_from(repr: MatrixRepr) -> Result<Self, Self::Error> {
        let data = repr.data.iter().map(|&[re, im]| c64(re, im)).collect();
        ComplexMatrix::from_row_major(repr.rows, repr.cols, data)
    }
}

impl From<ComplexMatrix> for MatrixRepr {
    fn from(m: ComplexMatrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

fn check_finite(data: &[Complex64]) -> Result<(), MatrixError> {
    match data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(index) => Err(MatrixError::NonFinite { index }),
        None => Ok(()),
    }
}

impl ComplexMatrix {
    pub fn from_row_major(
        rows: usize,
        cols: usize,
        data: Vec<Complex64>,
    ) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyShape { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(MatrixError::LengthMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged or empty input;
    /// intended for literals.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_row_major(r, c, rows.concat()).expect("invalid matrix literal")
    }

    /// Real-valued literal rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| c64(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix shape must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| ZERO)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn scalar(z: Complex64) -> Self {
        Self::from_fn(1, 1, |_, _| z)
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[ComplexVector]) -> Self {
        let rows = columns.first().map_or(0, ComplexVector::dim);
        assert!(columns.iter().all(|c| c.dim() == rows), "ragged columns");
        Self::from_fn(rows, columns.len(), |i, j| columns[j].entries()[i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector::from_vec((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// Columns with the given indices, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self.get(i, idx[j]))
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        self.map(|x| x * z)
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.map(|z| z * x)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Entrywise complex conjugate (no transpose).
    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.diagonal().into_iter().sum()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    /// Upper bound on the operator norm; the Frobenius norm dominates it.
    pub fn op_norm_bound(&self) -> f64 {
        self.frobenius_norm()
    }

    /// Frobenius norm of the part outside the main diagonal.
    pub fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    acc += self.get(i, j).norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    /// Frobenius inner product `tr(self* other)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.shape(), other.shape(), "inner product shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn try_matmul(&self, rhs: &Self) -> Result<Self, MatrixError> {
        if self.cols != rhs.rows {
            return Err(MatrixError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = vec![ZERO; self.rows * rhs.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let out_row = &mut out[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: rhs.cols,
            data: out,
        })
    }

    pub fn mat_vec(&self, v: &ComplexVector) -> ComplexVector {
        assert_eq!(self.cols, v.dim(), "matrix-vector shape mismatch");
        ComplexVector::from_vec(
            (0..self.rows)
                .map(|i| {
                    self.data[i * self.cols..(i + 1) * self.cols]
                        .iter()
                        .zip(v.entries())
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect(),
        )
    }

    /// Block diagonal `[[self, 0], [0, other]]`.
    pub fn block_diag(&self, other: &Self) -> Self {
        let (r1, c1) = self.shape();
        Self::from_fn(r1 + other.rows, c1 + other.cols, |i, j| {
            if i < r1 && j < c1 {
                self.get(i, j)
            } else if i >= r1 && j >= c1 {
                other.get(i - r1, j - c1)
            } else {
                ZERO
            }
        })
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        ComplexMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    /// Row-major flattening as a vector.
    pub fn vec(&self) -> ComplexVector {
        ComplexVector::from_vec(self.data.clone())
    }

    /// Inverse of [`ComplexMatrix::vec`].
    pub fn unvec(v: &ComplexVector, rows: usize, cols: usize) -> Self {
        assert_eq!(v.dim(), rows * cols, "unvec size mismatch");
        ComplexMatrix {
            rows,
            cols,
            data: v.entries().to_vec(),
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (self - other).frobenius_norm()
    }

    pub fn is_all_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                assert_eq!(self.shape(), rhs.shape(), "elementwise shape mismatch");
                ComplexMatrix {
                    rows: self.rows,
                    cols: self.cols,
                    data: self.data.iter().zip(&rhs.data).map(|(a, b)| a $op b).collect(),
                }
            }
        }
        impl $trait<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                (&self).$method(rhs)
            }
        }
        impl $trait<ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_matmul(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Mul<ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self * &rhs
    }
}

impl Mul<&ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        &self * rhs
    }
}

impl Mul<ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        self * &rhs
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.map(|z| -z)
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        -&self
    }
}

/// Dense complex vector.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct ComplexVector {
    entries: Vec<Complex64>,
}

impl TryFrom<Vec<[f64; 2]>> for ComplexVector {
    type Error = MatrixError;

    fn try_from(raw: Vec<[f64; 2]>) -> Result<Self, Self::Error> {
        ComplexVector::new(raw.into_iter().map(|[re, im]| c64(re, im)).collect())
    }
}

impl From<ComplexVector> for Vec<[f64; 2]> {
    fn from(v: ComplexVector) -> Self {
        v.entries.iter().map(|z| [z.re, z.im]).collect()
    }
}

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self, MatrixError> {
        if entries.is_empty() {
            return Err(MatrixError::EmptyShape { rows: 0, cols: 1 });
        }
        check_finite(&entries)?;
        Ok(ComplexVector { entries })
    }

    pub(crate) fn from_vec(entries: Vec<Complex64>) -> Self {
        ComplexVector { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        ComplexVector::from_vec(vec![ZERO; dim])
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = vec![ZERO; dim];
        v[k] = ONE;
        ComplexVector::from_vec(v)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn dot(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "dot dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, z: Complex64) -> Self {
        ComplexVector::from_vec(self.entries.iter().map(|x| x * z).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "sub dimension mismatch");
        ComplexVector::from_vec(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// The vector as an `n x 1` matrix.
    pub fn as_column(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.dim(),
            cols: 1,
            data: self.entries.clone(),
        }
    }
}

/// Kronecker product. Block `(i, j)` of the result is `x[i, j] * y`.
pub fn kron(x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    let (yr, yc) = y.shape();
    ComplexMatrix::from_fn(x.rows * yr, x.cols * yc, |r, c| {
        x.get(r / yr, c / yc) * y.get(r % yr, c % yc)
    })
}

/// Output of [`hermitian_eig`].
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `k` is the eigenvector for `eigenvalues[k]`.
    pub vectors: ComplexMatrix,
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot entry with a diagonal
/// unitary and then applies a real plane rotation, so the accumulated
/// transformation stays unitary. Iteration stops once the off-diagonal mass
/// drops to rounding level; more than `100 * n` sweeps is reported as
/// [`MatrixError::NoConvergence`].
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEigen, MatrixError> {
    if !h.is_square() {
        return Err(MatrixError::DimensionMismatch(format!(
            "eigenproblem needs a square matrix, got {}x{}",
            h.rows, h.cols
        )));
    }
    let norm = h.frobenius_norm();
    let asymmetry = h.dist(&h.adjoint());
    if asymmetry > 1e-12 * norm.max(1.0) {
        return Err(MatrixError::NotHermitian { asymmetry });
    }

    let n = h.rows;
    // Work on the exactly Hermitian part.
    let mut a = (h + &h.adjoint()).scale_real(0.5);
    for i in 0..n {
        a.data[i * n + i].im = 0.0;
    }
    let mut w = ComplexMatrix::identity(n);
    let stop = 4.0 * n as f64 * f64::EPSILON * norm;

    let max_sweeps = 100 * n;
    let mut converged = false;
    for _ in 0..max_sweeps {
        if a.off_diagonal_norm() <= stop {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                jacobi_rotate(&mut a, &mut w, p, q);
            }
        }
    }
    if !converged && a.off_diagonal_norm() > stop {
        return Err(MatrixError::NoConvergence { sweeps: max_sweeps });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    Ok(HermitianEigen {
        eigenvalues: order.iter().map(|&i| diag[i]).collect(),
        vectors: w.select_columns(&order),
    })
}

/// Annihilates `a[p, q]` with `a <- G* a G`, `w <- w G`.
fn jacobi_rotate(a: &mut ComplexMatrix, w: &mut ComplexMatrix, p: usize, q: usize) {
    let n = a.rows;
    let apq = a.get(p, q);
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let phase = apq / g;
    let theta = (aqq - app) / (2.0 * g);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // G restricted to the (p, q) plane.
    let gpp = c64(c, 0.0);
    let gpq = c64(s, 0.0);
    let gqp = phase.conj() * (-s);
    let gqq = phase.conj() * c;

    for k in 0..n {
        let akp = a.data[k * n + p];
        let akq = a.data[k * n + q];
        a.data[k * n + p] = akp * gpp + akq * gqp;
        a.data[k * n + q] = akp * gpq + akq * gqq;
    }
    for k in 0..n {
        let apk = a.data[p * n + k];
        let aqk = a.data[q * n + k];
        a.data[p * n + k] = gpp.conj() * apk + gqp.conj() * aqk;
        a.data[q * n + k] = gpq.conj() * apk + gqq.conj() * aqk;
    }
    a.data[p * n + q] = ZERO;
    a.data[q * n + p] = ZERO;
    a.data[p * n + p].im = 0.0;
    a.data[q * n + q].im = 0.0;

    for k in 0..n {
        let wkp = w.data[k * n + p];
        let wkq = w.data[k * n + q];
        w.data[k * n + p] = wkp * gpp + wkq * gqp;
        w.data[k * n + q] = wkp * gpq + wkq * gqq;
    }
}

/// Householder QR with column pivoting: `k * perm = q * r`.
struct PivotedQr {
    q: ComplexMatrix,
    r_diag: Vec<f64>,
}

fn pivoted_qr(k: &ComplexMatrix) -> PivotedQr {
    let (m, n) = k.shape();
    let mut r = k.clone();
    let mut q = ComplexMatrix::identity(m);
    let steps = m.min(n);
    let mut r_diag = Vec::with_capacity(steps);

    for step in 0..steps {
        // Pivot: remaining column with the largest trailing norm.
        let col_norm = |r: &ComplexMatrix, j: usize| -> f64 {
            (step..m).map(|i| r.get(i, j).norm_sqr()).sum::<f64>()
        };
        let pivot = (step..n)
            .max_by(|&a, &b| col_norm(&r, a).total_cmp(&col_norm(&r, b)))
            .unwrap_or(step);
        if pivot != step {
            for i in 0..m {
                r.data.swap(i * n + step, i * n + pivot);
            }
        }

        let x: Vec<Complex64> = (step..m).map(|i| r.get(i, step)).collect();
        let xnorm = x.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            r_diag.push(0.0);
            continue;
        }
        let phase = if x[0] == ZERO { ONE } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm_sqr: f64 = v.iter().map(Complex64::norm_sqr).sum();
        if vnorm_sqr == 0.0 {
            r_diag.push(xnorm);
            continue;
        }
        let beta = 2.0 / vnorm_sqr;

        // r <- (I - beta v v*) r on rows step.., columns step..
        for j in step..n {
            let proj: Complex64 = v
                .iter()
                .enumerate()
                .map(|(t, vi)| vi.conj() * r.get(step + t, j))
                .sum();
            let f = proj * beta;
            for (t, vi) in v.iter().enumerate() {
                r.data[(step + t) * n + j] -= vi * f;
            }
        }
        // q <- q (I - beta v v*)
        for i in 0..m {
            let proj: Complex64 = v
                .iter()
                .enumerate()
                .map(|(t, vi)| q.get(i, step + t) * vi)
                .sum();
            let f = proj * beta;
            for (t, vi) in v.iter().enumerate() {
                q.data[i * m + step + t] -= f * vi.conj();
            }
        }
        r_diag.push(r.get(step, step).norm());
    }
    PivotedQr { q, r_diag }
}

fn rank_from_diag(r_diag: &[f64], threshold: f64) -> usize {
    r_diag.iter().take_while(|&&d| d > threshold).count()
}

/// Numerical rank: the number of pivoted-QR diagonal entries of `m*`
/// exceeding `tol * ‖m‖_F`.
pub fn numerical_rank(m: &ComplexMatrix, tol: f64) -> usize {
    let norm = m.frobenius_norm();
    if norm == 0.0 {
        return 0;
    }
    rank_from_diag(&pivoted_qr(&m.adjoint()).r_diag, tol * norm)
}

/// Orthonormal basis of the numerical nullspace of `m`.
///
/// Computed from a pivoted QR factorization of `m*`: the trailing columns of
/// the orthogonal factor span the complement of the row space of `m`.
pub fn nullspace_basis(m: &ComplexMatrix, tol: f64) -> Vec<ComplexVector> {
    assert!(tol > 0.0, "nullspace tolerance must be positive");
    let norm = m.frobenius_norm();
    let cols = m.cols;
    if norm == 0.0 {
        return (0..cols).map(|k| ComplexVector::basis(cols, k)).collect();
    }
    let qr = pivoted_qr(&m.adjoint());
    let rank = rank_from_diag(&qr.r_diag, tol * norm);
    (rank..cols).map(|j| qr.q.column(j)).collect()
}

//! Laurent polynomials in `Z` with scalar and matrix coefficients.
//!
//! On the circle `Z̄ = Z⁻¹`, so degree `-1` stands for `Z̄` and an element of
//! `C(S¹) ⊗ M_n` whose image lies in the polynomial part is a finitely
//! supported map from degrees to matrices.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::CoactionError;
use crate::matrix::{kron, ComplexMatrix, ComplexVector, ONE, ZERO};

/// Largest number of stored degrees a product may produce.
pub const MAX_SUPPORT: usize = 64;

/// Scalar Laurent polynomial `Σ c_k Z^k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i32, Complex64>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(0, c)
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    pub fn monomial(degree: i32, c: Complex64) -> Self {
        let mut p = Self::zero();
        p.add_term(degree, c);
        p
    }

    pub fn z() -> Self {
        Self::monomial(1, ONE)
    }

    pub fn zbar() -> Self {
        Self::monomial(-1, ONE)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (i32, Complex64)>) -> Self {
        let mut p = Self::zero();
        for (k, c) in terms {
            p.add_term(k, c);
        }
        p
    }

    fn add_term(&mut self, degree: i32, c: Complex64) {
        let entry = self.coeffs.entry(degree).or_insert(ZERO);
        *entry += c;
        if *entry == ZERO {
            self.coeffs.remove(&degree);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.coeffs.iter().map(|(&k, &c)| (k, c))
    }

    pub fn coefficient(&self, degree: i32) -> Complex64 {
        self.coeffs.get(&degree).copied().unwrap_or(ZERO)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (j, a) in self.terms() {
            for (k, b) in other.terms() {
                out.add_term(j + k, a * b);
            }
        }
        out
    }

    /// Pointwise complex conjugate on the circle: `Z^k ↦ Z^{-k}`.
    pub fn conj(&self) -> Self {
        Self::from_terms(self.terms().map(|(k, c)| (-k, c.conj())))
    }

    /// Value at the point `z` of the circle.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.terms().map(|(k, c)| c * z.powi(k)).sum()
    }
}

/// `Σ_k Z^k ⊗ M_k` in `C(S¹) ⊗ M_n`. Stored coefficients are never the zero
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentMatrixPoly {
    n: usize,
    coeffs: BTreeMap<i32, ComplexMatrix>,
}

impl LaurentMatrixPoly {
    pub fn zero(n: usize) -> Self {
        LaurentMatrixPoly {
            n,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::monomial(0, ComplexMatrix::identity(n))
    }

    pub fn monomial(degree: i32, m: ComplexMatrix) -> Self {
        assert!(m.is_square(), "coefficients must be square");
        let mut p = Self::zero(m.rows());
        p.add_term(degree, &m);
        p
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (i32, ComplexMatrix)>) -> Self {
        let mut p = Self::zero(n);
        for (k, m) in terms {
            p.add_term(k, &m);
        }
        p
    }

    fn add_term(&mut self, degree: i32, m: &ComplexMatrix) {
        assert_eq!(m.shape(), (self.n, self.n), "coefficient shape mismatch");
        let sum = match self.coeffs.remove(&degree) {
            Some(existing) => &existing + m,
            None => m.clone(),
        };
        if !sum.is_all_zero() {
            self.coeffs.insert(degree, sum);
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> Vec<i32> {
        self.coeffs.keys().copied().collect()
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &ComplexMatrix)> + '_ {
        self.coeffs.iter().map(|(&k, m)| (k, m))
    }

    /// Coefficient of `Z^degree`, zero matrix when absent.
    pub fn coefficient(&self, degree: i32) -> ComplexMatrix {
        self.coeffs
            .get(&degree)
            .cloned()
            .unwrap_or_else(|| ComplexMatrix::zeros(self.n, self.n))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut out = self.clone();
        for (k, m) in other.terms() {
            out.add_term(k, m);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut out = self.clone();
        for (k, m) in other.terms() {
            out.add_term(k, &-m);
        }
        out
    }

    /// Convolution product in `C(S¹) ⊗ M_n`.
    pub fn mul(&self, other: &Self) -> Result<Self, CoactionError> {
        if self.n != other.n {
            return Err(CoactionError::DimensionMismatch(format!(
                "cannot multiply polynomials over M_{} and M_{}",
                self.n, other.n
            )));
        }
        let mut out = Self::zero(self.n);
        for (j, a) in self.terms() {
            for (k, b) in other.terms() {
                out.add_term(j + k, &(a * b));
            }
        }
        if out.support_len() > MAX_SUPPORT {
            return Err(CoactionError::SupportOverflow {
                len: out.support_len(),
            });
        }
        Ok(out)
    }

    /// `(Σ Z^k ⊗ M_k)* = Σ Z^{-k} ⊗ M_k*`.
    pub fn adjoint(&self) -> Self {
        Self::from_terms(self.n, self.terms().map(|(k, m)| (-k, m.adjoint())))
    }

    /// Multiplies every coefficient by a scalar.
    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.n, self.terms().map(|(k, m)| (k, m.scale(c))))
    }

    /// Applies each coefficient to `v`: the result of `(Σ Z^k ⊗ M_k)(1 ⊗ v)`.
    pub fn apply(&self, v: &ComplexVector) -> BTreeMap<i32, ComplexVector> {
        self.terms().map(|(k, m)| (k, m.mat_vec(v))).collect()
    }

    /// Frobenius distance `sqrt(Σ_k ‖M_k - N_k‖²)`.
    pub fn dist(&self, other: &Self) -> f64 {
        self.sub(other)
            .terms()
            .map(|(_, m)| m.frobenius_norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `(Σ Z^j ⊗ N_j) ⊗ (Σ Z^k ⊗ M_k)` multiplied in the function variable,
    /// with matrix parts combined by `kron(N_j, M_k)`.
    pub fn tensor(&self, other: &Self) -> Result<Self, CoactionError> {
        let mut out = Self::zero(self.n * other.n);
        for (j, a) in self.terms() {
            for (k, b) in other.terms() {
                out.add_term(j + k, &kron(a, b));
            }
        }
        if out.support_len() > MAX_SUPPORT {
            return Err(CoactionError::SupportOverflow {
                len: out.support_len(),
            });
        }
        Ok(out)
    }
}

//! Linear coactions on the circle algebra.
//!
//! A linear object on `ℂⁿ` is fixed by the image of the coordinate function,
//! `α(Z) = Z ⊗ A + Z̄ ⊗ B`; unitality and the `*`-structure then determine
//! `α` on every Laurent polynomial. A conjugate pair adds the dual map
//! `α̂(Z) = Z ⊗ C + Z̄ ⊗ D` together with the pairing vectors `s` and `t`.

mod checks;
mod laurent;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{ComplexMatrix, ComplexVector, MatrixError, ONE, ZERO};

pub use checks::{
    check_conjugate_matrix, check_conjugate_raw, check_homomorphism, homomorphism_residuals,
    DUALITY_NAMES,
};
pub use laurent::{LaurentMatrixPoly, LaurentPoly, MAX_SUPPORT};

/// Default pass/fail tolerance for constraint checks.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoactionError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Laurent support grew to {len} degrees (limit {MAX_SUPPORT})")]
    SupportOverflow { len: usize },
}

/// The matrix pair `(A, B)` of `α(Z) = Z ⊗ A + Z̄ ⊗ B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObjectRepr", into = "ObjectRepr")]
pub struct LinearObject {
    a: ComplexMatrix,
    b: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct ObjectRepr {
    n: usize,
    #[serde(rename = "A")]
    a: ComplexMatrix,
    #[serde(rename = "B")]
    b: ComplexMatrix,
}

impl TryFrom<ObjectRepr> for LinearObject {
    type Error = CoactionError;

    fn try_from(r: ObjectRepr) -> Result<Self, Self::Error> {
        let obj = LinearObject::new(r.a, r.b)?;
        if obj.n() != r.n {
            return Err(CoactionError::DimensionMismatch(format!(
                "declared n = {} but matrices are {}x{}",
                r.n,
                obj.n(),
                obj.n()
            )));
        }
        Ok(obj)
    }
}

impl From<LinearObject> for ObjectRepr {
    fn from(o: LinearObject) -> Self {
        ObjectRepr {
            n: o.n(),
            a: o.a,
            b: o.b,
        }
    }
}

fn require_square_pair(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<(), CoactionError> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(CoactionError::DimensionMismatch(format!(
            "coefficients must be square of equal size, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

impl LinearObject {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self, CoactionError> {
        require_square_pair(&a, &b)?;
        Ok(LinearObject { a, b })
    }

    /// The unit object: `Z ↦ Z ⊗ 1` on `ℂ`.
    pub fn trivial() -> Self {
        Self::rotation(ONE)
    }

    /// One-dimensional rotation character `Z ↦ λZ`.
    pub fn rotation(lambda: num_complex::Complex64) -> Self {
        LinearObject {
            a: ComplexMatrix::scalar(lambda),
            b: ComplexMatrix::scalar(ZERO),
        }
    }

    /// One-dimensional reflection character `Z ↦ bZ̄`.
    pub fn reflection(b: num_complex::Complex64) -> Self {
        LinearObject {
            a: ComplexMatrix::scalar(ZERO),
            b: ComplexMatrix::scalar(b),
        }
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    /// `α(Z)` as a Laurent matrix polynomial.
    pub fn image_of_z(&self) -> LaurentMatrixPoly {
        LaurentMatrixPoly::from_terms(self.n(), [(1, self.a.clone()), (-1, self.b.clone())])
    }

    /// `α(Z̄) = α(Z)* = Z̄ ⊗ A* + Z ⊗ B*`.
    pub fn image_of_zbar(&self) -> LaurentMatrixPoly {
        self.image_of_z().adjoint()
    }
}

/// Kac pairing vector `Σ ē_i ⊗ e_i`: ones at flat indices `i * n + i`.
pub fn kac_vector(n: usize) -> ComplexVector {
    ComplexMatrix::identity(n).vec()
}

/// A linear object with candidate conjugate data `(C, D, s, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PairRepr", into = "PairRepr")]
pub struct ConjugatePair {
    object: LinearObject,
    dual: LinearObject,
    s: ComplexVector,
    t: ComplexVector,
}

#[derive(Serialize, Deserialize)]
struct PairRepr {
    n: usize,
    #[serde(rename = "A")]
    a: ComplexMatrix,
    #[serde(rename = "B")]
    b: ComplexMatrix,
    #[serde(rename = "C")]
    c: ComplexMatrix,
    #[serde(rename = "D")]
    d: ComplexMatrix,
    #[serde(default)]
    s: Option<ComplexVector>,
    #[serde(default)]
    t: Option<ComplexVector>,
}

impl TryFrom<PairRepr> for ConjugatePair {
    type Error = CoactionError;

    fn try_from(r: PairRepr) -> Result<Self, Self::Error> {
        let object: LinearObject = ObjectRepr {
            n: r.n,
            a: r.a,
            b: r.b,
        }
        .try_into()?;
        let n = object.n();
        let dual = LinearObject::new(r.c, r.d)?;
        if dual.n() != n {
            return Err(CoactionError::DimensionMismatch(format!(
                "C, D must be {n}x{n}, got {}x{}",
                dual.n(),
                dual.n()
            )));
        }
        let s = r.s.unwrap_or_else(|| kac_vector(n));
        let t = r.t.unwrap_or_else(|| kac_vector(n));
        ConjugatePair::with_vectors(object, dual, s, t)
    }
}

impl From<ConjugatePair> for PairRepr {
    fn from(p: ConjugatePair) -> Self {
        PairRepr {
            n: p.object.n(),
            a: p.object.a,
            b: p.object.b,
            c: p.dual.a,
            d: p.dual.b,
            s: Some(p.s),
            t: Some(p.t),
        }
    }
}

impl ConjugatePair {
    /// Pair with the Kac vectors.
    pub fn new(object: LinearObject, dual_c: ComplexMatrix, dual_d: ComplexMatrix) -> Result<Self, CoactionError> {
        let n = object.n();
        let dual = LinearObject::new(dual_c, dual_d)?;
        Self::with_vectors(object, dual, kac_vector(n), kac_vector(n))
    }

    pub fn with_vectors(
        object: LinearObject,
        dual: LinearObject,
        s: ComplexVector,
        t: ComplexVector,
    ) -> Result<Self, CoactionError> {
        let n = object.n();
        if dual.n() != n {
            return Err(CoactionError::DimensionMismatch(format!(
                "dual has dimension {} but object has {n}",
                dual.n()
            )));
        }
        for (name, v) in [("s", &s), ("t", &t)] {
            if v.dim() != n * n {
                return Err(CoactionError::DimensionMismatch(format!(
                    "{name} must have dimension {}, got {}",
                    n * n,
                    v.dim()
                )));
            }
        }
        Ok(ConjugatePair { object, dual, s, t })
    }

    pub fn from_matrices(
        a: ComplexMatrix,
        b: ComplexMatrix,
        c: ComplexMatrix,
        d: ComplexMatrix,
    ) -> Result<Self, CoactionError> {
        Self::new(LinearObject::new(a, b)?, c, d)
    }

    pub fn n(&self) -> usize {
        self.object.n()
    }

    pub fn object(&self) -> &LinearObject {
        &self.object
    }

    /// `(C, D)` viewed as a linear object on `ℂⁿ ≅ H̄`.
    pub fn dual(&self) -> &LinearObject {
        &self.dual
    }

    pub fn c(&self) -> &ComplexMatrix {
        self.dual.a()
    }

    pub fn d(&self) -> &ComplexMatrix {
        self.dual.b()
    }

    pub fn s(&self) -> &ComplexVector {
        &self.s
    }

    pub fn t(&self) -> &ComplexVector {
        &self.t
    }

    pub fn has_kac_vectors(&self) -> bool {
        let kac = kac_vector(self.n());
        self.s == kac && self.t == kac
    }
}

/// Generators of the polynomial part of `C(S¹)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Z,
    ZBar,
}

/// Image of a scalar Laurent polynomial under the unital `*`-homomorphic
/// extension of `Z ↦ Z ⊗ A + Z̄ ⊗ B`. Each monomial `Z^k` is sent to the
/// `k`-th power of `α(Z)` (or of `α(Z̄)` for negative `k`).
pub fn apply_coaction(
    obj: &LinearObject,
    p: &LaurentPoly,
) -> Result<LaurentMatrixPoly, CoactionError> {
    let n = obj.n();
    let up = obj.image_of_z();
    let down = obj.image_of_zbar();
    let mut out = LaurentMatrixPoly::zero(n);
    for (k, c) in p.terms() {
        let base = if k >= 0 { &up } else { &down };
        let mut power = LaurentMatrixPoly::identity(n);
        for _ in 0..k.unsigned_abs() {
            power = power.mul(base)?;
        }
        out = out.add(&power.scale(c));
    }
    Ok(out)
}

/// `α(g₁)α(g₂)…α(g_m)` for a word in the generators, multiplied in order.
/// The empty word maps to the identity.
pub fn apply_word(obj: &LinearObject, word: &[Generator]) -> Result<LaurentMatrixPoly, CoactionError> {
    let up = obj.image_of_z();
    let down = obj.image_of_zbar();
    word.iter()
        .try_fold(LaurentMatrixPoly::identity(obj.n()), |acc, g| match g {
            Generator::Z => acc.mul(&up),
            Generator::ZBar => acc.mul(&down),
        })
}

/// `(outer ⊗ id)(inner)`: replaces each `Z^k` of `inner` by its image under
/// `outer`. The result acts on `ℂ^{outer.n} ⊗ ℂ^{inner.dim}` with the outer
/// factor as the leading flat index.
pub fn compose_coaction(
    outer: &LinearObject,
    inner: &LaurentMatrixPoly,
) -> Result<LaurentMatrixPoly, CoactionError> {
    let mut out = LaurentMatrixPoly::zero(outer.n() * inner.dim());
    for (k, m) in inner.terms() {
        let image = apply_coaction(outer, &LaurentPoly::monomial(k, ONE))?;
        let block = image.tensor(&LaurentMatrixPoly::monomial(0, m.clone()))?;
        out = out.add(&block);
    }
    Ok(out)
}

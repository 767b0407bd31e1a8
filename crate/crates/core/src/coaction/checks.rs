//! Constraint checkers for linear objects and conjugate pairs.
//!
//! Two independent routes exist for the duality constraints. The compact
//! route evaluates the eight matrix identities directly. The raw route builds
//! `(α̂ ⊗ id)∘α` and `(α ⊗ id)∘α̂` as Laurent matrix polynomials over
//! `ℂⁿ ⊗ ℂⁿ` via Kronecker products, applies them to `s` and `t`, and reads
//! off the residual per degree. For Kac vectors both routes report the same
//! fourteen quantities in the same order.

use super::{
    apply_coaction, apply_word, compose_coaction, CoactionError, ConjugatePair, Generator,
    LaurentMatrixPoly, LaurentPoly, LinearObject,
};
use crate::matrix::ComplexMatrix;
use crate::report::CertificateReport;

/// Names of the eight duality identities, in report order.
pub const DUALITY_NAMES: [&str; 8] = [
    "CA^t + D*B^t - I",
    "DA^t + C*B^t",
    "C*conj(A) + Dconj(B) - I",
    "D*conj(A) + Cconj(B)",
    "AC^t + B*D^t - I",
    "BC^t + A*D^t",
    "A*conj(C) + Bconj(D) - I",
    "B*conj(C) + Aconj(D)",
];

/// The six `*`-homomorphism residuals of `Z ↦ Z ⊗ x + Z̄ ⊗ y`, named with the
/// given letters: `xx* + yy* - I`, `xy*`, `yx*`, `x*x + y*y - I`, `y*x`, `x*y`.
pub fn homomorphism_residuals(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    xn: &str,
    yn: &str,
) -> [(String, f64); 6] {
    let i = ComplexMatrix::identity(x.rows());
    let xs = x.adjoint();
    let ys = y.adjoint();
    [
        (
            format!("{xn}{xn}* + {yn}{yn}* - I"),
            (x * &xs + y * &ys - &i).frobenius_norm(),
        ),
        (format!("{xn}{yn}*"), (x * &ys).frobenius_norm()),
        (format!("{yn}{xn}*"), (y * &xs).frobenius_norm()),
        (
            format!("{xn}*{xn} + {yn}*{yn} - I"),
            (&xs * x + &ys * y - &i).frobenius_norm(),
        ),
        (format!("{yn}*{xn}"), (&ys * x).frobenius_norm()),
        (format!("{xn}*{yn}"), (&xs * y).frobenius_norm()),
    ]
}

/// `α` is a unital `*`-homomorphism iff all six residuals vanish.
pub fn check_homomorphism(obj: &LinearObject, tol: f64) -> CertificateReport {
    let mut report = CertificateReport::new(tol);
    for (name, r) in homomorphism_residuals(obj.a(), obj.b(), "A", "B") {
        report.push(name, r, tol);
    }
    report
}

/// The eight duality residuals in [`DUALITY_NAMES`] order.
pub(crate) fn duality_residuals(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    d: &ComplexMatrix,
) -> [f64; 8] {
    let i = ComplexMatrix::identity(a.rows());
    let (at, bt, ct, dt) = (a.transpose(), b.transpose(), c.transpose(), d.transpose());
    let (ab, bb, cb, db) = (a.conj(), b.conj(), c.conj(), d.conj());
    let (a_s, b_s, c_s, d_s) = (a.adjoint(), b.adjoint(), c.adjoint(), d.adjoint());
    [
        (c * &at + &d_s * &bt - &i).frobenius_norm(),
        (d * &at + &c_s * &bt).frobenius_norm(),
        (&c_s * &ab + d * &bb - &i).frobenius_norm(),
        (&d_s * &ab + c * &bb).frobenius_norm(),
        (a * &ct + &b_s * &dt - &i).frobenius_norm(),
        (b * &ct + &a_s * &dt).frobenius_norm(),
        (&a_s * &cb + b * &db - &i).frobenius_norm(),
        (&b_s * &cb + a * &db).frobenius_norm(),
    ]
}

/// Compact matrix form: eight duality identities followed by the six
/// homomorphism identities of the dual map `(C, D)`.
pub fn check_conjugate_matrix(pair: &ConjugatePair, tol: f64) -> CertificateReport {
    let mut report = CertificateReport::new(tol);
    let (a, b) = (pair.object().a(), pair.object().b());
    let residuals = duality_residuals(a, b, pair.c(), pair.d());
    for (name, r) in DUALITY_NAMES.iter().zip(residuals) {
        report.push(*name, r, tol);
    }
    for (name, r) in homomorphism_residuals(pair.c(), pair.d(), "C", "D") {
        report.push(name, r, tol);
    }
    report
}

/// Residual of `poly(1 ⊗ v)` against `Z^target ⊗ v`, split into the matching
/// degree and everything else.
fn snake_residuals(poly: &LaurentMatrixPoly, v: &crate::matrix::ComplexVector, target: i32) -> (f64, f64) {
    let images = poly.apply(v);
    let matching = match images.get(&target) {
        Some(w) => w.sub(v).norm(),
        None => v.norm(),
    };
    let other = images
        .iter()
        .filter(|(&k, _)| k != target)
        .map(|(_, w)| w.norm() * w.norm())
        .sum::<f64>()
        .sqrt();
    (matching, other)
}

/// Raw form: evaluates the four pairing conditions on `s` and `t` by explicit
/// composition of the two maps, then the dual homomorphism identities by
/// multiplying `α̂(Z)α̂(Z̄)` and `α̂(Z̄)α̂(Z)` as Laurent polynomials. Works for
/// any `s`, `t`, not only the Kac vectors.
pub fn check_conjugate_raw(pair: &ConjugatePair, tol: f64) -> Result<CertificateReport, CoactionError> {
    let n = pair.n();
    for (name, v) in [("s", pair.s()), ("t", pair.t())] {
        if v.dim() != n * n {
            return Err(CoactionError::DimensionMismatch(format!(
                "{name} must have dimension {}, got {}",
                n * n,
                v.dim()
            )));
        }
    }
    let obj = pair.object();
    let dual = pair.dual();
    let z = LaurentPoly::z();
    let zbar = LaurentPoly::zbar();

    // (α̂ ⊗ id)∘α on Z and Z̄, tested on s ∈ H̄ ⊗ H.
    let dual_after_obj_z = compose_coaction(dual, &apply_coaction(obj, &z)?)?;
    let dual_after_obj_zbar = compose_coaction(dual, &apply_coaction(obj, &zbar)?)?;
    // (α ⊗ id)∘α̂ on Z and Z̄, tested on t ∈ H ⊗ H̄.
    let obj_after_dual_z = compose_coaction(obj, &apply_coaction(dual, &z)?)?;
    let obj_after_dual_zbar = compose_coaction(obj, &apply_coaction(dual, &zbar)?)?;

    let mut report = CertificateReport::new(tol);
    let cases = [
        ("s: (dual x id)alpha(Z)", &dual_after_obj_z, pair.s(), 1),
        ("s: (dual x id)alpha(Zbar)", &dual_after_obj_zbar, pair.s(), -1),
        ("t: (alpha x id)dual(Z)", &obj_after_dual_z, pair.t(), 1),
        ("t: (alpha x id)dual(Zbar)", &obj_after_dual_zbar, pair.t(), -1),
    ];
    for (label, poly, v, target) in cases {
        let (matching, other) = snake_residuals(poly, v, target);
        report.push(format!("{label} deg {target:+}"), matching, tol);
        report.push(format!("{label} deg {:+}", -target), other, tol);
    }

    let id = LaurentMatrixPoly::identity(n);
    let forward = apply_word(dual, &[Generator::Z, Generator::ZBar])?.sub(&id);
    let backward = apply_word(dual, &[Generator::ZBar, Generator::Z])?.sub(&id);
    let deg = |p: &LaurentMatrixPoly, k: i32| p.coefficient(k).frobenius_norm();
    report.push("dual(Z)dual(Zbar) - 1 deg 0", deg(&forward, 0), tol);
    report.push("dual(Z)dual(Zbar) deg +2", deg(&forward, 2), tol);
    report.push("dual(Z)dual(Zbar) deg -2", deg(&forward, -2), tol);
    report.push("dual(Zbar)dual(Z) - 1 deg 0", deg(&backward, 0), tol);
    report.push("dual(Zbar)dual(Z) deg +2", deg(&backward, 2), tol);
    report.push("dual(Zbar)dual(Z) deg -2", deg(&backward, -2), tol);
    Ok(report)
}

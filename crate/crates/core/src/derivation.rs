//! Step-by-step certificates for the classification of linear Kac objects.
//!
//! Starting from a pair that satisfies every constraint, the chain checks
//! that `A, B, C, D` are partial isometries, that `U = A + B` and
//! `V = C + D` are unitaries with `A = UP`, `B = U(1 - P)` for a projection
//! `P` (and likewise for `V`, `Q`), that the dual is forced to be
//! `C = conj(A)`, `D = Bᵗ`, and finally that `A` and `B` are commuting
//! normal matrices. The last step diagonalizes them simultaneously and reads
//! off one rotation or reflection character per slot.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coaction::{kac_vector, ConjugatePair, LinearObject};
use crate::matrix::{c64, hermitian_eig, ComplexMatrix, MatrixError};
use crate::report::CertificateReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DerivationError {
    #[error("constraint violated: {}", failing_checks(.0))]
    ConstraintViolation(CertificateReport),
    #[error("not simultaneously diagonalizable (off-diagonal mass {off_diagonal:e})")]
    NotSimultaneouslyDiagonalizable { off_diagonal: f64 },
    #[error("slot {slot} is neither a rotation nor a reflection (|a| = {a_mod}, |b| = {b_mod})")]
    AmbiguousSlot { slot: usize, a_mod: f64, b_mod: f64 },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn failing_checks(report: &CertificateReport) -> String {
    report
        .failures()
        .map(|c| format!("{} = {:e}", c.name, c.residual))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Outcome of [`is_partial_isometry`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialIsometryCheck {
    pub holds: bool,
    /// `‖MM*M - M‖_F`.
    pub residual: f64,
}

/// `MM*M = M` up to `tol * max(1, ‖M‖_F)`.
pub fn is_partial_isometry(m: &ComplexMatrix, tol: f64) -> PartialIsometryCheck {
    let residual = (m * &m.adjoint() * m - m).frobenius_norm();
    PartialIsometryCheck {
        holds: residual <= tol * m.frobenius_norm().max(1.0),
        residual,
    }
}

/// Partial-isometry residuals of all four matrices of a pair.
pub fn partial_isometry_report(pair: &ConjugatePair, tol: f64) -> CertificateReport {
    let mut report = CertificateReport::new(tol);
    let o = pair.object();
    for (name, m) in [("A", o.a()), ("B", o.b()), ("C", pair.c()), ("D", pair.d())] {
        let check = is_partial_isometry(m, tol);
        report.push(
            format!("{name}{name}*{name} - {name}"),
            check.residual,
            tol * m.frobenius_norm().max(1.0),
        );
    }
    report
}

/// Unitaries `U = A + B`, `V = C + D` and projections `P = A*A`, `Q = C*C`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarData {
    pub u: ComplexMatrix,
    pub v: ComplexMatrix,
    pub p: ComplexMatrix,
    pub q: ComplexMatrix,
}

impl PolarData {
    /// `‖UP - PU‖_F`.
    pub fn commutator_residual(&self) -> f64 {
        (&self.u * &self.p - &self.p * &self.u).frobenius_norm()
    }
}

/// Builds the polar data of a valid pair and certifies every invariant at
/// `tol`; any violation means the input was not a valid pair.
pub fn polar_data(
    pair: &ConjugatePair,
    tol: f64,
) -> Result<(PolarData, CertificateReport), DerivationError> {
    let (a, b) = (pair.object().a(), pair.object().b());
    let (c, d) = (pair.c(), pair.d());
    let i = ComplexMatrix::identity(pair.n());
    let data = PolarData {
        u: a + b,
        v: c + d,
        p: a.adjoint() * a,
        q: c.adjoint() * c,
    };
    let PolarData { u, v, p, q } = &data;

    let mut report = CertificateReport::new(tol);
    report.push("UU* - I", (u * &u.adjoint() - &i).frobenius_norm(), tol);
    report.push("VV* - I", (v * &v.adjoint() - &i).frobenius_norm(), tol);
    report.push("P^2 - P", (p * p - p).frobenius_norm(), tol);
    report.push("P - P*", p.dist(&p.adjoint()), tol);
    report.push("Q^2 - Q", (q * q - q).frobenius_norm(), tol);
    report.push("Q - Q*", q.dist(&q.adjoint()), tol);
    report.push("UP - A", (u * p).dist(a), tol);
    report.push("U(I - P) - B", (u * &(&i - p)).dist(b), tol);
    report.push("VQ - C", (v * q).dist(c), tol);
    report.push("V(I - Q) - D", (v * &(&i - q)).dist(d), tol);

    if report.overall_pass {
        Ok((data, report))
    } else {
        Err(DerivationError::ConstraintViolation(report))
    }
}

/// Residuals of `A = conj(C)` and `B = Dᵗ`, thresholded at `tol * sqrt(n)`.
/// Also records whether `s`, `t` are the Kac vectors, which the identities
/// presuppose.
pub fn certify_duality(pair: &ConjugatePair, tol: f64) -> CertificateReport {
    let n = pair.n();
    let scaled = tol * (n as f64).sqrt();
    let mut report = CertificateReport::new(tol);
    let o = pair.object();
    report.push("A - conj(C)", o.a().dist(&pair.c().conj()), scaled);
    report.push("B - D^t", o.b().dist(&pair.d().transpose()), scaled);
    let kac = kac_vector(n);
    let kac_residual = pair.s().sub(&kac).norm() + pair.t().sub(&kac).norm();
    report.push("s, t - Kac", kac_residual, tol);
    report
}

/// The pair `C = conj(A)`, `D = Bᵗ` with Kac vectors. Validity is not
/// implied; it holds exactly when `A`, `B` generate a commutative algebra.
pub fn canonical_dual(obj: &LinearObject) -> ConjugatePair {
    ConjugatePair::new(obj.clone(), obj.a().conj(), obj.b().transpose())
        .expect("canonical dual has matching dimensions")
}

/// Passing certifies that the `*`-algebra generated by `A` and `B` is
/// commutative.
pub fn certify_commutativity(obj: &LinearObject, tol: f64) -> CertificateReport {
    let (a, b) = (obj.a(), obj.b());
    let (a_s, b_s) = (a.adjoint(), b.adjoint());
    let mut report = CertificateReport::new(tol);
    report.push("AB - BA", (a * b - b * a).frobenius_norm(), tol);
    report.push("AA* - A*A", (a * &a_s - &a_s * a).frobenius_norm(), tol);
    report.push("BB* - B*B", (b * &b_s - &b_s * b).frobenius_norm(), tol);
    report.push("AB* - B*A", (a * &b_s - &b_s * a).frobenius_norm(), tol);
    report.push("A*B - BA*", (&a_s * b - b * &a_s).frobenius_norm(), tol);
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CharacterKind {
    /// `Z ↦ λZ`.
    Rotation,
    /// `Z ↦ bZ̄`.
    Reflection,
}

/// A one-dimensional classical character of the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Character {
    pub kind: CharacterKind,
    #[serde(with = "complex_pair")]
    pub phase: Complex64,
}

impl Character {
    pub fn rotation(phase: Complex64) -> Self {
        Character {
            kind: CharacterKind::Rotation,
            phase,
        }
    }

    pub fn reflection(phase: Complex64) -> Self {
        Character {
            kind: CharacterKind::Reflection,
            phase,
        }
    }

    pub fn to_object(self) -> LinearObject {
        match self.kind {
            CharacterKind::Rotation => LinearObject::rotation(self.phase),
            CharacterKind::Reflection => LinearObject::reflection(self.phase),
        }
    }

    /// Group law of the circle symmetries, matching the tensor product of
    /// the corresponding one-dimensional objects.
    pub fn compose(self, other: Character) -> Character {
        use CharacterKind::*;
        match (self.kind, other.kind) {
            (Rotation, Rotation) => Character::rotation(self.phase * other.phase),
            (Rotation, Reflection) => Character::reflection(self.phase.conj() * other.phase),
            (Reflection, Rotation) => Character::reflection(self.phase * other.phase),
            (Reflection, Reflection) => Character::rotation(self.phase.conj() * other.phase),
        }
    }

    pub fn approx_eq(&self, other: &Character, tol: f64) -> bool {
        self.kind == other.kind && (self.phase - other.phase).norm() <= tol
    }
}

/// Multiset equality of character lists within `tol` on phases.
pub fn same_characters(lhs: &[Character], rhs: &[Character], tol: f64) -> bool {
    if lhs.len() != rhs.len() {
        return false;
    }
    let mut used = vec![false; rhs.len()];
    lhs.iter().all(|x| {
        match (0..rhs.len()).find(|&j| !used[j] && x.approx_eq(&rhs[j], tol)) {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

pub(crate) mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        if !re.is_finite() || !im.is_finite() {
            return Err(serde::de::Error::custom("non-finite complex number"));
        }
        Ok(Complex64::new(re, im))
    }
}

/// Simultaneous diagonalization of a commutative object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalDecomposition {
    #[serde(rename = "W")]
    pub w: ComplexMatrix,
    pub characters: Vec<Character>,
}

impl ClassicalDecomposition {
    pub fn rotations(&self) -> usize {
        self.characters
            .iter()
            .filter(|c| c.kind == CharacterKind::Rotation)
            .count()
    }

    pub fn reflections(&self) -> usize {
        self.characters.len() - self.rotations()
    }
}

/// Hermitian generators of the `*`-algebra of `{A, B}`.
fn hermitian_generators(obj: &LinearObject) -> [ComplexMatrix; 4] {
    let i = c64(0.0, 1.0);
    let (a, b) = (obj.a(), obj.b());
    [
        a + &a.adjoint(),
        (a - &a.adjoint()).scale(i),
        b + &b.adjoint(),
        (b - &b.adjoint()).scale(i),
    ]
}

fn restrict(basis: &ComplexMatrix, h: &ComplexMatrix) -> ComplexMatrix {
    let m = basis.adjoint() * h * basis;
    (&m + &m.adjoint()).scale_real(0.5)
}

/// Splits the span of `basis` into eigenspaces of a random real combination
/// of the generators, recursing inside clusters until each block is either
/// one-dimensional or jointly degenerate to rounding level.
fn split_joint(
    basis: ComplexMatrix,
    gens: &[ComplexMatrix; 4],
    scale: f64,
    rng: &mut ChaCha8Rng,
    depth: usize,
    out: &mut Vec<ComplexMatrix>,
) -> Result<(), DerivationError> {
    if basis.cols() == 1 || depth == 0 {
        out.push(basis);
        return Ok(());
    }
    let coeffs: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let mut h = ComplexMatrix::zeros(basis.cols(), basis.cols());
    for (g, c) in gens.iter().zip(coeffs) {
        h = h + restrict(&basis, g).scale_real(c);
    }
    let eig = hermitian_eig(&h)?;
    let rotated = &basis * &eig.vectors;
    let lam = &eig.eigenvalues;
    let spread = lam[lam.len() - 1] - lam[0];
    if spread <= 64.0 * f64::EPSILON * scale {
        out.push(rotated);
        return Ok(());
    }
    // Cut at every gap that is a visible fraction of the spread; the largest
    // gap always qualifies, so each level makes progress.
    let cut = 1e-3 * spread;
    let mut start = 0;
    for k in 1..=lam.len() {
        if k == lam.len() || lam[k] - lam[k - 1] > cut {
            let idx: Vec<usize> = (start..k).collect();
            split_joint(rotated.select_columns(&idx), gens, scale, rng, depth - 1, out)?;
            start = k;
        }
    }
    Ok(())
}

/// Simultaneously diagonalizes `A` and `B` and classifies each slot as a
/// rotation (`|a| = 1`, `b = 0`) or reflection (`a = 0`, `|b| = 1`).
///
/// The random combinations used to separate joint eigenspaces come from
/// `seed`, so the call is deterministic.
pub fn classical_form(
    obj: &LinearObject,
    tol: f64,
    seed: u64,
) -> Result<ClassicalDecomposition, DerivationError> {
    let n = obj.n();
    let gens = hermitian_generators(obj);
    let scale = gens.iter().map(ComplexMatrix::frobenius_norm).fold(1.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::new();
    split_joint(ComplexMatrix::identity(n), &gens, scale, &mut rng, n + 1, &mut blocks)?;

    let columns: Vec<_> = blocks
        .iter()
        .flat_map(|b| (0..b.cols()).map(move |j| b.column(j)))
        .collect();
    let w = ComplexMatrix::from_columns(&columns);
    let da = w.adjoint() * obj.a() * &w;
    let db = w.adjoint() * obj.b() * &w;
    let off_diagonal = da.off_diagonal_norm().max(db.off_diagonal_norm());
    if off_diagonal > tol * (n as f64).sqrt() {
        return Err(DerivationError::NotSimultaneouslyDiagonalizable { off_diagonal });
    }

    let characters = da
        .diagonal()
        .into_iter()
        .zip(db.diagonal())
        .enumerate()
        .map(|(slot, (a, b))| {
            let (a_mod, b_mod) = (a.norm(), b.norm());
            if a_mod.min(b_mod) > tol {
                return Err(DerivationError::AmbiguousSlot { slot, a_mod, b_mod });
            }
            Ok(if a_mod >= b_mod {
                Character::rotation(a / a_mod)
            } else {
                Character::reflection(b / b_mod)
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ClassicalDecomposition { w, characters })
}

//! Monoidal structure on linear objects: direct sums, tensor products,
//! intertwiners, decomposition into irreducibles, conjugates and the
//! pairing (snake) identities.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coaction::{CoactionError, LinearObject};
use crate::derivation::{Character, CharacterKind};
use crate::matrix::{
    c64, hermitian_eig, kron, nullspace_basis, ComplexMatrix, ComplexVector, MatrixError, ONE, ZERO,
};
use crate::report::CertificateReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CategoryError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("decomposition failed: {0}")]
    DecompositionFailure(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Coaction(#[from] CoactionError),
}

/// `A = A_X ⊕ A_Y`, `B = B_X ⊕ B_Y`.
pub fn direct_sum(x: &LinearObject, y: &LinearObject) -> LinearObject {
    LinearObject::new(x.a().block_diag(y.a()), x.b().block_diag(y.b()))
        .expect("block diagonal of square matrices is square")
}

/// Places `v_x ∈ H ⊗ H̄` and `v_y ∈ K ⊗ K̄` into
/// `(H ⊕ K) ⊗ (H̄ ⊕ K̄)` as `v_x ⊕ 0 ⊕ 0 ⊕ v_y`.
pub fn direct_sum_vector(v_x: &ComplexVector, n_x: usize, v_y: &ComplexVector, n_y: usize) -> ComplexVector {
    assert_eq!(v_x.dim(), n_x * n_x, "first vector has wrong dimension");
    assert_eq!(v_y.dim(), n_y * n_y, "second vector has wrong dimension");
    let n = n_x + n_y;
    let mut out = vec![ZERO; n * n];
    for i in 0..n_x {
        for k in 0..n_x {
            out[i * n + k] = v_x.entries()[i * n_x + k];
        }
    }
    for j in 0..n_y {
        for l in 0..n_y {
            out[(n_x + j) * n + n_x + l] = v_y.entries()[j * n_y + l];
        }
    }
    ComplexVector::new(out).expect("finite entries")
}

/// `(α_X ⊗ id)∘α_Y` on `H_X ⊗ H_Y`:
/// `A = A_X ⊗ A_Y + B_X* ⊗ B_Y`, `B = B_X ⊗ A_Y + A_X* ⊗ B_Y`.
pub fn tensor_product(x: &LinearObject, y: &LinearObject) -> LinearObject {
    let a = kron(x.a(), y.a()) + kron(&x.b().adjoint(), y.b());
    let b = kron(x.b(), y.a()) + kron(&x.a().adjoint(), y.b());
    LinearObject::new(a, b).expect("Kronecker products of square matrices are square")
}

/// Permutation `H_1 ⊗ H_2 → H_2 ⊗ H_1`, `e_i ⊗ f_k ↦ f_k ⊗ e_i`.
pub fn flip(n1: usize, n2: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n1 * n2, n1 * n2, |row, col| {
        let (i, k) = (col / n2, col % n2);
        if row == k * n1 + i {
            ONE
        } else {
            ZERO
        }
    })
}

/// Pairing vector of a tensor product. The legs of `s_X ⊗ s_Y` in
/// `H̄ ⊗ H ⊗ K̄ ⊗ K` are reordered by `a ⊗ b ⊗ c ⊗ d ↦ c ⊗ a ⊗ b ⊗ d` into
/// `K̄ ⊗ H̄ ⊗ H ⊗ K`, and `K̄ ⊗ H̄` is then identified with the conjugate of
/// `H ⊗ K` (flat index `i * n_y + k`).
pub fn tensor_pairing_vector(
    s_x: &ComplexVector,
    n_x: usize,
    s_y: &ComplexVector,
    n_y: usize,
) -> ComplexVector {
    assert_eq!(s_x.dim(), n_x * n_x, "first vector has wrong dimension");
    assert_eq!(s_y.dim(), n_y * n_y, "second vector has wrong dimension");
    let n = n_x * n_y;
    let mut out = vec![ZERO; n * n];
    // a, b index H̄, H; c, d index K̄, K.
    for a in 0..n_x {
        for b in 0..n_x {
            for c in 0..n_y {
                for d in 0..n_y {
                    let value = s_x.entries()[a * n_x + b] * s_y.entries()[c * n_y + d];
                    let conj_index = a * n_y + c;
                    let index = b * n_y + d;
                    out[conj_index * n + index] += value;
                }
            }
        }
    }
    ComplexVector::new(out).expect("finite entries")
}

/// Orthonormal basis of `Mor(X, Y)`.
#[derive(Debug, Clone)]
pub struct MorphismBasis {
    pub source: LinearObject,
    pub target: LinearObject,
    /// `target.n × source.n` matrices, Frobenius-orthonormal.
    pub basis: Vec<ComplexMatrix>,
}

impl MorphismBasis {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Largest intertwining residual over the basis.
    pub fn max_residual(&self) -> f64 {
        self.basis
            .iter()
            .map(|t| intertwining_residual(t, &self.source, &self.target))
            .fold(0.0, f64::max)
    }
}

/// `max(‖T A_X - A_Y T‖_F, ‖T B_X - B_Y T‖_F)`.
pub fn intertwining_residual(t: &ComplexMatrix, x: &LinearObject, y: &LinearObject) -> f64 {
    let ra = (t * x.a() - y.a() * t).frobenius_norm();
    let rb = (t * x.b() - y.b() * t).frobenius_norm();
    ra.max(rb)
}

/// Linear operator `vec(T) ↦ (vec(T A_X - A_Y T), vec(T B_X - B_Y T))`.
fn intertwiner_operator(x: &LinearObject, y: &LinearObject) -> ComplexMatrix {
    let ix = ComplexMatrix::identity(x.n());
    let iy = ComplexMatrix::identity(y.n());
    let block = |mx: &ComplexMatrix, my: &ComplexMatrix| kron(&iy, &mx.transpose()) - kron(my, &ix);
    block(x.a(), y.a()).vstack(&block(x.b(), y.b()))
}

/// Intertwiners `T : H_X → H_Y` with `T A_X = A_Y T` and `T B_X = B_Y T`.
///
/// Only the generator `Z` is imposed. For valid objects `A` and `B` are
/// normal, so the adjoint equations follow.
pub fn morphism_space(x: &LinearObject, y: &LinearObject, tol: f64) -> MorphismBasis {
    let op = intertwiner_operator(x, y);
    // Absolute floor: an operator that is itself at rounding level (two
    // equal characters) must not have its noise read as rank.
    let norm = op.frobenius_norm();
    let rel_tol = if norm > 0.0 { tol * norm.max(1.0) / norm } else { tol };
    let basis = nullspace_basis(&op, rel_tol)
        .iter()
        .map(|v| ComplexMatrix::unvec(v, y.n(), x.n()))
        .collect();
    MorphismBasis {
        source: x.clone(),
        target: y.clone(),
        basis,
    }
}

pub fn is_irreducible(x: &LinearObject, tol: f64) -> bool {
    morphism_space(x, x, tol).dim() == 1
}

/// Irreducibles are equivalent iff some nonzero intertwiner exists.
pub fn are_equivalent(x: &LinearObject, y: &LinearObject, tol: f64) -> bool {
    x.n() == y.n() && morphism_space(x, y, tol).dim() > 0
}

/// A summand and the isometry embedding it into the parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summand {
    pub object: LinearObject,
    /// `parent.n × object.n`, orthonormal columns.
    pub isometry: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DecompositionRepr", into = "DecompositionRepr")]
pub struct Decomposition {
    pub parent: LinearObject,
    pub summands: Vec<Summand>,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct DecompositionRepr {
    summands: Vec<Summand>,
    seed: u64,
}

impl TryFrom<DecompositionRepr> for Decomposition {
    type Error = CategoryError;

    /// The parent is recovered as `Σ V_i A_i V_i*`, `Σ V_i B_i V_i*`.
    fn try_from(r: DecompositionRepr) -> Result<Self, Self::Error> {
        let first = r
            .summands
            .first()
            .ok_or_else(|| CategoryError::DecompositionFailure("no summands".into()))?;
        let n = first.isometry.rows();
        let mut a = ComplexMatrix::zeros(n, n);
        let mut b = ComplexMatrix::zeros(n, n);
        for s in &r.summands {
            let v = &s.isometry;
            if v.shape() != (n, s.object.n()) {
                return Err(CategoryError::DimensionMismatch(format!(
                    "isometry is {}x{}, expected {n}x{}",
                    v.rows(),
                    v.cols(),
                    s.object.n()
                )));
            }
            a = a + v * s.object.a() * v.adjoint();
            b = b + v * s.object.b() * v.adjoint();
        }
        Ok(Decomposition {
            parent: LinearObject::new(a, b)?,
            summands: r.summands,
            seed: r.seed,
        })
    }
}

impl From<Decomposition> for DecompositionRepr {
    fn from(d: Decomposition) -> Self {
        DecompositionRepr {
            summands: d.summands,
            seed: d.seed,
        }
    }
}

impl Decomposition {
    pub fn dims(&self) -> Vec<usize> {
        self.summands.iter().map(|s| s.object.n()).collect()
    }

    pub fn all_one_dimensional(&self) -> bool {
        self.summands.iter().all(|s| s.object.n() == 1)
    }

    /// The character of every summand, when all summands are one-dimensional
    /// and classify cleanly at `tol`.
    pub fn characters(&self, tol: f64) -> Option<Vec<Character>> {
        self.summands
            .iter()
            .map(|s| one_dim_character(&s.object, tol))
            .collect()
    }

    /// `‖Σ V_i V_i* - I‖_F` and the largest intertwining residual.
    pub fn residuals(&self) -> (f64, f64) {
        let n = self.parent.n();
        let mut sum = ComplexMatrix::zeros(n, n);
        let mut worst: f64 = 0.0;
        for s in &self.summands {
            sum = sum + &s.isometry * s.isometry.adjoint();
            worst = worst.max(intertwining_residual(&s.isometry, &s.object, &self.parent));
        }
        (sum.dist(&ComplexMatrix::identity(n)), worst)
    }

    /// Groups summand indices into classes of mutually equivalent summands.
    pub fn isotypic_classes(&self, tol: f64) -> Vec<Vec<usize>> {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for (i, s) in self.summands.iter().enumerate() {
            match classes
                .iter_mut()
                .find(|c| are_equivalent(&self.summands[c[0]].object, &s.object, tol))
            {
                Some(class) => class.push(i),
                None => classes.push(vec![i]),
            }
        }
        classes
    }
}

/// Classifies a one-dimensional object as a character.
pub fn one_dim_character(obj: &LinearObject, tol: f64) -> Option<Character> {
    if obj.n() != 1 {
        return None;
    }
    let (a, b) = (obj.a().get(0, 0), obj.b().get(0, 0));
    let (am, bm) = (a.norm(), b.norm());
    if am.min(bm) > tol || (am.max(bm) - 1.0).abs() > tol.sqrt() {
        return None;
    }
    Some(if am >= bm {
        Character {
            kind: CharacterKind::Rotation,
            phase: a / am,
        }
    } else {
        Character {
            kind: CharacterKind::Reflection,
            phase: b / bm,
        }
    })
}

/// Splits `x` along eigenspaces of random self-adjoint endomorphisms until
/// every summand is irreducible.
pub fn decompose(x: &LinearObject, tol: f64, seed: u64) -> Result<Decomposition, CategoryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summands = Vec::new();
    split_object(x, ComplexMatrix::identity(x.n()), tol, &mut rng, x.n(), &mut summands)?;
    let dec = Decomposition {
        parent: x.clone(),
        summands,
        seed,
    };
    let (completeness, intertwining) = dec.residuals();
    let bound = tol * (x.n() as f64).sqrt();
    if completeness > bound || intertwining > bound {
        return Err(CategoryError::DecompositionFailure(format!(
            "isometry residuals too large (completeness {completeness:e}, intertwining {intertwining:e})"
        )));
    }
    Ok(dec)
}

fn split_object(
    obj: &LinearObject,
    embedding: ComplexMatrix,
    tol: f64,
    rng: &mut ChaCha8Rng,
    depth: usize,
    out: &mut Vec<Summand>,
) -> Result<(), CategoryError> {
    let end = morphism_space(obj, obj, tol);
    if end.dim() <= 1 {
        out.push(Summand {
            object: obj.clone(),
            isometry: embedding,
        });
        return Ok(());
    }
    if depth == 0 {
        return Err(CategoryError::DecompositionFailure(
            "recursion exceeded the object dimension".into(),
        ));
    }
    let n = obj.n();
    let mut t = ComplexMatrix::zeros(n, n);
    for e in &end.basis {
        let c = c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        t = t + e.scale(c);
    }
    let h = (&t + &t.adjoint()).scale_real(0.5);
    let eig = hermitian_eig(&h)?;
    let lam = &eig.eigenvalues;
    let spread = lam[n - 1] - lam[0];
    if spread <= 64.0 * f64::EPSILON * h.frobenius_norm().max(1.0) {
        return Err(CategoryError::DecompositionFailure(format!(
            "endomorphism space has dimension {} but a random element is scalar",
            end.dim()
        )));
    }
    let cut = 1e-3 * spread;
    let mut start = 0;
    for k in 1..=n {
        if k == n || lam[k] - lam[k - 1] > cut {
            let idx: Vec<usize> = (start..k).collect();
            let v = eig.vectors.select_columns(&idx);
            let sub = LinearObject::new(v.adjoint() * obj.a() * &v, v.adjoint() * obj.b() * &v)?;
            split_object(&sub, &embedding * &v, tol, rng, depth - 1, out)?;
            start = k;
        }
    }
    Ok(())
}

/// The conjugate object `(conj(A), Bᵗ)` on `H̄`.
pub fn conjugate_object(x: &LinearObject) -> LinearObject {
    LinearObject::new(x.a().conj(), x.b().transpose()).expect("same shapes as the input")
}

/// Pairing identities `(R_s* ⊗ 1)(1 ⊗ R_t) = 1` on `H̄` and
/// `(R_t* ⊗ 1)(1 ⊗ R_s) = 1` on `H`, with `R_v : z ↦ z v`.
pub fn check_snake(
    s: &ComplexVector,
    t: &ComplexVector,
    n: usize,
    tol: f64,
) -> Result<CertificateReport, CategoryError> {
    for (name, v) in [("s", s), ("t", t)] {
        if n == 0 || v.dim() != n * n {
            return Err(CategoryError::DimensionMismatch(format!(
                "{name} must have dimension {}, got {}",
                n * n,
                v.dim()
            )));
        }
    }
    let i = ComplexMatrix::identity(n);
    let r_s = s.as_column();
    let r_t = t.as_column();
    let first = kron(&r_s.adjoint(), &i) * kron(&i, &r_t);
    let second = kron(&r_t.adjoint(), &i) * kron(&i, &r_s);
    let mut report = CertificateReport::new(tol);
    report.push("(R_s* x 1)(1 x R_t) - 1", first.dist(&i), tol);
    report.push("(R_t* x 1)(1 x R_s) - 1", second.dist(&i), tol);
    Ok(report)
}

/// Unit-modulus phase helper for tests and examples.
pub fn unit_phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coaction::{check_conjugate_raw, check_homomorphism, kac_vector, ConjugatePair};
    use crate::derivation::same_characters;

    fn rot(theta: f64) -> LinearObject {
        LinearObject::rotation(unit_phase(theta))
    }

    fn refl(theta: f64) -> LinearObject {
        LinearObject::reflection(unit_phase(theta))
    }

    #[test]
    fn direct_sum_examples() {
        let s = direct_sum(&LinearObject::trivial(), &LinearObject::trivial());
        assert_eq!(*s.a(), ComplexMatrix::identity(2));
        assert!(s.b().is_all_zero());
        let (l, m) = (unit_phase(0.3), unit_phase(1.3));
        let s = direct_sum(&LinearObject::rotation(l), &LinearObject::reflection(m));
        assert_eq!(*s.a(), ComplexMatrix::from_diag(&[l, ZERO]));
        assert_eq!(*s.b(), ComplexMatrix::from_diag(&[ZERO, m]));
        assert!(check_homomorphism(&s, 1e-12).overall_pass);
    }

    #[test]
    fn direct_sum_vector_is_kac() {
        for (nx, ny) in [(1, 1), (2, 1), (2, 3)] {
            let v = direct_sum_vector(&kac_vector(nx), nx, &kac_vector(ny), ny);
            assert_eq!(v, kac_vector(nx + ny));
        }
    }

    #[test]
    fn tensor_pairing_vector_is_kac() {
        for (nx, ny) in [(1, 2), (2, 2), (3, 2)] {
            let v = tensor_pairing_vector(&kac_vector(nx), nx, &kac_vector(ny), ny);
            assert_eq!(v, kac_vector(nx * ny));
        }
    }

    #[test]
    fn tensor_of_characters() {
        let t = tensor_product(&rot(0.4), &rot(1.1));
        assert!((t.a().get(0, 0) - unit_phase(1.5)).norm() < 1e-15);
        assert_eq!(t.b().get(0, 0), ZERO);
        let t = tensor_product(&refl(0.4), &refl(1.1));
        assert!((t.a().get(0, 0) - unit_phase(0.7)).norm() < 1e-15);
        assert_eq!(t.b().get(0, 0), ZERO);
    }

    #[test]
    fn unit_object_is_neutral() {
        let x = direct_sum(&rot(0.2), &refl(0.9));
        let xt = tensor_product(&x, &LinearObject::trivial());
        let mor = morphism_space(&xt, &x, 1e-10);
        assert!(mor.dim() >= 1);
        // Identity is an intertwiner and unitary.
        let id = ComplexMatrix::identity(2);
        assert!(intertwining_residual(&id, &xt, &x) < 1e-15);
    }

    #[test]
    fn morphism_examples() {
        let r = morphism_space(&rot(0.5), &rot(0.5), 1e-10);
        assert_eq!(r.dim(), 1);
        assert!((r.basis[0].get(0, 0).norm() - 1.0).abs() < 1e-15);
        assert_eq!(morphism_space(&rot(0.5), &rot(0.6), 1e-10).dim(), 0);
        assert_eq!(morphism_space(&rot(0.5), &refl(0.5), 1e-10).dim(), 0);
    }

    #[test]
    fn irreducibility_examples() {
        assert!(is_irreducible(&rot(0.1), 1e-10));
        let two = direct_sum(&LinearObject::trivial(), &LinearObject::trivial());
        assert!(!is_irreducible(&two, 1e-10));
        assert_eq!(morphism_space(&two, &two, 1e-10).dim(), 4);
        let mixed = direct_sum(&LinearObject::trivial(), &LinearObject::rotation(c64(0.0, 1.0)));
        assert!(!is_irreducible(&mixed, 1e-10));
        assert_eq!(morphism_space(&mixed, &mixed, 1e-10).dim(), 2);
    }

    #[test]
    fn decompose_block_diagonal() {
        let x = direct_sum(&LinearObject::trivial(), &LinearObject::rotation(c64(0.0, 1.0)));
        let dec = decompose(&x, 1e-9, 5).unwrap();
        assert_eq!(dec.dims(), vec![1, 1]);
        let chars = dec.characters(1e-9).unwrap();
        assert!(same_characters(
            &chars,
            &[Character::rotation(ONE), Character::rotation(c64(0.0, 1.0))],
            1e-12
        ));
    }

    #[test]
    fn decompose_projection_pair() {
        let p = ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let x = LinearObject::new(p.clone(), ComplexMatrix::identity(2) - &p).unwrap();
        let dec = decompose(&x, 1e-9, 1).unwrap();
        let chars = dec.characters(1e-9).unwrap();
        assert!(same_characters(
            &chars,
            &[Character::rotation(ONE), Character::reflection(ONE)],
            1e-12
        ));
    }

    #[test]
    fn decompose_irreducible_is_identity() {
        let dec = decompose(&refl(2.0), 1e-9, 0).unwrap();
        assert_eq!(dec.summands.len(), 1);
        assert_eq!(dec.summands[0].isometry, ComplexMatrix::identity(1));
    }

    #[test]
    fn decompose_repeated_character() {
        let x = direct_sum(&direct_sum(&rot(0.7), &rot(0.7)), &refl(0.2));
        let dec = decompose(&x, 1e-9, 11).unwrap();
        assert_eq!(dec.dims(), vec![1, 1, 1]);
        let classes = dec.isotypic_classes(1e-9);
        assert_eq!(classes.len(), 2);
        let json = serde_json::to_string(&dec).unwrap();
        let back: Decomposition = serde_json::from_str(&json).unwrap();
        assert!(back.parent.a().dist(x.a()) < 1e-12);
        assert!(back.parent.b().dist(x.b()) < 1e-12);
    }

    #[test]
    fn conjugate_examples() {
        let l = unit_phase(0.9);
        assert_eq!(conjugate_object(&LinearObject::rotation(l)), LinearObject::rotation(l.conj()));
        let r = refl(0.4);
        assert_eq!(conjugate_object(&r), r);
        let pair = ConjugatePair::new(r.clone(), conjugate_object(&r).a().clone(), conjugate_object(&r).b().clone()).unwrap();
        assert!(check_conjugate_raw(&pair, 1e-12).unwrap().overall_pass);
        let x = direct_sum(&rot(0.1), &refl(1.0));
        assert_eq!(conjugate_object(&conjugate_object(&x)), x);
    }

    #[test]
    fn snake_examples() {
        let r = check_snake(&kac_vector(2), &kac_vector(2), 2, 1e-12).unwrap();
        assert!(r.overall_pass);
        assert_eq!(r.max_residual(), 0.0);
        let twice = kac_vector(1).scale(c64(2.0, 0.0));
        let r = check_snake(&twice, &kac_vector(1), 1, 1e-9).unwrap();
        assert!(!r.overall_pass);
        assert!((r.checks[0].residual - 1.0).abs() < 1e-15);
        assert!(check_snake(&kac_vector(3), &kac_vector(3), 3, 1e-12).unwrap().overall_pass);
        assert!(matches!(
            check_snake(&kac_vector(2), &kac_vector(3), 2, 1e-9),
            Err(CategoryError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn flip_is_involutive_permutation() {
        let f = flip(2, 3);
        let g = flip(3, 2);
        assert_eq!(&g * &f, ComplexMatrix::identity(6));
    }
}

//! Linear coactions on the circle algebra `C(S¹)`.
//!
//! A linear object is a pair of matrices `(A, B)` encoding
//! `Z ↦ Z ⊗ A + Z̄ ⊗ B`. The crate checks the `*`-homomorphism and duality
//! identities, derives the classical form of valid pairs, implements the
//! monoidal structure on objects, and searches numerically for solutions.

pub mod category;
pub mod cli;
pub mod coaction;
pub mod derivation;
pub mod matrix;
pub mod par;
pub mod report;
pub mod solver;

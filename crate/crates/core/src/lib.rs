//! Exact computation of renormalized Hennings invariants of closed 3-manifolds
//! decorated with bichrome ribbon graphs, for finite-dimensional non-degenerate
//! unimodular ribbon Hopf algebras, together with the algebraic TQFT spaces and
//! pairings of the factorizable case.
//!
//! All arithmetic is exact: scalars live in a cyclotomic field `Q(zeta_N)`,
//! optionally extended by a formal square root `D` of `Delta_+ Delta_-`.
//! The quantum-sl2 families (small/restricted quantum sl2 and its ribbon
//! extension) are built in; arbitrary Hopf data can be supplied as structure
//! tensors over the same scalars.

pub mod cyclo;
pub mod diagrams;
pub mod eval;
pub mod hopf;
pub mod invariant;
pub mod linalg;
pub mod mtrace;
pub mod qgroups;
pub mod reps;
pub mod scalar;
pub mod tqft;

pub use cyclo::{CycScalar, ExtScalar};
pub use scalar::{Field, Quad, Rat, ScalarError};

/// Rational scalar, the prime field of every scalar type in this crate.
pub type Q = Rat;
/// Cyclotomic scalar, the coefficient field of the built-in algebras.
pub type Cyc = CycScalar;
/// Quadratic extension of [`Cyc`] by a formal square root.
pub type Ext = ExtScalar;

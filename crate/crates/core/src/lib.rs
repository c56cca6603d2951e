//! Smooth-loop calculus on the unit spheres of the composition algebras.
//!
//! The crate covers exact and floating-point loop arithmetic, pseudoautomorphism
//! groups, tangent algebras at arbitrary base points, the projection `φ_s`, a
//! field engine for loop bundles over flat tori, and torsion functionals.

pub mod algebra;
pub mod config;
pub mod error;
pub mod fields;
pub mod loops;
pub mod numerics;
pub mod phi;
pub mod pseudoauto;
pub mod report;
pub mod sampling;
pub mod suites;
pub mod tangent;
pub mod variational;

pub use algebra::{AlgebraTag, AlgebraValue, TangentVec};
pub use error::{Error, Result};

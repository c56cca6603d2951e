//! Scalars, dense linear algebra and finite differences.

mod fd;
mod jet;
mod matrix;
mod scalar;

pub use fd::{fd_derivative, fd_mixed, DiffConfig, FdEstimate};
pub use jet::{Jet, JET_DIM};
pub use matrix::{mat_exp, max_diff, norm2, nullspace, singular_values, Matrix};
pub use scalar::{cast, rational_to, Rational, Real, Scalar};

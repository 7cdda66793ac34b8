//! Conic modelling layer used by the subproblem solvers.
//!
//! Problems are declared as variable blocks (scalars, vectors, real symmetric
//! matrices) with a linear objective plus optional `w * ln(affine)` terms, and
//! equality, inequality, second-order, rotated second-order and PSD
//! constraints. [`solve`] hands the problem to Clarabel's interior-point
//! method. Complex Hermitian blocks are handled through [`hermitian_embed`].

// Links the system OpenBLAS used by Clarabel's PSD cone.
extern crate openblas_src as _;

mod error;
mod linalg;
mod problem;
mod solve;
mod text;

pub use error::ConicError;
pub use linalg::{hermitian_embed, is_hermitian, max_eigpair, unembed_hermitian, HERMITIAN_TOL};
pub use problem::{
    AffineExpr, BlockInfo, BlockKind, ConicProblem, Constraint, LogTerm, Sense, SymBlock, VarId,
};
pub use solve::{constraint_residual, solve, ConicSolution, SolveStatus, Tolerances};

//! Matrix-free geometric multigrid for the biharmonic equation discretized
//! with the C0 interior penalty (C0IP) method on nested Cartesian meshes.
//!
//! The global operator on a uniform axis-aligned mesh is a sum of Kronecker
//! products of one-dimensional mass, stiffness and C0IP "bulk" matrices.
//! Smoothers are additive or colored multiplicative vertex-patch Schwarz
//! methods whose local solvers either factorize the restricted operator or
//! apply the fast diagonalization method to its separable part.
//!
//! Module map:
//!
//! * [`mesh`]: level hierarchy, vertex patches, coloring, patch DoF maps.
//! * [`basis`], [`axis`]: 1D Lagrange basis, quadrature and the 1D matrices.
//! * [`operator`], [`assembly`]: Kronecker-sum operator and the independent
//!   quadrature-based assembly used as its oracle, right-hand sides, norms.
//! * [`patch`]: exact and fast-diagonalization local solvers.
//! * [`smoother`], [`multigrid`]: vertex-patch smoothers and the V-cycle.
//! * [`krylov`]: preconditioned CG/GMRES and mixed-precision cycles.
//! * [`experiments`]: the drivers behind the command-line tool.

// index loops mirror the tensor and quadrature formulas; negated float
// comparisons are deliberate so that NaN is rejected
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod axis;
pub mod banded;
pub mod basis;
pub mod dense;
pub mod error;
pub mod experiments;
pub mod krylov;
pub mod mesh;
pub mod multigrid;
pub mod operator;
pub mod patch;
pub mod scalar;
pub mod smoother;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::Scalar;

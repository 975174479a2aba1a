//! Vertex-patch local solvers.
//!
//! * Exact: Cholesky factorization of the restricted operator `A_v`, the
//!   full Kronecker-sum form on the `(2k-1)^d` patch DoFs.
//! * Fast diagonalization (FDM): the separable part `Ã_v` (all `B`-bearing
//!   terms, mixed first-derivative terms dropped) is inverted through
//!   per-direction generalized eigenpairs `Q_d^T M_d Q_d = I`,
//!   `Q_d^T B_d Q_d = Λ_d`:
//!   `Ã_v^{-1} = (⊗ Q_d) (Λ_1 ⊕ … ⊕ Λ_d)^{-1} (⊗ Q_d)^T`.
//!
//! On a uniform mesh the restricted 1D matrices only depend on whether the
//! patch touches the boundary along each axis, so solvers are built once per
//! [`AxisPosition`] combination and shared.

use crate::axis::{patch_block, Axis1DMatrices, PatchAxisMatrices};
use crate::dense::{generalized_eigen, Cholesky, DenseMatrix};
use crate::error::{Error, Result};
use crate::mesh::{AxisPosition, MeshHierarchy, VertexPatch, MAX_DIM};
use crate::operator::{c0ip_terms, materialize_terms, separable_terms};
use crate::scalar::Scalar;
use crate::tensor::contract;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalSolverKind {
    Exact,
    Fdm,
}

fn dense_factors(axes: &[PatchAxisMatrices]) -> Vec<[&DenseMatrix<f64>; 3]> {
    axes.iter()
        .map(|a| [&a.mass, &a.stiffness, &a.bulk])
        .collect()
}

/// Dense `A_v` from the full C0IP term list.
pub fn patch_matrix(axes: &[PatchAxisMatrices]) -> DenseMatrix<f64> {
    materialize_terms(&c0ip_terms(axes.len()), &dense_factors(axes))
}

/// Dense `Ã_v`: the `B`-bearing terms only.
pub fn separable_patch_matrix(axes: &[PatchAxisMatrices]) -> DenseMatrix<f64> {
    materialize_terms(&separable_terms(axes.len()), &dense_factors(axes))
}

#[derive(Debug, Clone)]
pub struct ExactPatchSolver<T> {
    factorization: Cholesky<T>,
}

impl ExactPatchSolver<f64> {
    pub fn new(axes: &[PatchAxisMatrices], sigma: f64) -> Result<Self> {
        let a = patch_matrix(axes);
        let factorization = Cholesky::new(&a).map_err(|e| Error::NotCoercive {
            sigma,
            what: format!("patch matrix A_v ({e})"),
        })?;
        Ok(Self { factorization })
    }
}

impl<T: Scalar> ExactPatchSolver<T> {
    pub fn size(&self) -> usize {
        self.factorization.dim()
    }

    pub fn solve(&self, r: &[T], out: &mut [T]) {
        out.copy_from_slice(r);
        self.factorization.solve_in_place(out);
    }

    pub fn cast<U: Scalar>(&self) -> ExactPatchSolver<U> {
        ExactPatchSolver {
            factorization: self.factorization.cast(),
        }
    }
}

/// Generalized eigenpairs of one direction.
#[derive(Debug, Clone)]
pub struct AxisEigen<T> {
    pub q: DenseMatrix<T>,
    pub qt: DenseMatrix<T>,
    pub lambda: Vec<T>,
}

impl<T: Scalar> AxisEigen<T> {
    fn cast<U: Scalar>(&self) -> AxisEigen<U> {
        AxisEigen {
            q: self.q.cast(),
            qt: self.qt.cast(),
            lambda: self
                .lambda
                .iter()
                .map(|&v| U::from_f64(v.to_f64()))
                .collect(),
        }
    }
}

/// Solves `B q = λ M q` for one direction with the normalization
/// `Q^T M Q = I`.
pub fn axis_eigen(
    mass: &DenseMatrix<f64>,
    bulk: &DenseMatrix<f64>,
    sigma: f64,
) -> Result<AxisEigen<f64>> {
    let (lambda, q) = generalized_eigen(bulk, mass)
        .map_err(|e| Error::NotPositiveDefinite(format!("patch mass matrix: {e}")))?;
    if let Some(&l) = lambda.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::NotCoercive {
            sigma,
            what: format!("patch 1D matrix B_j (generalized eigenvalue {l:e})"),
        });
    }
    Ok(AxisEigen {
        qt: q.transpose(),
        q,
        lambda,
    })
}

#[derive(Debug, Clone)]
pub struct FdmDecomposition<T> {
    axes: Vec<AxisEigen<T>>,
    /// `1 / (λ_{i_1} + … + λ_{i_d})`, lexicographic with axis 0 fastest.
    inv_eigen_sums: Vec<T>,
}

impl FdmDecomposition<f64> {
    pub fn new(axes: &[PatchAxisMatrices], sigma: f64) -> Result<Self> {
        let eig = axes
            .iter()
            .map(|a| axis_eigen(&a.mass, &a.bulk, sigma))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_axes(eig))
    }
}

impl<T: Scalar> FdmDecomposition<T> {
    pub fn from_axes(axes: Vec<AxisEigen<T>>) -> Self {
        let dims: Vec<usize> = axes.iter().map(|a| a.lambda.len()).collect();
        let total: usize = dims.iter().product();
        let inv_eigen_sums = (0..total)
            .map(|lin| {
                let mut rem = lin;
                let mut s = T::zero();
                for (a, &n) in axes.iter().zip(&dims) {
                    s += a.lambda[rem % n];
                    rem /= n;
                }
                T::one() / s
            })
            .collect();
        Self {
            axes,
            inv_eigen_sums,
        }
    }

    pub fn axes(&self) -> &[AxisEigen<T>] {
        &self.axes
    }

    pub fn size(&self) -> usize {
        self.inv_eigen_sums.len()
    }

    fn dims(&self) -> ([usize; MAX_DIM], usize) {
        let mut d = [0; MAX_DIM];
        for (i, a) in self.axes.iter().enumerate() {
            d[i] = a.lambda.len();
        }
        (d, self.axes.len())
    }

    /// `out = (⊗ Q) diag(1/Σλ) (⊗ Q)^T r`, using `scratch` for one
    /// intermediate tensor.
    pub fn apply_inverse(&self, r: &[T], out: &mut [T], scratch: &mut Vec<T>) {
        let (dims, dim) = self.dims();
        let dims = &dims[..dim];
        let n = self.size();
        scratch.clear();
        scratch.resize(n, T::zero());
        // forward: Q^T along every axis, ping-ponging between out and scratch
        let mut in_out = false; // false: current data lives in `r` then scratch/out
        out.copy_from_slice(r);
        for (axis, a) in self.axes.iter().enumerate() {
            if in_out {
                contract(&a.qt, axis, dims, scratch, out, T::one(), false);
            } else {
                contract(&a.qt, axis, dims, out, scratch, T::one(), false);
            }
            in_out = !in_out;
        }
        let cur: &mut [T] = if in_out { scratch } else { out };
        for (v, &s) in cur.iter_mut().zip(&self.inv_eigen_sums) {
            *v *= s;
        }
        for (axis, a) in self.axes.iter().enumerate() {
            if in_out {
                contract(&a.q, axis, dims, scratch, out, T::one(), false);
            } else {
                contract(&a.q, axis, dims, out, scratch, T::one(), false);
            }
            in_out = !in_out;
        }
        if in_out {
            out.copy_from_slice(scratch);
        }
    }

    /// Multiply-adds performed by [`apply_inverse`](Self::apply_inverse):
    /// `2 d m^(d+1) + m^d` for patch side `m`.
    pub fn flop_count(&self) -> usize {
        let (dims, dim) = self.dims();
        let n = self.size();
        let contraction: usize = (0..dim).map(|a| n * dims[a]).sum();
        2 * contraction + n
    }

    pub fn cast<U: Scalar>(&self) -> FdmDecomposition<U> {
        FdmDecomposition::from_axes(self.axes.iter().map(AxisEigen::cast).collect())
    }
}

#[derive(Debug, Clone)]
pub enum LocalSolver<T> {
    Exact(ExactPatchSolver<T>),
    Fdm(FdmDecomposition<T>),
}

impl<T: Scalar> LocalSolver<T> {
    pub fn size(&self) -> usize {
        match self {
            Self::Exact(s) => s.size(),
            Self::Fdm(s) => s.size(),
        }
    }

    pub fn solve(&self, r: &[T], out: &mut [T], scratch: &mut Vec<T>) {
        match self {
            Self::Exact(s) => s.solve(r, out),
            Self::Fdm(s) => s.apply_inverse(r, out, scratch),
        }
    }

    pub fn cast<U: Scalar>(&self) -> LocalSolver<U> {
        match self {
            Self::Exact(s) => LocalSolver::Exact(s.cast()),
            Self::Fdm(s) => LocalSolver::Fdm(s.cast()),
        }
    }
}

fn position_key(pos: &[AxisPosition]) -> usize {
    pos.iter().rev().fold(0, |acc, &p| acc * 4 + p as usize)
}

fn representative_vertex(pos: AxisPosition, cells: usize) -> usize {
    match pos {
        AxisPosition::Interior => 2,
        AxisPosition::TouchesLower | AxisPosition::TouchesBoth => 1,
        AxisPosition::TouchesUpper => cells - 1,
    }
}

/// Local solvers of one level, one per boundary-position combination.
#[derive(Debug, Clone)]
pub struct PatchSolvers<T> {
    kind: LocalSolverKind,
    dim: usize,
    cells: usize,
    solvers: Vec<Option<LocalSolver<T>>>,
}

impl PatchSolvers<f64> {
    pub fn new(
        hier: &MeshHierarchy,
        level: usize,
        axes: &[Axis1DMatrices],
        kind: LocalSolverKind,
    ) -> Result<Self> {
        hier.check_level(level)?;
        let dim = hier.dim();
        let cells = hier.cells_per_dim(level);
        let k = hier.degree();
        let m = hier.patch_size_1d();
        let sigma = axes[0].sigma;
        let positions: Vec<AxisPosition> = if cells == 2 {
            vec![AxisPosition::TouchesBoth]
        } else if cells == 4 {
            vec![
                AxisPosition::TouchesLower,
                AxisPosition::TouchesUpper,
                AxisPosition::Interior,
            ]
        } else {
            vec![
                AxisPosition::Interior,
                AxisPosition::TouchesLower,
                AxisPosition::TouchesUpper,
            ]
        };
        let mut solvers = vec![None; 4usize.pow(dim as u32)];
        let combos = positions.len().pow(dim as u32);
        for c in 0..combos {
            let mut rem = c;
            let pos: Vec<AxisPosition> = (0..dim)
                .map(|_| {
                    let p = positions[rem % positions.len()];
                    rem /= positions.len();
                    p
                })
                .collect();
            let blocks: Vec<PatchAxisMatrices> = pos
                .iter()
                .enumerate()
                .map(|(d, &p)| {
                    let v = representative_vertex(p, cells);
                    patch_block(&axes[d], (v - 1) * k, m)
                })
                .collect();
            let solver = match kind {
                LocalSolverKind::Exact => {
                    LocalSolver::Exact(ExactPatchSolver::new(&blocks, sigma)?)
                }
                LocalSolverKind::Fdm => LocalSolver::Fdm(FdmDecomposition::new(&blocks, sigma)?),
            };
            solvers[position_key(&pos)] = Some(solver);
        }
        Ok(Self {
            kind,
            dim,
            cells,
            solvers,
        })
    }
}

impl<T: Scalar> PatchSolvers<T> {
    pub fn kind(&self) -> LocalSolverKind {
        self.kind
    }

    pub fn n_distinct(&self) -> usize {
        self.solvers.iter().filter(|s| s.is_some()).count()
    }

    pub fn for_patch(&self, p: &VertexPatch) -> &LocalSolver<T> {
        let pos = p.axis_positions(self.cells);
        self.solvers[position_key(&pos[..self.dim])]
            .as_ref()
            .expect("solver for every position combination")
    }

    pub fn cast<U: Scalar>(&self) -> PatchSolvers<U> {
        PatchSolvers {
            kind: self.kind,
            dim: self.dim,
            cells: self.cells,
            solvers: self
                .solvers
                .iter()
                .map(|s| s.as_ref().map(LocalSolver::cast))
                .collect(),
        }
    }
}

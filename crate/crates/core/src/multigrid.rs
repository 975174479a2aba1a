//! Level transfers and the multigrid V-cycle.
//!
//! Operators are rediscretized on every level. Prolongation is the tensor
//! product of the 1D embedding of coarse into fine finite element functions
//! and restriction is its transpose.

use crate::axis::{assemble_axis_matrices, Axis1DMatrices};
use crate::banded::BandMatrix;
use crate::basis::Basis1D;
use crate::dense::{Cholesky, DenseMatrix};
use crate::error::{Error, Result};
use crate::mesh::MeshHierarchy;
use crate::operator::{KroneckerSumOperator, LinearOperator};
use crate::scalar::Scalar;
use crate::smoother::{residual, PatchSmoother, SmootherConfig};
use crate::tensor::apply_tensor_product;

/// 1D embedding on all nodes, boundary included: entry `(i, j)` is the
/// coarse basis function `j` evaluated at fine node `i`.
pub fn embedding_1d_with_boundary(n_coarse_cells: usize, basis: &Basis1D) -> DenseMatrix<f64> {
    let k = basis.degree();
    let nc = n_coarse_cells * k + 1;
    let nf = 2 * n_coarse_cells * k + 1;
    let pts = basis.support_points();
    let mut e = DenseMatrix::zeros(nf, nc);
    for i in 0..nf {
        // fine node i: fine cell i / k, local index i % k (in coarse cell units)
        let fine_cell = (i / k).min(2 * n_coarse_cells - 1);
        let local = i - fine_cell * k;
        let x = (fine_cell as f64 + pts[local]) * 0.5;
        let c = (fine_cell / 2).min(n_coarse_cells - 1);
        let xi = x - c as f64;
        for a in 0..=k {
            let v = basis.value(a, xi);
            // exact zeros keep the band narrow
            if v.abs() > 1e-14 {
                e[(i, c * k + a)] = v;
            }
        }
    }
    e
}

/// Interior-DoF 1D embedding (boundary rows and columns removed).
pub fn embedding_1d(n_coarse_cells: usize, basis: &Basis1D) -> BandMatrix<f64> {
    let full = embedding_1d_with_boundary(n_coarse_cells, basis);
    let nf = full.rows() - 2;
    let nc = full.cols() - 2;
    let inner = DenseMatrix::from_fn(nf, nc, |i, j| full[(i + 1, j + 1)]);
    BandMatrix::from_dense(&inner)
}

/// Transfers between level `ℓ - 1` and level `ℓ`.
#[derive(Debug, Clone)]
pub struct TransferOperators<T> {
    coarse_dims: Vec<usize>,
    fine_dims: Vec<usize>,
    embedding: BandMatrix<T>,
    restriction: BandMatrix<T>,
}

impl TransferOperators<f64> {
    pub fn new(hier: &MeshHierarchy, fine_level: usize, basis: &Basis1D) -> Result<Self> {
        hier.check_level(fine_level)?;
        if fine_level == 0 {
            return Err(Error::LevelOutOfRange {
                level: 0,
                num_levels: hier.num_levels(),
            });
        }
        let embedding = embedding_1d(hier.cells_per_dim(fine_level - 1), basis);
        Ok(Self {
            coarse_dims: hier.dofs_per_axis(fine_level - 1),
            fine_dims: hier.dofs_per_axis(fine_level),
            restriction: embedding.transpose(),
            embedding,
        })
    }
}

impl<T: Scalar> TransferOperators<T> {
    pub fn embedding(&self) -> &BandMatrix<T> {
        &self.embedding
    }

    pub fn coarse_len(&self) -> usize {
        self.coarse_dims.iter().product()
    }

    pub fn fine_len(&self) -> usize {
        self.fine_dims.iter().product()
    }

    /// `fine = (⊗ E) coarse`.
    pub fn prolongate(&self, coarse: &[T], fine: &mut [T]) {
        assert_eq!(coarse.len(), self.coarse_len());
        assert_eq!(fine.len(), self.fine_len());
        let factors: Vec<&BandMatrix<T>> = vec![&self.embedding; self.coarse_dims.len()];
        apply_tensor_product(&factors, &self.coarse_dims, coarse, fine, &mut Vec::new());
    }

    /// `coarse = (⊗ Eᵀ) fine`.
    pub fn restrict(&self, fine: &[T], coarse: &mut [T]) {
        assert_eq!(coarse.len(), self.coarse_len());
        assert_eq!(fine.len(), self.fine_len());
        let factors: Vec<&BandMatrix<T>> = vec![&self.restriction; self.fine_dims.len()];
        apply_tensor_product(&factors, &self.fine_dims, fine, coarse, &mut Vec::new());
    }

    pub fn cast<U: Scalar>(&self) -> TransferOperators<U> {
        TransferOperators {
            coarse_dims: self.coarse_dims.clone(),
            fine_dims: self.fine_dims.clone(),
            embedding: self.embedding.cast(),
            restriction: self.restriction.cast(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoarseSolver {
    /// One smoothing step from a zero initial guess.
    #[default]
    Smoother,
    /// Dense Cholesky solve on the coarsest level.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VCycleConfig {
    pub smoother: SmootherConfig,
    pub pre_steps: usize,
    pub post_steps: usize,
    pub coarse_solver: CoarseSolver,
}

impl VCycleConfig {
    pub fn new(smoother: SmootherConfig) -> Self {
        Self {
            smoother,
            pre_steps: smoother.steps,
            post_steps: smoother.steps,
            coarse_solver: CoarseSolver::default(),
        }
    }
}

#[derive(Debug)]
pub struct MgLevel<T> {
    pub operator: KroneckerSumOperator<T>,
    pub smoother: PatchSmoother<T>,
    /// Transfer from the next coarser level (absent on level 0).
    pub transfer: Option<TransferOperators<T>>,
}

impl<T: Scalar> Clone for MgLevel<T> {
    fn clone(&self) -> Self {
        Self {
            operator: self.operator.clone(),
            smoother: self.smoother.clone(),
            transfer: self.transfer.clone(),
        }
    }
}

/// The V-cycle over all levels of a hierarchy.
#[derive(Debug)]
pub struct Multigrid<T> {
    hier: MeshHierarchy,
    config: VCycleConfig,
    levels: Vec<MgLevel<T>>,
    coarse_factor: Option<Cholesky<T>>,
}

/// Per-direction 1D matrices of every level.
pub fn assemble_level_axes(
    hier: &MeshHierarchy,
    level: usize,
    basis: &Basis1D,
    sigma: f64,
) -> Result<Vec<Axis1DMatrices>> {
    (0..hier.dim())
        .map(|d| assemble_axis_matrices(hier, level, d, basis, sigma))
        .collect()
}

impl Multigrid<f64> {
    pub fn new(
        hier: &MeshHierarchy,
        basis: &Basis1D,
        sigma: f64,
        config: VCycleConfig,
    ) -> Result<Self> {
        if basis.degree() != hier.degree() {
            return Err(Error::InvalidConfig(format!(
                "basis degree {} does not match hierarchy degree {}",
                basis.degree(),
                hier.degree()
            )));
        }
        config.smoother.validate(hier.dim())?;
        let mut levels = Vec::with_capacity(hier.num_levels());
        for level in 0..hier.num_levels() {
            let axes = assemble_level_axes(hier, level, basis, sigma)?;
            let operator = KroneckerSumOperator::c0ip(&axes);
            let smoother = PatchSmoother::new(hier, level, &axes, config.smoother)?;
            let transfer = if level > 0 {
                Some(TransferOperators::new(hier, level, basis)?)
            } else {
                None
            };
            levels.push(MgLevel {
                operator,
                smoother,
                transfer,
            });
        }
        let coarse_factor = match config.coarse_solver {
            CoarseSolver::Smoother => None,
            CoarseSolver::Exact => {
                let a = levels[0].operator.materialize();
                Some(Cholesky::new(&a).map_err(|_| Error::NotCoercive {
                    sigma,
                    what: "coarse-level matrix".into(),
                })?)
            }
        };
        Ok(Self {
            hier: hier.clone(),
            config,
            levels,
            coarse_factor,
        })
    }
}

impl<T: Scalar> Multigrid<T> {
    pub fn hierarchy(&self) -> &MeshHierarchy {
        &self.hier
    }

    pub fn config(&self) -> &VCycleConfig {
        &self.config
    }

    pub fn levels(&self) -> &[MgLevel<T>] {
        &self.levels
    }

    pub fn finest(&self) -> &MgLevel<T> {
        self.levels.last().expect("at least one level")
    }

    pub fn operator(&self, level: usize) -> &KroneckerSumOperator<T> {
        &self.levels[level].operator
    }

    /// Copy of every operator, smoother, transfer and factorization in
    /// another precision.
    pub fn cast<U: Scalar>(&self) -> Multigrid<U> {
        Multigrid {
            hier: self.hier.clone(),
            config: self.config,
            levels: self
                .levels
                .iter()
                .map(|l| MgLevel {
                    operator: l.operator.cast(),
                    smoother: l.smoother.cast(),
                    transfer: l.transfer.as_ref().map(TransferOperators::cast),
                })
                .collect(),
            coarse_factor: self.coarse_factor.as_ref().map(Cholesky::cast),
        }
    }

    fn coarse_solve(&self, x: &mut [T], b: &[T]) {
        let l0 = &self.levels[0];
        match &self.coarse_factor {
            Some(f) => {
                x.copy_from_slice(b);
                f.solve_in_place(x);
            }
            None => l0.smoother.smooth_steps(&l0.operator, x, b, 1),
        }
    }

    /// One V-cycle on `level` improving `x` for `A_ℓ x = b`.
    pub fn v_cycle(&self, level: usize, x: &mut [T], b: &[T]) {
        if level == 0 {
            self.coarse_solve(x, b);
            return;
        }
        let lv = &self.levels[level];
        let op = &lv.operator;
        let transfer = lv.transfer.as_ref().expect("transfer on levels above 0");
        lv.smoother.smooth_steps(op, x, b, self.config.pre_steps);
        let mut r = vec![T::zero(); x.len()];
        residual(op, x, b, &mut r);
        let mut bc = vec![T::zero(); transfer.coarse_len()];
        transfer.restrict(&r, &mut bc);
        let mut xc = vec![T::zero(); bc.len()];
        self.v_cycle(level - 1, &mut xc, &bc);
        transfer.prolongate(&xc, &mut r);
        for (xi, &c) in x.iter_mut().zip(&r) {
            *xi += c;
        }
        lv.smoother.smooth_steps(op, x, b, self.config.post_steps);
    }
}

/// As a preconditioner: one V-cycle on the finest level from zero.
impl<T: Scalar> LinearOperator<T> for Multigrid<T> {
    fn size(&self) -> usize {
        self.finest().operator.len()
    }

    fn apply(&self, r: &[T], z: &mut [T]) {
        z.iter_mut().for_each(|v| *v = T::zero());
        self.v_cycle(self.levels.len() - 1, z, r);
    }
}

//! Additive (AVS) and colored multiplicative (MVS) vertex-patch smoothers.
//!
//! AVS: `x ← x + ω Σ_v R_vᵀ A_v⁻¹ R_v (b − A x)` with a single residual.
//! MVS: the same update color by color, recomputing the residual before
//! every color. Patches of one color share no DoFs and are not coupled by
//! the operator, so their corrections commute.
//!
//! Residuals always use the full global operator, also with inexact local
//! solvers.

use crate::axis::Axis1DMatrices;
use crate::error::{Error, Result};
use crate::mesh::{Coloring, MeshHierarchy, VertexPatch, MAX_DIM};
use crate::operator::LinearOperator;
use crate::patch::{LocalSolverKind, PatchSolvers};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SmootherKind {
    Additive,
    Multiplicative,
}

/// How additive corrections are combined. Both give the same result up to
/// floating-point reassociation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AdditiveLoop {
    /// Accumulate every patch correction into a buffer, then add.
    #[default]
    Buffered,
    /// Add corrections color by color directly into the iterate.
    Colored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmootherConfig {
    pub kind: SmootherKind,
    /// Smoother applications per pre- or post-smoothing phase.
    pub steps: usize,
    pub omega: f64,
    pub local_solver: LocalSolverKind,
    pub additive_loop: AdditiveLoop,
}

impl SmootherConfig {
    /// Step counts and dampings used in the reference experiments.
    pub fn default_for(dim: usize, kind: SmootherKind, local_solver: LocalSolverKind) -> Self {
        let (steps, omega) = match (kind, dim) {
            (SmootherKind::Additive, 2) => (2, 0.25),
            (SmootherKind::Additive, _) => match local_solver {
                LocalSolverKind::Exact => (1, 0.125),
                LocalSolverKind::Fdm => (1, 0.1),
            },
            (SmootherKind::Multiplicative, 2) => (1, 1.0),
            (SmootherKind::Multiplicative, _) => (1, 0.7),
        };
        Self {
            kind,
            steps,
            omega,
            local_solver,
            additive_loop: AdditiveLoop::default(),
        }
    }

    /// Largest admissible damping: `1/2^d` (patches overlapping in a cell)
    /// for AVS, 1 for MVS.
    pub fn omega_bound(kind: SmootherKind, dim: usize) -> f64 {
        match kind {
            SmootherKind::Additive => 1.0 / (1usize << dim) as f64,
            SmootherKind::Multiplicative => 1.0,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(1..=2).contains(&self.steps) {
            return Err(Error::InvalidConfig(format!(
                "smoothing steps must be 1 or 2, got {}",
                self.steps
            )));
        }
        let bound = Self::omega_bound(self.kind, dim);
        if !(self.omega > 0.0 && self.omega <= bound * (1.0 + 1e-12)) {
            return Err(Error::InvalidConfig(format!(
                "damping omega = {} outside (0, {bound}] for the {} smoother in {dim}D",
                self.omega,
                match self.kind {
                    SmootherKind::Additive => "additive",
                    SmootherKind::Multiplicative => "multiplicative",
                }
            )));
        }
        Ok(())
    }
}

/// Vertex-patch smoother of one level.
#[derive(Debug, Clone)]
pub struct PatchSmoother<T> {
    config: SmootherConfig,
    omega: T,
    n_dofs: usize,
    k: usize,
    strides: [usize; MAX_DIM],
    coloring: Coloring,
    /// Patch-local lexicographic index → offset from the patch base index.
    offsets: Vec<usize>,
    solvers: PatchSolvers<T>,
}

impl PatchSmoother<f64> {
    pub fn new(
        hier: &MeshHierarchy,
        level: usize,
        axes: &[Axis1DMatrices],
        config: SmootherConfig,
    ) -> Result<Self> {
        let dim = hier.dim();
        config.validate(dim)?;
        let solvers = PatchSolvers::new(hier, level, axes, config.local_solver)?;
        let n1 = hier.dofs_1d(level);
        let mut strides = [0; MAX_DIM];
        let mut s = 1;
        for st in strides.iter_mut().take(dim) {
            *st = s;
            s *= n1;
        }
        let m = hier.patch_size_1d();
        let offsets = (0..hier.patch_n_dofs())
            .map(|mut lin| {
                let mut off = 0;
                for st in strides.iter().take(dim) {
                    off += (lin % m) * st;
                    lin /= m;
                }
                off
            })
            .collect();
        Ok(Self {
            config,
            omega: config.omega,
            n_dofs: hier.n_dofs(level),
            k: hier.degree(),
            strides,
            coloring: hier.color_patches(level)?,
            offsets,
            solvers,
        })
    }
}

impl<T: Scalar> PatchSmoother<T> {
    pub fn config(&self) -> &SmootherConfig {
        &self.config
    }

    pub fn coloring(&self) -> &Coloring {
        &self.coloring
    }

    pub fn solvers(&self) -> &PatchSolvers<T> {
        &self.solvers
    }

    pub fn size(&self) -> usize {
        self.n_dofs
    }

    pub fn cast<U: Scalar>(&self) -> PatchSmoother<U> {
        PatchSmoother {
            config: self.config,
            omega: U::from_f64(self.omega.to_f64()),
            n_dofs: self.n_dofs,
            k: self.k,
            strides: self.strides,
            coloring: self.coloring.clone(),
            offsets: self.offsets.clone(),
            solvers: self.solvers.cast(),
        }
    }

    fn base(&self, p: &VertexPatch) -> usize {
        p.vertex()
            .iter()
            .zip(&self.strides)
            .map(|(&v, &s)| (v - 1) * self.k * s)
            .sum()
    }

    /// Global DoF indices of a patch in patch-local lexicographic order.
    pub fn patch_dofs(&self, p: &VertexPatch) -> Vec<usize> {
        let base = self.base(p);
        self.offsets.iter().map(|&o| base + o).collect()
    }

    /// `target[R_v] += scale · A_v⁻¹ R_v r`.
    fn patch_correction(
        &self,
        p: &VertexPatch,
        r: &[T],
        target: &mut [T],
        scale: T,
        buf: &mut PatchBuffers<T>,
    ) {
        let base = self.base(p);
        for (l, &o) in buf.local_r.iter_mut().zip(&self.offsets) {
            *l = r[base + o];
        }
        self.solvers
            .for_patch(p)
            .solve(&buf.local_r, &mut buf.local_x, &mut buf.scratch);
        for (&d, &o) in buf.local_x.iter().zip(&self.offsets) {
            target[base + o] += scale * d;
        }
    }

    /// Applies the configured number of smoothing steps.
    pub fn smooth(&self, op: &dyn LinearOperator<T>, x: &mut [T], b: &[T]) {
        self.smooth_steps(op, x, b, self.config.steps);
    }

    pub fn smooth_steps(&self, op: &dyn LinearOperator<T>, x: &mut [T], b: &[T], steps: usize) {
        for _ in 0..steps {
            match self.config.kind {
                SmootherKind::Additive => self.avs_step(op, x, b),
                SmootherKind::Multiplicative => self.mvs_step(op, x, b),
            }
        }
    }

    /// One additive step, `x ← x + ω Σ_v R_vᵀ A_v⁻¹ R_v (b − A x)`.
    pub fn avs_step(&self, op: &dyn LinearOperator<T>, x: &mut [T], b: &[T]) {
        let mut buf = PatchBuffers::new(self.offsets.len());
        let mut r = vec![T::zero(); self.n_dofs];
        residual(op, x, b, &mut r);
        match self.config.additive_loop {
            AdditiveLoop::Buffered => {
                let mut upd = vec![T::zero(); self.n_dofs];
                for p in self.coloring.classes.iter().flatten() {
                    self.patch_correction(p, &r, &mut upd, T::one(), &mut buf);
                }
                for (xi, u) in x.iter_mut().zip(&upd) {
                    *xi += self.omega * *u;
                }
            }
            AdditiveLoop::Colored => {
                for p in self.coloring.classes.iter().flatten() {
                    self.patch_correction(p, &r, x, self.omega, &mut buf);
                }
            }
        }
    }

    /// One colored multiplicative step; one residual per nonempty color.
    pub fn mvs_step(&self, op: &dyn LinearOperator<T>, x: &mut [T], b: &[T]) {
        self.mvs_step_ordered(op, x, b, &self.coloring.classes);
    }

    /// Multiplicative step over an explicit color partition (each inner
    /// list must consist of pairwise non-interacting patches).
    pub fn mvs_step_ordered(
        &self,
        op: &dyn LinearOperator<T>,
        x: &mut [T],
        b: &[T],
        classes: &[Vec<VertexPatch>],
    ) {
        let mut buf = PatchBuffers::new(self.offsets.len());
        let mut r = vec![T::zero(); self.n_dofs];
        for class in classes.iter().filter(|c| !c.is_empty()) {
            residual(op, x, b, &mut r);
            for p in class {
                self.patch_correction(p, &r, x, self.omega, &mut buf);
            }
        }
    }

    /// Patch-by-patch multiplicative sweep with a fresh residual before
    /// every patch, in color order. Reference for [`mvs_step`](Self::mvs_step).
    pub fn sequential_multiplicative_step(&self, op: &dyn LinearOperator<T>, x: &mut [T], b: &[T]) {
        let singletons: Vec<Vec<VertexPatch>> = self
            .coloring
            .classes
            .iter()
            .flatten()
            .map(|p| vec![*p])
            .collect();
        self.mvs_step_ordered(op, x, b, &singletons);
    }
}

struct PatchBuffers<T> {
    local_r: Vec<T>,
    local_x: Vec<T>,
    scratch: Vec<T>,
}

impl<T: Scalar> PatchBuffers<T> {
    fn new(n: usize) -> Self {
        Self {
            local_r: vec![T::zero(); n],
            local_x: vec![T::zero(); n],
            scratch: Vec::with_capacity(n),
        }
    }
}

/// `r = b − A x`.
pub fn residual<T: Scalar>(op: &dyn LinearOperator<T>, x: &[T], b: &[T], r: &mut [T]) {
    op.apply(x, r);
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

//! The global C0IP operator as a matrix-free sum of Kronecker products.
//!
//! On a uniform axis-aligned mesh with lexicographic DoF ordering the C0IP
//! matrix is exactly
//!
//! ```text
//! 2D:  B⊗M + 2 L⊗L + M⊗B
//! 3D:  B⊗M⊗M + M⊗B⊗M + M⊗M⊗B + 2 (L⊗L⊗M + M⊗L⊗L + L⊗M⊗L)
//! ```
//!
//! where each factor acts along its own direction. Application is done by
//! successive single-direction contractions; the Kronecker matrix is never
//! formed.

use std::collections::BTreeMap;
use std::sync::Mutex;

use crate::axis::Axis1DMatrices;
use crate::banded::BandMatrix;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::contract;

/// Something that maps vectors of length [`size`](Self::size) to vectors of
/// the same length.
pub trait LinearOperator<T> {
    fn size(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

/// Identity map, handy for unpreconditioned Krylov runs.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl<T: Scalar> LinearOperator<T> for Identity {
    fn size(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(x);
    }
}

/// Dense matrices act as operators too (oracles, coarse solves).
impl<T: Scalar> LinearOperator<T> for DenseMatrix<T> {
    fn size(&self) -> usize {
        self.rows()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    Mass,
    Stiffness,
    Bulk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KronTerm {
    pub coeff: f64,
    /// One factor per direction.
    pub factors: Vec<Factor>,
}

impl KronTerm {
    fn new(coeff: f64, factors: &[Factor]) -> Self {
        Self {
            coeff,
            factors: factors.to_vec(),
        }
    }
}

/// Full C0IP term list: 3 terms in 2D, 6 in 3D.
pub fn c0ip_terms(dim: usize) -> Vec<KronTerm> {
    use Factor::*;
    match dim {
        2 => vec![
            KronTerm::new(1.0, &[Bulk, Mass]),
            KronTerm::new(2.0, &[Stiffness, Stiffness]),
            KronTerm::new(1.0, &[Mass, Bulk]),
        ],
        3 => vec![
            KronTerm::new(1.0, &[Bulk, Mass, Mass]),
            KronTerm::new(1.0, &[Mass, Bulk, Mass]),
            KronTerm::new(1.0, &[Mass, Mass, Bulk]),
            KronTerm::new(2.0, &[Stiffness, Stiffness, Mass]),
            KronTerm::new(2.0, &[Mass, Stiffness, Stiffness]),
            KronTerm::new(2.0, &[Stiffness, Mass, Stiffness]),
        ],
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// The separable part: only the `B`-bearing terms, i.e. the C0IP operator
/// without the mixed first-derivative products.
pub fn separable_terms(dim: usize) -> Vec<KronTerm> {
    c0ip_terms(dim)
        .into_iter()
        .filter(|t| t.factors.contains(&Factor::Bulk))
        .collect()
}

/// Per-direction factor matrices.
#[derive(Debug, Clone)]
pub struct AxisFactors<T> {
    pub mass: BandMatrix<T>,
    pub stiffness: BandMatrix<T>,
    pub bulk: BandMatrix<T>,
}

impl<T: Scalar> AxisFactors<T> {
    pub fn from_axis(ax: &Axis1DMatrices) -> Self {
        Self {
            mass: ax.mass.cast(),
            stiffness: ax.stiffness.cast(),
            bulk: ax.bulk.cast(),
        }
    }

    pub fn get(&self, f: Factor) -> &BandMatrix<T> {
        match f {
            Factor::Mass => &self.mass,
            Factor::Stiffness => &self.stiffness,
            Factor::Bulk => &self.bulk,
        }
    }

    pub fn cast<U: Scalar>(&self) -> AxisFactors<U> {
        AxisFactors {
            mass: self.mass.cast(),
            stiffness: self.stiffness.cast(),
            bulk: self.bulk.cast(),
        }
    }
}

/// Shared-prefix evaluation order. Terms sharing leading factors reuse the
/// partial contractions; terms sharing the last factor are summed before the
/// final contraction.
#[derive(Debug, Clone)]
struct EvalPlan {
    /// `stages[a]` lists `(parent node in stage a-1, factor)` for axis `a`,
    /// for `a < dim - 1`. Stage 0 parents are the input vector.
    stages: Vec<Vec<(usize, Factor)>>,
    /// `(last factor, [(node in last prefix stage, coeff)])`.
    last: Vec<(Factor, Vec<(usize, f64)>)>,
}

impl EvalPlan {
    fn new(dim: usize, terms: &[KronTerm]) -> Self {
        let mut stages: Vec<Vec<(usize, Factor)>> = Vec::new();
        // node id of each term's prefix at the current stage
        let mut term_node = vec![0usize; terms.len()];
        for axis in 0..dim - 1 {
            let mut map: BTreeMap<(usize, Factor), usize> = BTreeMap::new();
            let mut stage = Vec::new();
            for (t, term) in terms.iter().enumerate() {
                let key = (term_node[t], term.factors[axis]);
                let id = *map.entry(key).or_insert_with(|| {
                    stage.push(key);
                    stage.len() - 1
                });
                term_node[t] = id;
            }
            stages.push(stage);
        }
        let mut last: BTreeMap<Factor, Vec<(usize, f64)>> = BTreeMap::new();
        for (t, term) in terms.iter().enumerate() {
            last.entry(term.factors[dim - 1])
                .or_default()
                .push((term_node[t], term.coeff));
        }
        Self {
            stages,
            last: last.into_iter().collect(),
        }
    }

    fn n_contractions(&self) -> usize {
        self.stages.iter().map(Vec::len).sum::<usize>() + self.last.len()
    }
}

/// Global operator `Σ_t c_t ⊗_d F_{t,d}`.
#[derive(Debug)]
pub struct KroneckerSumOperator<T> {
    dims: Vec<usize>,
    axes: Vec<AxisFactors<T>>,
    terms: Vec<KronTerm>,
    plan: EvalPlan,
    scratch: Mutex<Vec<Vec<T>>>,
}

impl<T: Scalar> Clone for KroneckerSumOperator<T> {
    fn clone(&self) -> Self {
        Self::new(self.axes.clone(), self.terms.clone())
    }
}

impl<T: Scalar> KroneckerSumOperator<T> {
    pub fn new(axes: Vec<AxisFactors<T>>, terms: Vec<KronTerm>) -> Self {
        let dim = axes.len();
        assert!(dim >= 2, "need at least two directions");
        assert!(terms.iter().all(|t| t.factors.len() == dim));
        for a in &axes {
            let n = a.mass.rows();
            assert!([&a.mass, &a.stiffness, &a.bulk]
                .iter()
                .all(|m| m.rows() == n && m.cols() == n));
        }
        let dims = axes.iter().map(|a| a.mass.rows()).collect();
        let plan = EvalPlan::new(dim, &terms);
        Self {
            dims,
            axes,
            terms,
            plan,
            scratch: Mutex::new(Vec::new()),
        }
    }

    /// Full C0IP operator from per-direction 1D matrices.
    pub fn c0ip(axes: &[Axis1DMatrices]) -> Self {
        let dim = axes.len();
        Self::new(
            axes.iter().map(AxisFactors::from_axis).collect(),
            c0ip_terms(dim),
        )
    }

    /// Separable approximation without the mixed-derivative terms.
    pub fn separable(axes: &[Axis1DMatrices]) -> Self {
        let dim = axes.len();
        Self::new(
            axes.iter().map(AxisFactors::from_axis).collect(),
            separable_terms(dim),
        )
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn terms(&self) -> &[KronTerm] {
        &self.terms
    }

    pub fn axes(&self) -> &[AxisFactors<T>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of single-direction contractions per application.
    pub fn contractions_per_apply(&self) -> usize {
        self.plan.n_contractions()
    }

    pub fn cast<U: Scalar>(&self) -> KroneckerSumOperator<U> {
        KroneckerSumOperator::new(
            self.axes.iter().map(AxisFactors::cast).collect(),
            self.terms.clone(),
        )
    }

    pub fn apply_checked(&self, x: &[T], y: &mut [T]) -> Result<()> {
        let n = self.len();
        for len in [x.len(), y.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        self.apply_impl(x, y);
        Ok(())
    }

    fn take_buffer(&self, pool: &mut Vec<Vec<T>>) -> Vec<T> {
        let n = self.len();
        match pool.pop() {
            Some(mut v) => {
                v.resize(n, T::zero());
                v
            }
            None => vec![T::zero(); n],
        }
    }

    fn apply_impl(&self, x: &[T], y: &mut [T]) {
        let dim = self.dims.len();
        let mut pool = std::mem::take(&mut *self.scratch.lock().unwrap());

        let mut prev: Vec<Vec<T>> = Vec::new();
        for (axis, stage) in self.plan.stages.iter().enumerate() {
            let mut cur = Vec::with_capacity(stage.len());
            for &(parent, f) in stage {
                let mut buf = self.take_buffer(&mut pool);
                let src: &[T] = if axis == 0 { x } else { &prev[parent] };
                contract(
                    self.axes[axis].get(f),
                    axis,
                    &self.dims,
                    src,
                    &mut buf,
                    T::one(),
                    false,
                );
                cur.push(buf);
            }
            pool.append(&mut prev);
            prev = cur;
        }

        let last_axis = dim - 1;
        let mut acc = self.take_buffer(&mut pool);
        y.iter_mut().for_each(|v| *v = T::zero());
        for (f, items) in &self.plan.last {
            let src: &[T] = if items.len() == 1 && items[0].1 == 1.0 {
                &prev[items[0].0]
            } else {
                acc.iter_mut().for_each(|v| *v = T::zero());
                for &(node, c) in items {
                    let c = T::from_f64(c);
                    for (a, &p) in acc.iter_mut().zip(&prev[node]) {
                        *a += c * p;
                    }
                }
                &acc
            };
            contract(
                self.axes[last_axis].get(*f),
                last_axis,
                &self.dims,
                src,
                y,
                T::one(),
                true,
            );
        }
        pool.append(&mut prev);
        pool.push(acc);
        *self.scratch.lock().unwrap() = pool;
    }

    /// Dense matrix of the operator, column by column.
    pub fn materialize(&self) -> DenseMatrix<T> {
        let n = self.len();
        let mut out = DenseMatrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            self.apply_impl(&e, &mut col);
            e[j] = T::zero();
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out
    }
}

impl<T: Scalar> LinearOperator<T> for KroneckerSumOperator<T> {
    fn size(&self) -> usize {
        self.len()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.len(), "operator input length");
        assert_eq!(y.len(), self.len(), "operator output length");
        self.apply_impl(x, y);
    }
}

/// Materializes `Σ_t c_t ⊗ F_{t,d}` from dense per-direction factors (used
/// for patch-local matrices). Axis 0 is the fastest index, so the explicit
/// Kronecker order is reversed.
pub fn materialize_terms(
    terms: &[KronTerm],
    factors: &[[&DenseMatrix<f64>; 3]],
) -> DenseMatrix<f64> {
    let pick = |d: usize, f: Factor| -> &DenseMatrix<f64> {
        match f {
            Factor::Mass => factors[d][0],
            Factor::Stiffness => factors[d][1],
            Factor::Bulk => factors[d][2],
        }
    };
    let dim = factors.len();
    let mut total: Option<DenseMatrix<f64>> = None;
    for t in terms {
        let mut m = pick(dim - 1, t.factors[dim - 1]).clone();
        for d in (0..dim - 1).rev() {
            m = m.kron(pick(d, t.factors[d]));
        }
        let m = m.scale(t.coeff);
        total = Some(match total {
            Some(acc) => acc.add(&m),
            None => m,
        });
    }
    total.expect("at least one term")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axis::{assemble_axis_matrices, default_penalty};
    use crate::basis::Basis1D;
    use crate::mesh::MeshHierarchy;

    fn axes(dim: usize, k: usize, level: usize) -> Vec<Axis1DMatrices> {
        let h = MeshHierarchy::new(dim, k, level + 1).unwrap();
        let b = Basis1D::new(k).unwrap();
        (0..dim)
            .map(|d| assemble_axis_matrices(&h, level, d, &b, default_penalty(k)).unwrap())
            .collect()
    }

    #[test]
    fn term_structure() {
        assert_eq!(c0ip_terms(2).len(), 3);
        assert_eq!(c0ip_terms(3).len(), 6);
        let t3 = c0ip_terms(3);
        assert_eq!(
            t3.iter()
                .filter(|t| t.factors.contains(&Factor::Bulk))
                .count(),
            3
        );
        assert_eq!(t3.iter().filter(|t| t.coeff == 2.0).count(), 3);
        assert_eq!(separable_terms(2).len(), 2);
        assert_eq!(separable_terms(3).len(), 3);
    }

    #[test]
    fn shared_prefix_plan_is_cheaper() {
        let op2 = KroneckerSumOperator::<f64>::c0ip(&axes(2, 2, 0));
        assert_eq!(op2.contractions_per_apply(), 6);
        let op3 = KroneckerSumOperator::<f64>::c0ip(&axes(3, 2, 0));
        assert_eq!(op3.contractions_per_apply(), 12);
    }

    #[test]
    fn matches_explicit_kronecker_sum() {
        for dim in [2, 3] {
            let ax = axes(dim, 2, 1);
            let op = KroneckerSumOperator::<f64>::c0ip(&ax);
            let dense: Vec<[DenseMatrix<f64>; 3]> = ax
                .iter()
                .map(|a| [a.mass.to_dense(), a.stiffness.to_dense(), a.bulk.to_dense()])
                .collect();
            let refs: Vec<[&DenseMatrix<f64>; 3]> =
                dense.iter().map(|[m, l, b]| [m, l, b]).collect();
            let explicit = materialize_terms(&c0ip_terms(dim), &refs);
            let mat = op.materialize();
            assert!(mat.sub(&explicit).max_abs() <= 1e-12 * explicit.max_abs());
            assert!(mat.asymmetry() <= 1e-12 * mat.max_abs());
        }
    }

    #[test]
    fn zero_in_zero_out_and_length_check() {
        let op = KroneckerSumOperator::<f64>::c0ip(&axes(2, 3, 1));
        let x = vec![0.0; op.len()];
        let mut y = vec![1.0; op.len()];
        op.apply(&x, &mut y);
        assert!(y.iter().all(|&v| v == 0.0));
        let mut short = vec![0.0; 3];
        assert!(matches!(
            op.apply_checked(&x, &mut short),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}

//! Single-direction contractions on lexicographically ordered tensor data
//! (axis 0 fastest). These are the sum-factorization kernels behind every
//! Kronecker-structured operator in the crate.

use crate::banded::BandMatrix;
use crate::dense::DenseMatrix;
use crate::scalar::Scalar;

/// A matrix that can be applied along one tensor direction.
pub trait AxisMatrix<T> {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `(first column, values)` of the stored run in row `i`.
    fn row_run(&self, i: usize) -> (usize, &[T]);
}

impl<T: Scalar> AxisMatrix<T> for BandMatrix<T> {
    #[inline]
    fn nrows(&self) -> usize {
        self.rows()
    }
    #[inline]
    fn ncols(&self) -> usize {
        self.cols()
    }
    #[inline]
    fn row_run(&self, i: usize) -> (usize, &[T]) {
        self.row(i)
    }
}

impl<T: Scalar> AxisMatrix<T> for DenseMatrix<T> {
    #[inline]
    fn nrows(&self) -> usize {
        self.rows()
    }
    #[inline]
    fn ncols(&self) -> usize {
        self.cols()
    }
    #[inline]
    fn row_run(&self, i: usize) -> (usize, &[T]) {
        (0, self.row(i))
    }
}

/// `out = scale * (A along `axis`) x` (or `+=` when `accumulate`).
///
/// `dims` are the extents of `x`; `out` has the same extents except
/// `dims[axis]` is replaced by `a.nrows()`.
pub fn contract<T: Scalar, A: AxisMatrix<T> + ?Sized>(
    a: &A,
    axis: usize,
    dims: &[usize],
    x: &[T],
    out: &mut [T],
    scale: T,
    accumulate: bool,
) {
    let n_in = dims[axis];
    assert_eq!(a.ncols(), n_in, "contraction size mismatch on axis {axis}");
    let n_out = a.nrows();
    let stride: usize = dims[..axis].iter().product();
    let outer: usize = dims[axis + 1..].iter().product();
    debug_assert_eq!(x.len(), stride * n_in * outer);
    debug_assert_eq!(out.len(), stride * n_out * outer);

    if !accumulate {
        out.iter_mut().for_each(|v| *v = T::zero());
    }

    if stride == 1 {
        for o in 0..outer {
            let xin = &x[o * n_in..(o + 1) * n_in];
            let yout = &mut out[o * n_out..(o + 1) * n_out];
            for (i, y) in yout.iter_mut().enumerate() {
                let (c, v) = a.row_run(i);
                let s: T = v
                    .iter()
                    .zip(&xin[c..c + v.len()])
                    .map(|(&p, &q)| p * q)
                    .sum();
                *y += scale * s;
            }
        }
    } else {
        for o in 0..outer {
            let xin = &x[o * n_in * stride..(o + 1) * n_in * stride];
            let yout = &mut out[o * n_out * stride..(o + 1) * n_out * stride];
            for i in 0..n_out {
                let (c, v) = a.row_run(i);
                let dst = &mut yout[i * stride..(i + 1) * stride];
                for (l, &aij) in v.iter().enumerate() {
                    let f = scale * aij;
                    let src = &xin[(c + l) * stride..(c + l + 1) * stride];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += f * s;
                    }
                }
            }
        }
    }
}

/// Applies one matrix per direction: `out = (⊗_d A_d) x`, with `A_d` acting
/// on axis `d`. `scratch` must hold at least one intermediate tensor.
pub fn apply_tensor_product<T: Scalar, A: AxisMatrix<T>>(
    factors: &[&A],
    dims: &[usize],
    x: &[T],
    out: &mut [T],
    scratch: &mut Vec<T>,
) {
    let d = dims.len();
    assert_eq!(factors.len(), d);
    let mut cur_dims = dims.to_vec();
    let mut cur: Vec<T> = x.to_vec();
    for (axis, a) in factors.iter().enumerate() {
        let mut next_dims = cur_dims.clone();
        next_dims[axis] = a.nrows();
        let len: usize = next_dims.iter().product();
        if axis + 1 == d {
            contract(*a, axis, &cur_dims, &cur, out, T::one(), false);
        } else {
            scratch.clear();
            scratch.resize(len, T::zero());
            contract(*a, axis, &cur_dims, &cur, scratch, T::one(), false);
            std::mem::swap(&mut cur, scratch);
        }
        cur_dims = next_dims;
    }
}

//! Small dense linear algebra: row-major matrices, Cholesky factorization and
//! the cyclic Jacobi eigensolver used for patch-sized problems.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(l);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &o) in dst.iter_mut().zip(orow) {
                    *d += a * o;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Standard Kronecker product: `(self ⊗ other)[(i*p + k, j*q + l)] = self[i,j] * other[k,l]`.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (other.rows, other.cols);
        Self::from_fn(self.rows * p, self.cols * q, |r, c| {
            self[(r / p, c / q)] * other[(r % p, c % q)]
        })
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// `max |A - A^T|`
    pub fn asymmetry(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let mut m = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    /// Principal submatrix on `idx × idx`.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor `A = C C^T`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    factor: DenseMatrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        let n = a.rows();
        if n != a.cols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.cols(),
            });
        }
        let mut c = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for l in 0..j {
                d -= c[(j, l)] * c[(j, l)];
            }
            if !(d > T::zero()) {
                return Err(Error::NotPositiveDefinite(format!(
                    "pivot {j} of {n} is {d}"
                )));
            }
            let d = d.sqrt();
            c[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for l in 0..j {
                    s -= c[(i, l)] * c[(j, l)];
                }
                c[(i, j)] = s / d;
            }
        }
        Ok(Self { factor: c })
    }

    pub fn dim(&self) -> usize {
        self.factor.rows()
    }

    pub fn factor(&self) -> &DenseMatrix<T> {
        &self.factor
    }

    /// Solves `C y = x` in place.
    pub fn forward_in_place(&self, x: &mut [T]) {
        let c = &self.factor;
        for i in 0..c.rows() {
            let row = c.row(i);
            let mut s = x[i];
            for l in 0..i {
                s -= row[l] * x[l];
            }
            x[i] = s / row[i];
        }
    }

    /// Solves `C^T y = x` in place.
    pub fn backward_in_place(&self, x: &mut [T]) {
        let c = &self.factor;
        let n = c.rows();
        for i in (0..n).rev() {
            let xi = x[i] / c[(i, i)];
            x[i] = xi;
            let row = c.row(i);
            for l in 0..i {
                x[l] -= row[l] * xi;
            }
        }
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        self.forward_in_place(x);
        self.backward_in_place(x);
    }

    pub fn cast<U: Scalar>(&self) -> Cholesky<U> {
        Cholesky {
            factor: self.factor.cast(),
        }
    }
}

/// Eigen-decomposition `A = V diag(λ) V^T` of a symmetric matrix by cyclic
/// Jacobi rotations. Eigenvalues come back in ascending order, eigenvectors
/// as columns of `V`.
pub fn symmetric_eigen(a: &DenseMatrix<f64>) -> (Vec<f64>, DenseMatrix<f64>) {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut s = a.clone();
    let mut v = DenseMatrix::<f64>::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += s[(i, j)] * s[(i, j)];
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = s[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (s[(q, q)] - s[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                // S <- J^T S J on rows/cols p, q
                for k in 0..n {
                    let skp = s[(k, p)];
                    let skq = s[(k, q)];
                    s[(k, p)] = c * skp - sn * skq;
                    s[(k, q)] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[(p, k)];
                    let sqk = s[(q, k)];
                    s[(p, k)] = c * spk - sn * sqk;
                    s[(q, k)] = sn * spk + c * sqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[(i, i)].total_cmp(&s[(j, j)]));
    let values = order.iter().map(|&i| s[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Generalized symmetric-definite eigenproblem `B q = λ M q`.
///
/// Returns `(Λ, Q)` with `Q^T M Q = I` and `Q^T B Q = diag(Λ)`, eigenvalues
/// ascending. Each eigenvector is signed so that its largest-magnitude
/// component is positive.
pub fn generalized_eigen(
    b: &DenseMatrix<f64>,
    m: &DenseMatrix<f64>,
) -> Result<(Vec<f64>, DenseMatrix<f64>)> {
    let n = b.rows();
    let chol = Cholesky::new(m)?;
    // K = C^{-1} B C^{-T}
    let mut tmp = DenseMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut col: Vec<f64> = (0..n).map(|i| b[(i, j)]).collect();
        chol.forward_in_place(&mut col);
        for i in 0..n {
            tmp[(i, j)] = col[i];
        }
    }
    let mut k = DenseMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut row: Vec<f64> = tmp.row(i).to_vec();
        chol.forward_in_place(&mut row);
        for j in 0..n {
            k[(i, j)] = row[j];
        }
    }
    // symmetrize rounding
    let k = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (k[(i, j)] + k[(j, i)]));
    let (values, w) = symmetric_eigen(&k);

    let mut q = DenseMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut col: Vec<f64> = (0..n).map(|i| w[(i, j)]).collect();
        chol.backward_in_place(&mut col);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            q[(i, j)] = sign * col[i];
        }
    }
    Ok((values, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> DenseMatrix<f64> {
        let a = DenseMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        a.transpose().matmul(&a).add(&DenseMatrix::identity(n))
    }

    #[test]
    fn cholesky_round_trip() {
        let a = spd(6);
        let chol = Cholesky::new(&a).unwrap();
        let x: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let mut y = a.matvec(&x);
        chol.solve_in_place(&mut y);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            Cholesky::new(&a),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = spd(7);
        let (lam, v) = symmetric_eigen(&a);
        let d = v.transpose().matmul(&a).matmul(&v);
        let expect = DenseMatrix::diagonal(&lam);
        assert!(d.sub(&expect).max_abs() < 1e-12 * a.max_abs());
        assert!(lam.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn generalized_with_identity_mass() {
        let b = DenseMatrix::diagonal(&[3.0, 1.0, 2.0]);
        let m = DenseMatrix::<f64>::identity(3);
        let (lam, q) = generalized_eigen(&b, &m).unwrap();
        assert_eq!(lam.len(), 3);
        for (l, e) in lam.iter().zip([1.0, 2.0, 3.0]) {
            assert!((l - e).abs() < 1e-14);
        }
        // permutation with positive signs
        for j in 0..3 {
            let col: Vec<f64> = (0..3).map(|i| q[(i, j)]).collect();
            assert!(col.iter().filter(|v| v.abs() > 0.5).count() == 1);
            assert!(col.iter().all(|&v| v >= -1e-15));
        }
    }

    #[test]
    fn generalized_normalization() {
        let b = spd(5);
        let m = spd(5).add(&DenseMatrix::identity(5).scale(3.0));
        let (lam, q) = generalized_eigen(&b, &m).unwrap();
        let qmq = q.transpose().matmul(&m).matmul(&q);
        let qbq = q.transpose().matmul(&b).matmul(&q);
        assert!(qmq.sub(&DenseMatrix::identity(5)).max_abs() < 1e-12);
        assert!(qbq.sub(&DenseMatrix::diagonal(&lam)).max_abs() < 1e-12 * b.max_abs());
    }
}

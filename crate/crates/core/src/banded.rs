//! Row-contiguous sparse matrices.
//!
//! Every 1D matrix in this crate (mass, stiffness, C0IP bulk, embedding) has
//! nonzeros in one contiguous column run per row, so each row stores the
//! first column and a dense slice of values.

use crate::dense::{Cholesky, DenseMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix<T> {
    rows: usize,
    cols: usize,
    first_col: Vec<usize>,
    row_ptr: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> BandMatrix<T> {
    /// Compresses a dense matrix, trimming exact zeros at both ends of each row.
    pub fn from_dense(a: &DenseMatrix<T>) -> Self {
        let mut first_col = Vec::with_capacity(a.rows());
        let mut row_ptr = vec![0];
        let mut values = Vec::new();
        for i in 0..a.rows() {
            let row = a.row(i);
            let lo = row.iter().position(|v| *v != T::zero());
            match lo {
                Some(lo) => {
                    let hi = row.iter().rposition(|v| *v != T::zero()).unwrap();
                    first_col.push(lo);
                    values.extend_from_slice(&row[lo..=hi]);
                }
                None => first_col.push(0),
            }
            row_ptr.push(values.len());
        }
        Self {
            rows: a.rows(),
            cols: a.cols(),
            first_col,
            row_ptr,
            values,
        }
    }

    /// Builds from per-row `(first_col, values)` runs.
    pub fn from_rows(cols: usize, rows: Vec<(usize, Vec<T>)>) -> Self {
        let mut first_col = Vec::with_capacity(rows.len());
        let mut row_ptr = vec![0];
        let mut values = Vec::new();
        for (c, v) in &rows {
            assert!(c + v.len() <= cols, "row run exceeds column count");
            first_col.push(*c);
            values.extend_from_slice(v);
            row_ptr.push(values.len());
        }
        Self {
            rows: rows.len(),
            cols,
            first_col,
            row_ptr,
            values,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `(first column, values)` of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (usize, &[T]) {
        (
            self.first_col[i],
            &self.values[self.row_ptr[i]..self.row_ptr[i + 1]],
        )
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (c, v) = self.row(i);
        if j >= c && j < c + v.len() {
            v[j - c]
        } else {
            T::zero()
        }
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.rows)
            .filter(|&i| self.row_ptr[i + 1] > self.row_ptr[i])
            .map(|i| {
                let (c, v) = self.row(i);
                let last = c + v.len() - 1;
                i.abs_diff(c).max(i.abs_diff(last))
            })
            .max()
            .unwrap_or(0)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (l, &x) in v.iter().enumerate() {
                d[(i, c + l)] = x;
            }
        }
        d
    }

    /// Principal submatrix on the contiguous index range `start..start+len`.
    pub fn principal_block(&self, start: usize, len: usize) -> DenseMatrix<T> {
        DenseMatrix::from_fn(len, len, |i, j| self.get(start + i, start + j))
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *yi = v.iter().zip(&x[c..c + v.len()]).map(|(&a, &b)| a * b).sum();
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_dense(&self.to_dense().transpose())
    }

    pub fn cast<U: Scalar>(&self) -> BandMatrix<U> {
        BandMatrix {
            rows: self.rows,
            cols: self.cols,
            first_col: self.first_col.clone(),
            row_ptr: self.row_ptr.clone(),
            values: self
                .values
                .iter()
                .map(|&v| U::from_f64(v.to_f64()))
                .collect(),
        }
    }
}

impl BandMatrix<f64> {
    /// Positive-definiteness check by banded Cholesky, `O(n w^2)`.
    ///
    /// Only the lower band is read; the matrix is assumed symmetric.
    pub fn check_positive_definite(&self) -> Result<()> {
        let n = self.rows;
        let w = self.bandwidth();
        if n <= 64 {
            return Cholesky::new(&self.to_dense()).map(|_| ());
        }
        // lower band storage: l[i][w - (i - j)] for j in i-w..=i
        let mut l = vec![0.0f64; n * (w + 1)];
        let at = |i: usize, j: usize| i * (w + 1) + (w + j - i);
        for i in 0..n {
            let j0 = i.saturating_sub(w);
            for j in j0..=i {
                let mut s = self.get(i, j);
                let k0 = j0.max(j.saturating_sub(w));
                for k in k0..j {
                    s -= l[at(i, k)] * l[at(j, k)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite(format!(
                            "banded pivot {i} of {n} is {s:e}"
                        )));
                    }
                    l[at(i, i)] = s.sqrt();
                } else {
                    l[at(i, j)] = s / l[at(j, j)];
                }
            }
        }
        Ok(())
    }
}

//! Small dense linear algebra: a row-major matrix, one-sided Jacobi SVD,
//! numerical rank and null-space extraction.

use serde::Serialize;

use crate::scalar::{tolerance, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix rows");
        Self { rows: rows.len(), cols, data: rows.iter().flatten().copied().collect() }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|r| self.row(r).iter().zip(v).map(|(a, b)| *a * *b).sum()).collect()
    }

    /// Appends `row` at the bottom.
    pub fn stack_row(&self, row: &[S]) -> Self {
        assert_eq!(row.len(), self.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(row);
        Self { rows: self.rows + 1, cols: self.cols, data }
    }

    /// Multiplies column `c` by `scale[c]`.
    pub fn scale_columns(&self, scale: &[S]) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| self.get(r, c) * scale[c])
    }

    pub fn svd(&self) -> Svd<S> {
        jacobi_svd(self)
    }

    pub fn rank(&self) -> usize {
        self.svd().rank(S::lit(tolerance::RANK))
    }
}

/// Singular values with right singular vectors (columns of `v`), unsorted.
#[derive(Clone, Debug)]
pub struct Svd<S> {
    pub singular_values: Vec<S>,
    pub v: Matrix<S>,
}

impl<S: Scalar> Svd<S> {
    pub fn max_singular_value(&self) -> S {
        self.singular_values.iter().copied().fold(S::zero(), S::max)
    }

    /// Number of singular values above `relative * max`.
    pub fn rank(&self, relative: S) -> usize {
        let max = self.max_singular_value();
        if max <= S::zero() {
            return 0;
        }
        self.singular_values.iter().filter(|s| **s > relative * max).count()
    }

    /// Orthonormal basis of the numerical null space.
    pub fn null_space(&self, relative: S) -> Vec<Vec<S>> {
        let max = self.max_singular_value();
        self.singular_values
            .iter()
            .enumerate()
            .filter(|(_, s)| max <= S::zero() || **s <= relative * max)
            .map(|(k, _)| self.v.column(k))
            .collect()
    }
}

fn jacobi_svd<S: Scalar>(a: &Matrix<S>) -> Svd<S> {
    let (m, n) = (a.rows, a.cols);
    // columns of `u` are rotated in place; `v` accumulates the rotations
    let mut u: Vec<Vec<S>> = (0..n).map(|c| a.column(c)).collect();
    let mut v: Vec<Vec<S>> =
        (0..n).map(|c| (0..n).map(|r| if r == c { S::one() } else { S::zero() }).collect()).collect();
    let eps = S::epsilon() * S::lit(4.0);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: S = u[p].iter().map(|x| *x * *x).sum();
                let beta: S = u[q].iter().map(|x| *x * *x).sum();
                let gamma: S = u[p].iter().zip(&u[q]).map(|(x, y)| *x * *y).sum();
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == S::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (S::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (S::one() + zeta * zeta).sqrt());
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (up, uq) = (u[p][i], u[q][i]);
                    u[p][i] = c * up - s * uq;
                    u[q][i] = s * up + c * uq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[p][i], v[q][i]);
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let singular_values = u.iter().map(|col| col.iter().map(|x| *x * *x).sum::<S>().sqrt()).collect();
    let v = Matrix::from_fn(n, n, |r, c| v[c][r]);
    Svd { singular_values, v }
}

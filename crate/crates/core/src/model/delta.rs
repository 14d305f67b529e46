use serde::Serialize;

use super::distribution::JointDistribution;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{tolerance, Scalar};

/// Three-valued sign pattern, stored row-major as `i8` in `{-1, 0, 1}`.
pub type SignMatrix = Vec<Vec<i8>>;

/// `Δ[s_1, s_2] = μ(s_1, s_2) − μ(s_1) μ(s_2)` and its thresholded signs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaMatrix<S> {
    pub values: Matrix<S>,
    pub signs: SignMatrix,
}

impl<S: Scalar> DeltaMatrix<S> {
    /// From a two-way joint table.
    pub fn from_joint(joint: &Matrix<S>) -> Self {
        let rows: Vec<S> = (0..joint.rows()).map(|r| joint.row(r).iter().copied().sum()).collect();
        let cols: Vec<S> = (0..joint.cols()).map(|c| joint.column(c).into_iter().sum()).collect();
        let values = Matrix::from_fn(joint.rows(), joint.cols(), |r, c| joint.get(r, c) - rows[r] * cols[c]);
        let signs = sign_pattern(&values);
        Self { values, signs }
    }
}

pub fn sign_of<S: Scalar>(x: S) -> i8 {
    let tol = S::lit(tolerance::SIGN);
    if x > tol {
        1
    } else if x < -tol {
        -1
    } else {
        0
    }
}

pub fn sign_pattern<S: Scalar>(values: &Matrix<S>) -> SignMatrix {
    (0..values.rows()).map(|r| values.row(r).iter().map(|x| sign_of(*x)).collect()).collect()
}

pub fn delta_matrix<S: Scalar>(mu: &JointDistribution<S>) -> Result<DeltaMatrix<S>> {
    if mu.agent_count() != 2 {
        return Err(Error::Arity { expected: 2, found: mu.agent_count() });
    }
    Ok(DeltaMatrix::from_joint(&mu.pair_joint(0, 1)))
}

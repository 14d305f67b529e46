//! Mixed-radix indexing and tensor powers of probability vectors.

use crate::scalar::Scalar;

/// Row-major mixed-radix index over `dims` (last coordinate fastest).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedRadix {
    dims: Vec<usize>,
}

impl MixedRadix {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims }
    }

    pub fn uniform(base: usize, digits: usize) -> Self {
        Self { dims: vec![base; digits] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of tuples; one for the empty radix.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        digits.iter().zip(&self.dims).fold(0, |acc, (d, n)| {
            debug_assert!(d < n);
            acc * n + d
        })
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.dims.len()];
        for (slot, n) in digits.iter_mut().zip(&self.dims).rev() {
            *slot = index % n;
            index /= n;
        }
        digits
    }

    pub fn decode_into(&self, mut index: usize, digits: &mut [usize]) {
        for (slot, n) in digits.iter_mut().zip(&self.dims).rev() {
            *slot = index % n;
            index /= n;
        }
    }
}

/// The distribution of `k` i.i.d. draws from `u`, indexed by `k`-tuples in
/// lexicographic order. `k = 0` yields `[1]`.
pub fn tensor_power<S: Scalar>(u: &[S], k: usize) -> Vec<S> {
    let mut out = vec![S::one()];
    for _ in 0..k {
        out = out.iter().flat_map(|a| u.iter().map(move |b| *a * *b)).collect();
    }
    out
}

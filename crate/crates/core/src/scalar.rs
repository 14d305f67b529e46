use std::fmt::{Debug, Display};
use std::iter::{Product, Sum};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar used throughout the crate: `f32` or `f64`.
///
/// All tolerances are declared in `f64` and converted with [`Scalar::lit`];
/// [`Scalar::tol`] floors them at a small multiple of machine epsilon so that
/// `f32` instantiations stay meaningful.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Product + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// A tolerance of `x`, floored at 16 ulps of one.
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(16.0))
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Named tolerances shared across modules.
pub mod tolerance {
    /// Total probability mass must be within this of one.
    pub const MASS: f64 = 1e-12;
    /// Report deduplication and marginal bucketing, per coordinate.
    pub const DEDUP: f64 = 1e-9;
    /// Delta-matrix sign threshold.
    pub const SIGN: f64 = 1e-12;
    /// Power-distance ties.
    pub const TIE: f64 = 1e-9;
    /// Strict payoff gap required for certification.
    pub const STRICT_GAP: f64 = 1e-9;
    /// Gains at or above this refute truthfulness.
    pub const REFUTE_GAIN: f64 = -1e-12;
    /// LP margins must exceed this to count as strictly feasible.
    pub const LP_MARGIN: f64 = 1e-6;
    /// Collision test for posterior vectors.
    pub const COLLISION: f64 = 1e-9;
    /// Relative singular-value threshold for numerical rank.
    pub const RANK: f64 = 1e-9;
    /// Points handed to the fitter must lie this close to the simplex.
    pub const SIMPLEX: f64 = 1e-9;
}

pub(crate) fn max_abs_diff<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(x, y)| (*x - *y).abs()).fold(S::zero(), S::max)
}

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

pub(crate) fn l1_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(x, y)| (*x - *y).abs()).sum()
}

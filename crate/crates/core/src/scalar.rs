//! Floating point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Real scalar the estimator is generic over: `f32` or `f64`.
///
/// `FftNum` brings in `num_traits::Signed`, which shares `abs`/`signum` with
/// `Float`; call those as `Float::abs(x)` in generic code.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + FftNum
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Bound on the imaginary part left over by a transform whose exact
    /// result is real, relative to the size of the input.
    const RESIDUE_TOL: f64;

    /// Lossy conversion from a literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const RESIDUE_TOL: f64 = 1e-4;
}

impl Scalar for f64 {
    const RESIDUE_TOL: f64 = 1e-10;
}

/// Pairwise (tree) summation with a fixed split order, so results are
/// reproducible and the rounding error grows like `log n`.
pub fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        let mut acc = T::zero();
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean over a grid of `xs.len()` points with pairwise summation.
pub fn grid_mean<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    pairwise_sum(xs) / T::from_usize(xs.len()).unwrap()
}

pub(crate) fn norm2<T: Scalar>(xs: &[T]) -> T {
    xs.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub(crate) fn norm_inf<T: Scalar>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |m, &x| m.max(Float::abs(x)))
}

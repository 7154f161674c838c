//! Estimation of multidimensional rational spectral densities `(P/Q)^ν` from
//! covariance and ν-cepstral moments, by Newton's method on a regularized
//! convex dual problem over a discrete torus.
//!
//! Everything is generic over the floating-point type through [`Scalar`];
//! the `*64` aliases below fix it to `f64`.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dual;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod moments;
pub mod realization;
pub mod scalar;
pub mod solver;

pub use dual::{DualPoint, DualProblem};
pub use error::{Error, Result};
pub use grid::{Grid, GridField, GridSpec, IndexSet, SymTrigPoly};
pub use moments::MomentData;
pub use realization::ArmaModel;
pub use scalar::Scalar;
pub use solver::{SolveOptions, SolveReport};

pub type Grid64 = Grid<f64>;
pub type GridField64 = GridField<f64>;
pub type SymTrigPoly64 = SymTrigPoly<f64>;
pub type MomentData64 = MomentData<f64>;
pub type DualPoint64 = DualPoint<f64>;
pub type ArmaModel64 = ArmaModel<f64>;
pub type SolveOptions64 = SolveOptions<f64>;

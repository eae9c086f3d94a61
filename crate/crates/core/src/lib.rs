//! Exact sparse linear regression with optimality certificates.
//!
//! Solves the cardinality-penalized least-squares problem
//!
//! ```text
//! min ½‖y − Xβ‖² + λ₀‖β‖₀ + λ₂‖β‖²   subject to ‖β‖∞ ≤ M
//! ```
//!
//! to certified global optimality by branch and bound. Node relaxations are
//! coordinate-separable convex programs solved by a consensus ADMM whose dual
//! values are valid lower bounds at every iterate, so subproblems can be
//! stopped early without losing the certificate. Open nodes are solved in
//! batches of K to amortize the shared linear algebra, upper bounds come from
//! a projected-gradient solve on rounded supports, and the root is warm
//! started by a forward/backward matching-pursuit heuristic.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` aliases at the crate root cover the common case.

pub mod admm;
pub mod bnb;
pub mod data;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod precompute;
pub mod problem;
pub mod pursuit;
pub mod upper_bound;

pub use error::{Error, Result};

use num_traits::FromPrimitive;

/// Floating-point scalar the solvers are generic over.
///
/// Implemented for `f32` and `f64`.
pub trait Scalar: ndarray::NdFloat + FromPrimitive + std::iter::Sum<Self> {}

impl<T> Scalar for T where T: ndarray::NdFloat + FromPrimitive + std::iter::Sum<T> {}

/// Converts an `f64` constant into the working scalar type.
///
/// Panics if the value is not representable, which cannot happen for the
/// finite tolerances and literals used in this crate.
#[inline]
pub fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("constant not representable in scalar type")
}

/// Double-precision problem instance.
pub type ProblemF64 = problem::ProblemData<f64>;

/// Double-precision solver options.
pub type SolveOptionsF64 = bnb::SolveOptions<f64>;

/// Double-precision solve report.
pub type SolveReportF64 = bnb::SolveReport<f64>;

/// Double-precision feasible solution.
pub type FeasibleSolutionF64 = upper_bound::FeasibleSolution<f64>;

/// Double-precision synthetic instance.
pub type InstanceF64 = data::Instance<f64>;

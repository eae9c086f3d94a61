//! Tree-wide cached linear algebra for the relaxation ADMM.
//!
//! The consensus update solves `(XᵀX + ρI)·b = c + ρβ − v` with the same
//! matrix at every node and every iteration, so its inverse `D` is built once
//! per solve. For p > n the inverse is assembled through the identity
//! `D = I/ρ − Xᵀ(XXᵀ + ρI)⁻¹X/ρ²`, which only ever factors an n×n matrix;
//! the small Gram inverse is kept so the hot loop can apply `D` without
//! touching the p×p product at all.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::problem::ProblemData;
use crate::{cast, Scalar};

/// Factors cached once per branch-and-bound tree.
#[derive(Clone, Debug)]
pub struct Precomputed<T> {
    /// `(XᵀX + ρI)⁻¹`, symmetric positive definite, p×p.
    pub d: Array2<T>,
    /// `Xᵀy`.
    pub c: Array1<T>,
    /// ADMM penalty the factors were built at.
    pub rho: T,
    /// `‖X_j‖²` per column.
    pub col_sq_norms: Array1<T>,
    /// Present when p > n: apply `D` through the n×n Gram inverse instead of
    /// the explicit p×p matrix (fewer flops, cache resident).
    pub woodbury: Option<Woodbury<T>>,
}

/// Small-side factors for the p > n regime.
#[derive(Clone, Debug)]
pub struct Woodbury<T> {
    /// `(XXᵀ + ρI)⁻¹`, n×n.
    pub g_inv: Array2<T>,
    /// Contiguous copy of `Xᵀ` (p×n) so the back-projection streams rows.
    pub xt: Array2<T>,
}

/// Builds the per-tree factors at penalty `rho > 0`.
pub fn build_precomputed<T: Scalar>(prob: &ProblemData<T>, rho: T) -> Result<Precomputed<T>> {
    if !(rho > T::zero()) || !rho.is_finite() {
        return Err(Error::InvalidSpec("rho must be positive and finite".into()));
    }
    let n = prob.n();
    let p = prob.p();
    let x = prob.x();
    let c = x.t().dot(prob.y());
    let half = cast::<T>(0.5);
    let (d, woodbury) = if n >= p {
        let mut a = x.t().dot(x);
        for i in 0..p {
            a[(i, i)] = a[(i, i)] + rho;
        }
        (crate::linalg::spd_inverse(&a)?, None)
    } else {
        let xt = x.t().to_owned();
        let mut g = x.dot(&xt);
        for i in 0..n {
            g[(i, i)] = g[(i, i)] + rho;
        }
        let g_inv = crate::linalg::spd_inverse(&g)?;
        let h = g_inv.dot(x);
        let mut d = xt.dot(&h);
        // (X'X + rho I)^-1 = I/rho - X'(XX' + rho I)^-1 X / rho, since the
        // inner inverse already absorbs one factor of rho.
        let inv_rho = T::one() / rho;
        d.mapv_inplace(|v| -v * inv_rho);
        for i in 0..p {
            d[(i, i)] = d[(i, i)] + inv_rho;
        }
        (d, Some(Woodbury { g_inv, xt }))
    };
    let d = (&d + &d.t()) * half;
    Ok(Precomputed { d, c, rho, col_sq_norms: prob.col_sq_norms().clone(), woodbury })
}

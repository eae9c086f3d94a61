//! Dense symmetric positive definite factorization helpers.
//!
//! The systems this crate factors are small (the ridge normal equations on a
//! restricted support, or the n×n / p×p Gram matrix regularized by ρI), so a
//! plain Cholesky is plenty and avoids a LAPACK link dependency.

use ndarray::{s, Array1, Array2};

use crate::error::{Error, Result};
use crate::Scalar;

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = a`.
///
/// Errors with [`Error::NumericalFailure`] if a pivot is not strictly
/// positive, i.e. the matrix is not numerically positive definite.
pub fn cholesky<T: Scalar>(a: &Array2<T>) -> Result<Array2<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!("cholesky of {}x{} matrix", n, a.ncols())));
    }
    let mut l = Array2::<T>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let dot = {
                let (ri, rj) = (l.row(i), l.row(j));
                ri.slice(s![..j]).dot(&rj.slice(s![..j]))
            };
            let v = a[(i, j)] - dot;
            if i == j {
                if !(v > T::zero()) {
                    return Err(Error::NumericalFailure(format!(
                        "non-positive pivot {v:?} at row {i} in Cholesky"
                    )));
                }
                l[(i, i)] = v.sqrt();
            } else {
                l[(i, j)] = v / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solves `L·Lᵀ·x = b` given the Cholesky factor.
pub fn cholesky_solve<T: Scalar>(l: &Array2<T>, b: &Array1<T>) -> Array1<T> {
    let n = l.nrows();
    debug_assert_eq!(b.len(), n);
    let mut x = b.clone();
    for i in 0..n {
        let dot = l.row(i).slice(s![..i]).dot(&x.slice(s![..i]));
        x[i] = (x[i] - dot) / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut v = x[i];
        for k in i + 1..n {
            v = v - l[(k, i)] * x[k];
        }
        x[i] = v / l[(i, i)];
    }
    x
}

/// Explicit inverse of a symmetric positive definite matrix, symmetrized.
pub fn spd_inverse<T: Scalar>(a: &Array2<T>) -> Result<Array2<T>> {
    let n = a.nrows();
    let l = cholesky(a)?;
    let mut inv = Array2::<T>::zeros((n, n));
    let mut e = Array1::<T>::zeros(n);
    for j in 0..n {
        e[j] = T::one();
        let col = cholesky_solve(&l, &e);
        inv.column_mut(j).assign(&col);
        e[j] = T::zero();
    }
    // Clean up rounding asymmetry from the column-by-column solves.
    let half = crate::cast::<T>(0.5);
    let sym = (&inv + &inv.t()) * half;
    Ok(sym)
}

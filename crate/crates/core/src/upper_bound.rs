//! Feasible solutions on a fixed support: box-constrained ridge by
//! accelerated projected gradient.
//!
//! Every node's relaxation suggests a support (round the recovered
//! indicators); restricting the problem to that support leaves a smooth
//! box-constrained ridge whose minimizer — or any feasible iterate of it —
//! gives a valid incumbent for the exact problem. Iterations work on
//! support-sized vectors against the relevant columns of X, so the cost per
//! sweep is O(n·|S|) regardless of p.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};
use num_traits::Float;
use rayon::prelude::*;

use crate::problem::{Fixations, ProblemData};
use crate::{cast, Scalar};

/// Stopping controls for the projected-gradient solve.
#[derive(Clone, Debug)]
pub struct FpgOptions<T> {
    /// Stop when the objective decrease or the step infinity-norm drops below this.
    pub tol: T,
    /// Hard cap on accelerated sweeps.
    pub max_iters: usize,
    /// Cap on stepsize halvings within one sweep.
    pub max_backtracks: usize,
}

impl<T: Scalar> Default for FpgOptions<T> {
    fn default() -> Self {
        Self { tol: cast(1e-8), max_iters: 5_000, max_backtracks: 50 }
    }
}

/// A feasible point of the exact problem with its support and true objective.
#[derive(Clone, Debug)]
pub struct FeasibleSolution<T> {
    /// Full-length coefficients, zero off `support`, inside the box.
    pub beta: Array1<T>,
    /// Sorted candidate support (coefficients on it may still be zero).
    pub support: Vec<usize>,
    /// `½‖y − Xβ‖² + λ₀·|support| + λ₂‖β‖²`, recomputed exactly.
    pub objective: T,
}

impl<T: Scalar> FeasibleSolution<T> {
    /// Evaluate the exact objective of `beta` charged for `support`.
    ///
    /// `beta` must be zero off `support` and inside the box; the objective is
    /// recomputed from scratch so the stored value never inherits drift from
    /// an iterative solve.
    pub fn from_parts(beta: Array1<T>, support: Vec<usize>, prob: &ProblemData<T>) -> Self {
        debug_assert!(support.windows(2).all(|w| w[0] < w[1]));
        let r = prob.residual(&beta.view());
        let half = cast::<T>(0.5);
        let quad = half * r.iter().map(|&v| v * v).sum::<T>();
        let ridge = prob.lambda2() * beta.iter().map(|&v| v * v).sum::<T>();
        let count = cast::<T>(support.len() as f64);
        let objective = quad + prob.lambda0() * count + ridge;
        Self { beta, support, objective }
    }
}

/// K supports queued for feasible solves, coefficients stacked row-wise.
#[derive(Clone, Debug)]
pub struct SupportBatch<T> {
    /// K×p coefficients; entries off each row's support stay exactly zero.
    pub bmat: Array2<T>,
    /// K×p support membership.
    pub mask: Array2<bool>,
    /// Initial stepsize per row: `1/(max_{j∈S}‖X_j‖²·|S| + 2λ₂)`.
    pub alpha: Array1<T>,
    /// Rows still awaiting a solve.
    pub active: Vec<bool>,
    supports: Vec<Vec<usize>>,
}

impl<T: Scalar> SupportBatch<T> {
    /// Zero-initialized rows for the given supports.
    pub fn from_supports(supports: Vec<Vec<usize>>, prob: &ProblemData<T>) -> Self {
        let k = supports.len();
        let p = prob.p();
        let mut mask = Array2::from_elem((k, p), false);
        let mut alpha = Array1::zeros(k);
        for (row, support) in supports.iter().enumerate() {
            debug_assert!(support.windows(2).all(|w| w[0] < w[1]));
            for &j in support {
                mask[(row, j)] = true;
            }
            alpha[row] = initial_stepsize(support, prob);
        }
        Self {
            bmat: Array2::zeros((k, p)),
            mask,
            alpha,
            active: vec![true; k],
            supports,
        }
    }

    /// Seed every row from one full-length candidate (typically the
    /// incumbent): overlapping coordinates are copied, the rest stay zero.
    /// The solver clamps seeds into the box before iterating.
    pub fn warm_rows_from(&mut self, beta: &ArrayView1<T>) {
        for (row, support) in self.supports.iter().enumerate() {
            for &j in support {
                self.bmat[(row, j)] = beta[j];
            }
        }
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    /// Support of row `k`.
    pub fn support(&self, k: usize) -> &[usize] {
        &self.supports[k]
    }
}

/// Candidate support from a relaxation: nonzero-fixed coordinates always,
/// plus any free coordinate whose indicator rounded up (ties at 0.5 go in).
pub fn round_support<T: Scalar>(z_hat: &ArrayView1<T>, fix: &Fixations) -> Vec<usize> {
    let half = cast::<T>(0.5);
    let mut support = Vec::new();
    for i in 0..z_hat.len() {
        if fix.is_one(i) || (!fix.is_zero(i) && z_hat[i] >= half) {
            support.push(i);
        }
    }
    support
}

/// Masked ridge gradient for all rows at once:
/// row k is `Xᵀ(X·βₖ − y) + 2λ₂βₖ` with off-mask entries exactly zero.
pub fn restricted_gradient<T: Scalar>(
    bmat: &ArrayView2<T>,
    mask: &ArrayView2<bool>,
    prob: &ProblemData<T>,
) -> Array2<T> {
    let xt = prob.x().t();
    let mut fitted = bmat.dot(&xt);
    fitted -= prob.y();
    let mut grad = fitted.dot(prob.x());
    let two_l2 = cast::<T>(2.0) * prob.lambda2();
    Zip::from(&mut grad).and(bmat).and(mask).for_each(|g, &b, &on| {
        *g = if on { *g + two_l2 * b } else { T::zero() };
    });
    grad
}

/// `1/(max_{j∈S}‖X_j‖²·|S| + 2λ₂)`: inverse of a cheap curvature bound for
/// the support-restricted ridge (diagonal-dominance bound on X_SᵀX_S).
fn initial_stepsize<T: Scalar>(support: &[usize], prob: &ProblemData<T>) -> T {
    if support.is_empty() {
        return T::one();
    }
    let mut max_col = T::zero();
    for &j in support {
        max_col = Float::max(max_col, prob.col_sq_norms()[j]);
    }
    let count = cast::<T>(support.len() as f64);
    T::one() / (max_col * count + cast::<T>(2.0) * prob.lambda2())
}

/// Accelerated projected-gradient descent on one support.
///
/// The extrapolated point gets weight `t/(t+3)`; each sweep restarts from the
/// row's initial stepsize and halves it until the quadratic upper-bound test
/// (sufficient-decrease against the extrapolated point) holds. When `trace`
/// is given, the full-length iterate after every accepted step is recorded.
fn fpg_core<T: Scalar>(
    support: &[usize],
    init: Option<&ArrayView1<T>>,
    prob: &ProblemData<T>,
    opts: &FpgOptions<T>,
    mut trace: Option<&mut Vec<Array1<T>>>,
) -> FeasibleSolution<T> {
    let p = prob.p();
    let s = support.len();
    if s == 0 {
        return FeasibleSolution::from_parts(Array1::zeros(p), Vec::new(), prob);
    }
    let m = prob.big_m();
    let lambda2 = prob.lambda2();
    let two_l2 = cast::<T>(2.0) * lambda2;
    let half = cast::<T>(0.5);
    let cols: Vec<ArrayView1<T>> = support.iter().map(|&j| prob.x().column(j)).collect();

    let mut beta: Array1<T> = match init {
        Some(full) => {
            Array1::from_iter(support.iter().map(|&j| Float::min(Float::max(full[j], -m), m)))
        }
        None => Array1::zeros(s),
    };
    let mut beta_prev = beta.clone();
    let alpha0 = initial_stepsize(support, prob);

    let smooth = |beta_s: &Array1<T>| -> (Array1<T>, T) {
        let mut r = prob.y().clone();
        for (col, &b) in cols.iter().zip(beta_s.iter()) {
            r.scaled_add(-b, col);
        }
        let quad = half * r.iter().map(|&v| v * v).sum::<T>();
        let ridge = lambda2 * beta_s.iter().map(|&v| v * v).sum::<T>();
        (r, quad + ridge)
    };

    let mut u_prev = smooth(&beta).1;
    for t in 0..opts.max_iters {
        let weight = cast::<T>(t as f64) / cast::<T>((t + 3) as f64);
        let mut tilde = Array1::zeros(s);
        for i in 0..s {
            // The extrapolation is clamped into the box: from a feasible
            // anchor the projected step is guaranteed not to increase the
            // objective, which is exactly the per-step invariant asserted
            // below (and it is a no-op while iterates are interior).
            let shot = beta[i] + weight * (beta[i] - beta_prev[i]);
            tilde[i] = Float::min(Float::max(shot, -m), m);
        }
        let (r_tilde, g_tilde) = smooth(&tilde);
        let mut grad = Array1::zeros(s);
        for i in 0..s {
            grad[i] = -cols[i].dot(&r_tilde) + two_l2 * tilde[i];
        }

        let mut alpha = alpha0;
        let mut cand = Array1::zeros(s);
        let mut g_cand = T::zero();
        for _ in 0..=opts.max_backtracks {
            for i in 0..s {
                let stepped = tilde[i] - alpha * grad[i];
                cand[i] = Float::min(Float::max(stepped, -m), m);
            }
            g_cand = smooth(&cand).1;
            let mut linear = T::zero();
            let mut sq = T::zero();
            for i in 0..s {
                let d = cand[i] - tilde[i];
                linear = linear + grad[i] * d;
                sq = sq + d * d;
            }
            if g_cand <= g_tilde + linear + sq / (cast::<T>(2.0) * alpha) {
                break;
            }
            alpha = alpha * half;
        }
        // A projected step that passed the sufficient-decrease test cannot
        // sit above the extrapolated point's value.
        debug_assert!(
            g_cand <= g_tilde + cast::<T>(1e-9) * Float::max(T::one(), g_tilde.abs()),
            "accepted step increased the restricted objective"
        );

        let mut delta_inf = T::zero();
        for i in 0..s {
            delta_inf = Float::max(delta_inf, (cand[i] - beta[i]).abs());
        }
        std::mem::swap(&mut beta_prev, &mut beta);
        beta = cand;
        if let Some(tr) = trace.as_deref_mut() {
            let mut full = Array1::zeros(p);
            for (i, &j) in support.iter().enumerate() {
                full[j] = beta[i];
            }
            tr.push(full);
        }
        let u = g_cand;
        if (u_prev - u).abs() <= opts.tol || delta_inf <= opts.tol {
            break;
        }
        u_prev = u;
    }

    let mut full = Array1::zeros(p);
    for (i, &j) in support.iter().enumerate() {
        full[j] = beta[i];
    }
    FeasibleSolution::from_parts(full, support.to_vec(), prob)
}

/// Solve one support; `init` (full-length) seeds overlapping coordinates.
pub fn fpg_solve<T: Scalar>(
    support: &[usize],
    init: Option<&ArrayView1<T>>,
    prob: &ProblemData<T>,
    opts: &FpgOptions<T>,
) -> FeasibleSolution<T> {
    fpg_core(support, init, prob, opts, None)
}

/// [`fpg_solve`] plus the full-length iterate after every accepted step.
pub fn fpg_solve_traced<T: Scalar>(
    support: &[usize],
    init: Option<&ArrayView1<T>>,
    prob: &ProblemData<T>,
    opts: &FpgOptions<T>,
) -> (FeasibleSolution<T>, Vec<Array1<T>>) {
    let mut trace = Vec::new();
    let sol = fpg_core(support, init, prob, opts, Some(&mut trace));
    (sol, trace)
}

/// Solve every active row of the batch; results come back in row order.
///
/// Rows are independent, so they may run on any number of workers without
/// changing a single bit of the output; already-inactive rows just get their
/// current coefficients repackaged (still feasible, still a valid bound).
pub fn fpg_solve_batch<T: Scalar>(
    batch: &mut SupportBatch<T>,
    prob: &ProblemData<T>,
    opts: &FpgOptions<T>,
) -> Vec<FeasibleSolution<T>> {
    let solutions: Vec<FeasibleSolution<T>> = (0..batch.len())
        .into_par_iter()
        .map(|k| {
            let row = batch.bmat.row(k);
            if batch.active[k] {
                fpg_core(&batch.supports[k], Some(&row), prob, opts, None)
            } else {
                FeasibleSolution::from_parts(row.to_owned(), batch.supports[k].clone(), prob)
            }
        })
        .collect();
    for (k, sol) in solutions.iter().enumerate() {
        batch.bmat.row_mut(k).assign(&sol.beta);
        batch.active[k] = false;
    }
    solutions
}

/// [`fpg_solve_batch`] with per-row iterate traces (row order preserved).
pub fn fpg_solve_batch_traced<T: Scalar>(
    batch: &mut SupportBatch<T>,
    prob: &ProblemData<T>,
    opts: &FpgOptions<T>,
) -> (Vec<FeasibleSolution<T>>, Vec<Vec<Array1<T>>>) {
    let pairs: Vec<(FeasibleSolution<T>, Vec<Array1<T>>)> = (0..batch.len())
        .into_par_iter()
        .map(|k| {
            let row = batch.bmat.row(k);
            let mut trace = Vec::new();
            let sol = if batch.active[k] {
                fpg_core(&batch.supports[k], Some(&row), prob, opts, Some(&mut trace))
            } else {
                FeasibleSolution::from_parts(row.to_owned(), batch.supports[k].clone(), prob)
            };
            (sol, trace)
        })
        .collect();
    let mut solutions = Vec::with_capacity(pairs.len());
    let mut traces = Vec::with_capacity(pairs.len());
    for (k, (sol, trace)) in pairs.into_iter().enumerate() {
        batch.bmat.row_mut(k).assign(&sol.beta);
        batch.active[k] = false;
        solutions.push(sol);
        traces.push(trace);
    }
    (solutions, traces)
}

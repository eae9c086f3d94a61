//! Forward–backward greedy pursuit for the root incumbent.
//!
//! Starting from the empty support, each outer round tries one insertion
//! (the candidate whose optimal single-coordinate move decreases the exact
//! objective the most) and one deletion (the support member whose removal
//! decreases it the most), both scored against the current residual. The
//! score formulas are exact objective differences for a single-coordinate
//! change, so every accepted step strictly decreases the objective and the
//! loop terminates. A projected-gradient polish on the final support turns
//! the greedy coefficients into the restricted optimum.

use ndarray::Array1;
use num_traits::Float;
use rayon::prelude::*;

use crate::problem::ProblemData;
use crate::upper_bound::{fpg_solve, FeasibleSolution, FpgOptions};
use crate::{cast, Scalar};

/// Controls for the greedy loop.
#[derive(Clone, Debug)]
pub struct MpOptions<T> {
    /// Cap on outer rounds; `None` means 4·p.
    pub max_outer: Option<usize>,
    /// Recompute the residual from scratch after this many accepted steps.
    pub refresh_every: usize,
    /// Options for the final coefficient polish.
    pub fpg: FpgOptions<T>,
}

impl<T: Scalar> Default for MpOptions<T> {
    fn default() -> Self {
        Self { max_outer: None, refresh_every: 50, fpg: FpgOptions::default() }
    }
}

/// Greedy iterate: support, coefficients, and the maintained residual.
#[derive(Clone, Debug)]
pub struct MpState<T> {
    /// Sorted support.
    pub support: Vec<usize>,
    /// Full-length coefficients, zero off the support.
    pub beta: Array1<T>,
    /// `y − Xβ`, updated incrementally and refreshed periodically.
    pub residual: Array1<T>,
    accepted: usize,
}

impl<T: Scalar> MpState<T> {
    /// Empty-support start: β = 0, r = y.
    pub fn new(prob: &ProblemData<T>) -> Self {
        Self {
            support: Vec::new(),
            beta: Array1::zeros(prob.p()),
            residual: prob.y().clone(),
            accepted: 0,
        }
    }

    /// Steps accepted so far (insertions plus deletions).
    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    fn objective(&self, prob: &ProblemData<T>) -> T {
        let half = cast::<T>(0.5);
        let quad = half * self.residual.iter().map(|&v| v * v).sum::<T>();
        let count = cast::<T>(self.support.len() as f64);
        let ridge = prob.lambda2() * self.beta.iter().map(|&v| v * v).sum::<T>();
        quad + prob.lambda0() * count + ridge
    }

    fn after_accept(&mut self, prob: &ProblemData<T>, refresh_every: usize) {
        self.accepted += 1;
        if refresh_every > 0 && self.accepted % refresh_every == 0 {
            self.refresh_residual(prob);
        }
    }

    /// Rebuild `residual = y − Xβ` from scratch, clearing accumulated drift.
    pub fn refresh_residual(&mut self, prob: &ProblemData<T>) {
        let mut r = prob.y().clone();
        for &j in &self.support {
            r.scaled_add(-self.beta[j], &prob.x().column(j));
        }
        self.residual = r;
    }
}

/// Smallest (score, index) with ties to the lower index; `None` if empty.
fn argmin_score<T: Scalar>(
    scores: impl IntoParallelIterator<Item = (T, usize)>,
) -> Option<(T, usize)> {
    scores
        .into_par_iter()
        .min_by(|a, b| a.partial_cmp(b).expect("scores are finite"))
}

/// Try the best single insertion. Returns whether the support changed.
///
/// For each candidate j outside the support: `c_j = X_jᵀr`,
/// `D_j = ‖X_j‖² + 2λ₂`, the optimal coefficient is `clamp(c_j/D_j, ±M)`,
/// and the exact objective change of inserting it is
/// `Δ_j = −β_j c_j + ½D_j β_j² + λ₀`. The best strictly negative Δ wins.
pub fn forward_step<T: Scalar>(state: &mut MpState<T>, prob: &ProblemData<T>) -> bool {
    forward_step_opts(state, prob, 50)
}

fn forward_step_opts<T: Scalar>(
    state: &mut MpState<T>,
    prob: &ProblemData<T>,
    refresh_every: usize,
) -> bool {
    let half = cast::<T>(0.5);
    let two = cast::<T>(2.0);
    let m = prob.big_m();
    let support = &state.support;
    let residual = &state.residual;
    let best = argmin_score((0..prob.p()).into_par_iter().filter_map(|j| {
        if support.binary_search(&j).is_ok() {
            return None;
        }
        let c = prob.x().column(j).dot(residual);
        let d = prob.col_sq_norms()[j] + two * prob.lambda2();
        let beta = Float::min(Float::max(c / d, -m), m);
        let delta = -beta * c + half * d * beta * beta + prob.lambda0();
        Some((delta, j))
    }));
    let Some((delta, j)) = best else { return false };
    if delta >= T::zero() {
        return false;
    }
    let before = state.objective(prob);
    let c = prob.x().column(j).dot(&state.residual);
    let d = prob.col_sq_norms()[j] + two * prob.lambda2();
    let beta = Float::min(Float::max(c / d, -m), m);
    let pos = state.support.binary_search(&j).unwrap_err();
    state.support.insert(pos, j);
    state.beta[j] = beta;
    state.residual.scaled_add(-beta, &prob.x().column(j));
    debug_assert!(
        ((state.objective(prob) - before) - delta).abs()
            <= cast::<T>(1e-8) * Float::max(T::one(), before.abs()),
        "insertion score must equal the realized objective change"
    );
    state.after_accept(prob, refresh_every);
    true
}

/// Try the best single deletion. Returns whether the support changed.
///
/// For each support member j: with `c_j = X_jᵀr`, zeroing β_j changes the
/// objective by exactly `Δ_j = β_j c_j + (½‖X_j‖² − λ₂)β_j² − λ₀`.
pub fn backward_step<T: Scalar>(state: &mut MpState<T>, prob: &ProblemData<T>) -> bool {
    backward_step_opts(state, prob, 50)
}

fn backward_step_opts<T: Scalar>(
    state: &mut MpState<T>,
    prob: &ProblemData<T>,
    refresh_every: usize,
) -> bool {
    if state.support.is_empty() {
        return false;
    }
    let half = cast::<T>(0.5);
    let residual = &state.residual;
    let beta = &state.beta;
    let best = argmin_score(state.support.par_iter().map(|&j| {
        let c = prob.x().column(j).dot(residual);
        let b = beta[j];
        let delta =
            b * c + (half * prob.col_sq_norms()[j] - prob.lambda2()) * b * b - prob.lambda0();
        (delta, j)
    }));
    let Some((delta, j)) = best else { return false };
    if delta >= T::zero() {
        return false;
    }
    let before = state.objective(prob);
    let b = state.beta[j];
    state.residual.scaled_add(b, &prob.x().column(j));
    state.beta[j] = T::zero();
    let pos = state.support.binary_search(&j).unwrap();
    state.support.remove(pos);
    debug_assert!(
        ((state.objective(prob) - before) - delta).abs()
            <= cast::<T>(1e-8) * Float::max(T::one(), before.abs()),
        "deletion score must equal the realized objective change"
    );
    state.after_accept(prob, refresh_every);
    true
}

/// Greedy incumbent for the root: alternate insertion and deletion rounds
/// until neither fires (or the round cap), then polish the coefficients on
/// the final support.
pub fn run_matching_pursuit<T: Scalar>(
    prob: &ProblemData<T>,
    opts: &MpOptions<T>,
) -> FeasibleSolution<T> {
    let mut state = MpState::new(prob);
    let max_outer = opts.max_outer.unwrap_or(4 * prob.p());
    for _ in 0..max_outer {
        let grew = forward_step_opts(&mut state, prob, opts.refresh_every);
        let shrank = backward_step_opts(&mut state, prob, opts.refresh_every);
        if !grew && !shrank {
            break;
        }
    }
    fpg_solve(&state.support, Some(&state.beta.view()), prob, &opts.fpg)
}

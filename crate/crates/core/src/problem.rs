//! Problem data and the coordinate-separable penalty mathematics.
//!
//! After eliminating the binary indicators and the perspective variables
//! analytically, each node relaxation is
//!
//! ```text
//! min ½‖y − Xβ‖² + Σᵢ ψᵢ(βᵢ)   subject to ‖β‖∞ ≤ M
//! ```
//!
//! where ψᵢ depends on whether coordinate i is fixed to zero, fixed to
//! nonzero, or free. Everything in this module is a pure formula: the ADMM
//! relaxation solver, the feasible-solution solver, and the test oracles all
//! build on these and nothing else shared.

use ndarray::{Array1, Array2, ArrayView1};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::{cast, Scalar};

/// A problem instance: design matrix, response, and the three penalty knobs.
///
/// `lambda0` prices each nonzero coordinate, `lambda2` is the ridge weight,
/// and `big_m` bounds every coefficient magnitude. Column squared norms are
/// cached at construction.
#[derive(Clone, Debug)]
pub struct ProblemData<T> {
    x: Array2<T>,
    y: Array1<T>,
    lambda0: T,
    lambda2: T,
    big_m: T,
    col_sq_norms: Array1<T>,
    sqrt_ratio: T,
}

impl<T: Scalar> ProblemData<T> {
    /// Validates shapes and penalty domains and caches column norms.
    ///
    /// Requires `lambda0 >= 0`, `lambda2 > 0` (the coordinate regimes are
    /// ill-defined at zero ridge), `big_m > 0`, and `x.nrows() == y.len()`.
    pub fn new(x: Array2<T>, y: Array1<T>, lambda0: T, lambda2: T, big_m: T) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "x has {} rows but y has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidSpec("x must have at least one column".into()));
        }
        if !(lambda0 >= T::zero()) {
            return Err(Error::InvalidSpec("lambda0 must be nonnegative".into()));
        }
        if !(lambda2 > T::zero()) {
            return Err(Error::InvalidSpec("lambda2 must be positive".into()));
        }
        if !(big_m > T::zero()) || !big_m.is_finite() {
            return Err(Error::InvalidSpec("big_m must be positive and finite".into()));
        }
        let col_sq_norms = x.map_axis(ndarray::Axis(0), |col| col.dot(&col));
        let sqrt_ratio = (lambda0 / lambda2).sqrt();
        Ok(Self { x, y, lambda0, lambda2, big_m, col_sq_norms, sqrt_ratio })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<T> {
        &self.x
    }

    pub fn y(&self) -> &Array1<T> {
        &self.y
    }

    pub fn lambda0(&self) -> T {
        self.lambda0
    }

    pub fn lambda2(&self) -> T {
        self.lambda2
    }

    pub fn big_m(&self) -> T {
        self.big_m
    }

    /// Cached `‖X_j‖²` for every column.
    pub fn col_sq_norms(&self) -> &Array1<T> {
        &self.col_sq_norms
    }

    /// `sqrt(lambda0 / lambda2)`: half-width of the linear segment of the
    /// free-coordinate penalty.
    pub fn sqrt_ratio(&self) -> T {
        self.sqrt_ratio
    }

    /// `y − Xβ`.
    pub fn residual(&self, beta: &ArrayView1<T>) -> Array1<T> {
        let mut r = self.y.clone();
        let fitted = self.x.dot(beta);
        r -= &fitted;
        r
    }

    /// Cardinality-penalized objective `½‖y − Xβ‖² + λ₀|S| + λ₂‖β‖²` for a
    /// solution supported on a set of size `support_size`.
    pub fn mip_objective(&self, beta: &ArrayView1<T>, support_size: usize) -> T {
        let r = self.residual(beta);
        let half = cast::<T>(0.5);
        half * r.dot(&r) + self.lambda0 * cast::<T>(support_size as f64) + self.lambda2 * beta.dot(beta)
    }

    /// Node-relaxation objective `½‖y − Xβ‖² + Σᵢ ψᵢ(βᵢ)`.
    pub fn relaxation_objective(&self, beta: &ArrayView1<T>, fix: &Fixations) -> T {
        let r = self.residual(beta);
        let half = cast::<T>(0.5);
        let mut obj = half * r.dot(&r);
        for (i, &b) in beta.iter().enumerate() {
            obj = obj + psi(b, i, fix, self);
        }
        obj
    }
}

/// Membership of a coordinate in a node's fixation sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    /// Fixed to zero (indicator forced off).
    Zero,
    /// Fixed to nonzero (indicator forced on; the coefficient may still be 0).
    One,
    /// Undecided.
    Free,
}

/// Disjoint sorted index sets recording branching decisions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fixations {
    zero: Vec<usize>,
    one: Vec<usize>,
}

impl Fixations {
    /// The root node: nothing fixed.
    pub fn root() -> Self {
        Self::default()
    }

    /// Builds fixation sets, sorting and checking disjointness and range.
    pub fn new(zero: Vec<usize>, one: Vec<usize>, p: usize) -> Result<Self> {
        let mut zero = zero;
        let mut one = one;
        zero.sort_unstable();
        zero.dedup();
        one.sort_unstable();
        one.dedup();
        for &i in zero.iter().chain(one.iter()) {
            if i >= p {
                return Err(Error::InvalidSpec(format!("fixed index {i} out of range for p = {p}")));
            }
        }
        for &i in &zero {
            if one.binary_search(&i).is_ok() {
                return Err(Error::InvalidSpec(format!("index {i} fixed to both zero and one")));
            }
        }
        Ok(Self { zero, one })
    }

    pub fn zero(&self) -> &[usize] {
        &self.zero
    }

    pub fn one(&self) -> &[usize] {
        &self.one
    }

    pub fn is_zero(&self, i: usize) -> bool {
        self.zero.binary_search(&i).is_ok()
    }

    pub fn is_one(&self, i: usize) -> bool {
        self.one.binary_search(&i).is_ok()
    }

    pub fn membership(&self, i: usize) -> Membership {
        if self.is_zero(i) {
            Membership::Zero
        } else if self.is_one(i) {
            Membership::One
        } else {
            Membership::Free
        }
    }

    /// Number of fixed coordinates.
    pub fn fixed_count(&self) -> usize {
        self.zero.len() + self.one.len()
    }

    /// Child with coordinate `j` additionally fixed to zero.
    pub fn with_zero(&self, j: usize) -> Self {
        debug_assert!(!self.is_one(j));
        let mut zero = self.zero.clone();
        if let Err(pos) = zero.binary_search(&j) {
            zero.insert(pos, j);
        }
        Self { zero, one: self.one.clone() }
    }

    /// Child with coordinate `j` additionally fixed to nonzero.
    pub fn with_one(&self, j: usize) -> Self {
        debug_assert!(!self.is_zero(j));
        let mut one = self.one.clone();
        if let Err(pos) = one.binary_search(&j) {
            one.insert(pos, j);
        }
        Self { zero: self.zero.clone(), one }
    }

    /// Dense membership masks `(fixed_zero, fixed_one)` of length `p`.
    pub fn masks(&self, p: usize) -> (Vec<bool>, Vec<bool>) {
        let mut m0 = vec![false; p];
        let mut m1 = vec![false; p];
        for &i in &self.zero {
            m0[i] = true;
        }
        for &i in &self.one {
            m1[i] = true;
        }
        (m0, m1)
    }

    /// Reconstructs fixations from dense masks.
    pub fn from_masks(m0: &[bool], m1: &[bool]) -> Self {
        let zero = m0.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect();
        let one = m1.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect();
        Self { zero, one }
    }
}

/// Penalty-regime constants shared by every coordinate at a given ADMM
/// penalty `rho`.
#[derive(Clone, Copy, Debug)]
pub struct RegimeParams<T> {
    /// `sqrt(lambda0 / lambda2)`.
    pub sqrt_ratio: T,
    /// Soft-threshold level for free coordinates: `2·sqrt(λ₀λ₂)/ρ` while the
    /// linear segment fits inside the box, else `λ₀/(Mρ) + λ₂M/ρ`.
    pub free_threshold: T,
    /// Quadratic-regime shrinkage `ρ/(ρ + 2λ₂)`.
    pub fixed_shrink: T,
    /// ADMM penalty the thresholds were derived at.
    pub rho: T,
    /// Box half-width `M`.
    pub big_m: T,
}

impl<T: Scalar> RegimeParams<T> {
    pub fn new(prob: &ProblemData<T>, rho: T) -> Self {
        let sqrt_ratio = prob.sqrt_ratio();
        let big_m = prob.big_m();
        let free_threshold = if sqrt_ratio <= big_m {
            cast::<T>(2.0) * (prob.lambda0() * prob.lambda2()).sqrt() / rho
        } else {
            (prob.lambda0() / big_m + prob.lambda2() * big_m) / rho
        };
        let fixed_shrink = rho / (rho + cast::<T>(2.0) * prob.lambda2());
        Self { sqrt_ratio, free_threshold, fixed_shrink, rho, big_m }
    }

    /// Magnitude of the scaled iterate beyond which a free coordinate leaves
    /// the soft-threshold segment and takes the ridge shrinkage instead.
    /// Only meaningful while `sqrt_ratio <= big_m`.
    pub fn shrink_cutoff(&self) -> T {
        self.free_threshold + self.sqrt_ratio
    }
}

#[inline]
fn clamp_box<T: Scalar>(x: T, m: T) -> T {
    Float::min(Float::max(x, -m), m)
}

/// Soft threshold at level `a` followed by clamping to `[-m, m]`.
///
/// Zero inside `[-a, a]`, shrinks by `a` on `a < |t| <= a + m`, saturates at
/// `±m` beyond. Requires `a >= 0`, `m > 0`.
pub fn box_soft_threshold<T: Scalar>(t: T, a: T, m: T) -> T {
    debug_assert!(a >= T::zero() && m > T::zero());
    let mag = t.abs();
    if mag <= a {
        T::zero()
    } else if mag <= a + m {
        (mag - a) * t.signum()
    } else {
        m * t.signum()
    }
}

/// Per-coordinate relaxation penalty ψᵢ, as an extended-real total function.
///
/// Infinite outside the box or at a nonzero value fixed to zero. On feasible
/// values: `λ₀ + λ₂β²` for coordinates fixed to nonzero; for free coordinates
/// the convex envelope, which is `2·sqrt(λ₀λ₂)·|β|` on the central segment,
/// `λ₀ + λ₂β²` beyond it, and the steeper line `(λ₀/M + λ₂M)|β|` when the
/// segment half-width exceeds the box.
pub fn psi<T: Scalar>(beta_i: T, i: usize, fix: &Fixations, prob: &ProblemData<T>) -> T {
    psi_membership(beta_i, fix.membership(i), prob)
}

/// `psi` with membership resolved by the caller.
pub fn psi_membership<T: Scalar>(beta_i: T, membership: Membership, prob: &ProblemData<T>) -> T {
    let mag = beta_i.abs();
    let m = prob.big_m();
    match membership {
        Membership::Zero => {
            if beta_i == T::zero() {
                T::zero()
            } else {
                T::infinity()
            }
        }
        Membership::One => {
            if mag <= m {
                prob.lambda0() + prob.lambda2() * beta_i * beta_i
            } else {
                T::infinity()
            }
        }
        Membership::Free => {
            if mag > m {
                T::infinity()
            } else if prob.sqrt_ratio() <= m {
                if mag >= prob.sqrt_ratio() {
                    prob.lambda0() + prob.lambda2() * beta_i * beta_i
                } else {
                    cast::<T>(2.0) * (prob.lambda0() * prob.lambda2()).sqrt() * mag
                }
            } else {
                (prob.lambda0() / m + prob.lambda2() * m) * mag
            }
        }
    }
}

/// Proximal map of `ψᵢ/ρ` plus the box, evaluated at the scaled iterate.
///
/// This is the coordinate-wise update of the relaxation ADMM and, at
/// `ρ = 1/stepsize`, the prox used by the independent oracle.
pub fn prox_psi<T: Scalar>(beta_tilde: T, membership: Membership, regime: &RegimeParams<T>) -> T {
    match membership {
        Membership::Zero => T::zero(),
        Membership::One => clamp_box(regime.fixed_shrink * beta_tilde, regime.big_m),
        Membership::Free => {
            if regime.sqrt_ratio <= regime.big_m && beta_tilde.abs() >= regime.shrink_cutoff() {
                clamp_box(regime.fixed_shrink * beta_tilde, regime.big_m)
            } else {
                box_soft_threshold(beta_tilde, regime.free_threshold, regime.big_m)
            }
        }
    }
}

/// Scalar building block of the dual bound:
/// `h(x) = x²/(4λ₂) − λ₀` for `x <= 2Mλ₂`, else `Mx − λ₀ − λ₂M²`.
///
/// Continuous at the break by construction.
pub fn dual_h<T: Scalar>(x: T, prob: &ProblemData<T>) -> T {
    let l0 = prob.lambda0();
    let l2 = prob.lambda2();
    let m = prob.big_m();
    if x <= cast::<T>(2.0) * m * l2 {
        x * x / (cast::<T>(4.0) * l2) - l0
    } else {
        m * x - l0 - l2 * m * m
    }
}

/// Per-coordinate dual penalty νᵢ at `x = |Xᵢᵀr̂|`.
///
/// Zero for coordinates fixed to zero, `h(x)` for coordinates fixed to
/// nonzero, and the positive part of `h` (or of its outer linear branch when
/// the penalty's linear segment exceeds the box) for free coordinates.
pub fn dual_nu<T: Scalar>(x: T, i: usize, fix: &Fixations, prob: &ProblemData<T>) -> T {
    dual_nu_membership(x, fix.membership(i), prob)
}

/// `dual_nu` with membership resolved by the caller.
pub fn dual_nu_membership<T: Scalar>(x: T, membership: Membership, prob: &ProblemData<T>) -> T {
    match membership {
        Membership::Zero => T::zero(),
        Membership::One => dual_h(x, prob),
        Membership::Free => {
            let m = prob.big_m();
            if prob.sqrt_ratio() <= m {
                Float::max(dual_h(x, prob), T::zero())
            } else {
                let lin = m * x - prob.lambda0() - prob.lambda2() * m * m;
                Float::max(lin, T::zero())
            }
        }
    }
}

/// Recovers the eliminated indicator and perspective variables from β.
///
/// Returns `(z, s)` with `z` in `[0,1]`, fixed coordinates exactly 0/1, and
/// the conic feasibility `βᵢ² <= sᵢzᵢ`, `|βᵢ| <= M·zᵢ` up to rounding.
/// Free coordinates take `z = clamp(max(|β|/M, sqrt(λ₂/λ₀)·|β|), 0, 1)` and
/// `s = β²/z` with `0/0 := 0`.
///
/// Errors with [`Error::InfeasibleFixation`] if a zero-fixed coordinate has a
/// nonzero coefficient.
pub fn recover_zs<T: Scalar>(
    beta: &ArrayView1<T>,
    fix: &Fixations,
    prob: &ProblemData<T>,
) -> Result<(Array1<T>, Array1<T>)> {
    let p = beta.len();
    let mut z = Array1::zeros(p);
    let mut s = Array1::zeros(p);
    // sqrt(λ₂/λ₀) is +inf at λ₀ = 0; the β = 0 case is handled first so the
    // product below never sees inf·0.
    let inv_ratio = (prob.lambda2() / prob.lambda0()).sqrt();
    for i in 0..p {
        let b = beta[i];
        match fix.membership(i) {
            Membership::Zero => {
                if b != T::zero() {
                    return Err(Error::InfeasibleFixation {
                        index: i,
                        value: b.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
            Membership::One => {
                z[i] = T::one();
                s[i] = b * b;
            }
            Membership::Free => {
                if b == T::zero() {
                    continue;
                }
                let mag = b.abs();
                let zi = Float::min(Float::max(mag / prob.big_m(), inv_ratio * mag), T::one());
                z[i] = zi;
                s[i] = b * b / zi;
            }
        }
    }
    Ok((z, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn toy_problem(lambda0: f64, lambda2: f64, big_m: f64) -> ProblemData<f64> {
        ProblemData::new(array![[1.0], [0.5]], array![1.0, 2.0], lambda0, lambda2, big_m).unwrap()
    }

    #[test]
    fn construction_rejects_bad_domains() {
        let x = array![[1.0], [2.0]];
        let y = array![1.0, 2.0];
        assert!(ProblemData::new(x.clone(), array![1.0], 1.0, 1.0, 1.0).is_err());
        assert!(ProblemData::new(x.clone(), y.clone(), -1.0, 1.0, 1.0).is_err());
        assert!(ProblemData::new(x.clone(), y.clone(), 1.0, 0.0, 1.0).is_err());
        assert!(ProblemData::new(x.clone(), y.clone(), 1.0, 1.0, 0.0).is_err());
        assert!(ProblemData::new(x, y, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn column_norms_cached() {
        let prob =
            ProblemData::new(array![[1.0, 2.0], [2.0, 0.0]], array![0.0, 0.0], 1.0, 1.0, 1.0)
                .unwrap();
        assert_abs_diff_eq!(prob.col_sq_norms()[0], 5.0);
        assert_abs_diff_eq!(prob.col_sq_norms()[1], 4.0);
    }

    #[test]
    fn fixations_reject_overlap_and_range() {
        assert!(Fixations::new(vec![0], vec![0], 3).is_err());
        assert!(Fixations::new(vec![3], vec![], 3).is_err());
        let f = Fixations::new(vec![2, 0], vec![1], 3).unwrap();
        assert_eq!(f.zero(), &[0, 2]);
        assert_eq!(f.membership(1), Membership::One);
        assert_eq!(f.membership(0), Membership::Zero);
    }

    #[test]
    fn fixation_masks_round_trip() {
        let f = Fixations::new(vec![0, 3], vec![1], 5).unwrap();
        let (m0, m1) = f.masks(5);
        assert_eq!(Fixations::from_masks(&m0, &m1), f);
    }

    #[test]
    fn box_soft_threshold_examples() {
        assert_eq!(box_soft_threshold(0.5, 1.0, 2.0), 0.0);
        assert_eq!(box_soft_threshold(-3.0, 1.0, 5.0), -2.0);
        assert_eq!(box_soft_threshold(10.0, 1.0, 2.0), 2.0);
    }

    #[test]
    fn psi_fixed_one_is_ridge_plus_entry_cost() {
        let prob = toy_problem(1.0, 2.0, 10.0);
        let fix = Fixations::new(vec![], vec![0], 1).unwrap();
        assert_abs_diff_eq!(psi(0.5, 0, &fix, &prob), 1.5);
    }

    #[test]
    fn psi_free_linear_segment() {
        let prob = toy_problem(1.0, 1.0, 2.0);
        let fix = Fixations::root();
        assert_abs_diff_eq!(psi(0.5, 0, &fix, &prob), 1.0);
    }

    #[test]
    fn psi_infinite_cases() {
        let prob = toy_problem(1.0, 1.0, 2.0);
        let zero = Fixations::new(vec![0], vec![], 1).unwrap();
        assert_eq!(psi(0.1, 0, &zero, &prob), f64::INFINITY);
        assert_eq!(psi(0.0, 0, &zero, &prob), 0.0);
        assert_eq!(psi(2.5, 0, &Fixations::root(), &prob), f64::INFINITY);
    }

    #[test]
    fn dual_h_examples_and_continuity() {
        let prob = toy_problem(1.0, 1.0, 1.0);
        assert_abs_diff_eq!(dual_h(1.0, &prob), -0.75);
        assert_abs_diff_eq!(dual_h(4.0, &prob), 2.0);
        // Break point x = 2Mλ₂ = 2: both branches give M²λ₂ − λ₀ = 0.
        let at = dual_h(2.0, &prob);
        let just_above = dual_h(2.0 + 1e-12, &prob);
        assert_abs_diff_eq!(at, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at, just_above, epsilon = 1e-10);
    }

    #[test]
    fn dual_nu_respects_membership() {
        let prob = toy_problem(1.0, 1.0, 1.0);
        let fix = Fixations::new(vec![0], vec![], 1).unwrap();
        assert_eq!(dual_nu(5.0, 0, &fix, &prob), 0.0);
        // Free coordinate clips negative h to zero.
        assert_eq!(dual_nu(1.0, 0, &Fixations::root(), &prob), 0.0);
        // Fixed-to-one keeps the negative value.
        let one = Fixations::new(vec![], vec![0], 1).unwrap();
        assert_abs_diff_eq!(dual_nu(1.0, 0, &one, &prob), -0.75);
    }

    #[test]
    fn dual_nu_steep_regime_uses_linear_branch() {
        // sqrt(λ₀/λ₂) = 4 > M = 1: positive part of Mx − λ₀ − λ₂M².
        let prob = toy_problem(16.0, 1.0, 1.0);
        let nu = dual_nu(20.0, 0, &Fixations::root(), &prob);
        assert_abs_diff_eq!(nu, 20.0 - 16.0 - 1.0);
        assert_eq!(dual_nu(1.0, 0, &Fixations::root(), &prob), 0.0);
    }

    #[test]
    fn recover_zs_example() {
        let prob = toy_problem(4.0, 1.0, 3.0);
        let beta = array![1.0];
        let (z, s) = recover_zs(&beta.view(), &Fixations::root(), &prob).unwrap();
        assert_abs_diff_eq!(z[0], 0.5);
        assert_abs_diff_eq!(s[0], 2.0);
    }

    #[test]
    fn recover_zs_rejects_nonzero_on_fixed_zero() {
        let prob = toy_problem(1.0, 1.0, 1.0);
        let fix = Fixations::new(vec![0], vec![], 1).unwrap();
        let err = recover_zs(&array![0.5].view(), &fix, &prob).unwrap_err();
        assert!(matches!(err, Error::InfeasibleFixation { index: 0, .. }));
    }

    #[test]
    fn recover_zs_zero_lambda0_pushes_z_to_one() {
        let prob = toy_problem(0.0, 1.0, 2.0);
        let beta = array![0.5, 0.0];
        let fix = Fixations::root();
        let (z, s) = recover_zs(&beta.view(), &fix, &prob).unwrap();
        assert_eq!(z[0], 1.0);
        assert_abs_diff_eq!(s[0], 0.25);
        assert_eq!(z[1], 0.0);
        assert_eq!(s[1], 0.0);
    }

    #[test]
    fn prox_example_fixed_one() {
        let prob = toy_problem(1.0, 1.0, 1.0);
        let regime = RegimeParams::new(&prob, 2.0);
        assert_abs_diff_eq!(prox_psi(1.0, Membership::One, &regime), 0.5);
    }

    #[test]
    fn prox_is_continuous_at_shrink_cutoff() {
        let prob = toy_problem(1.0, 2.0, 10.0);
        let regime = RegimeParams::new(&prob, 1.3);
        let cut = regime.shrink_cutoff();
        let below = prox_psi(cut - 1e-9, Membership::Free, &regime);
        let above = prox_psi(cut + 1e-9, Membership::Free, &regime);
        assert_abs_diff_eq!(below, above, epsilon = 1e-7);
        // At the cutoff both branches agree exactly with sqrt(λ₀/λ₂).
        assert_abs_diff_eq!(prox_psi(cut, Membership::Free, &regime), regime.sqrt_ratio, epsilon = 1e-12);
    }

    #[test]
    fn mip_objective_counts_support() {
        let prob = toy_problem(1.0, 0.5, 10.0);
        let beta = array![2.0];
        // r = (1−2, 2−1) = (−1, 1); ½·2 + 1·1 + 0.5·4 = 4.
        assert_abs_diff_eq!(prob.mip_objective(&beta.view(), 1), 4.0);
    }

    #[test]
    fn generic_over_f32() {
        let x = array![[1.0f32], [0.5]];
        let prob = ProblemData::new(x, array![1.0f32, 2.0], 1.0, 1.0, 2.0).unwrap();
        let fix = Fixations::root();
        assert!((psi(0.5f32, 0, &fix, &prob) - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn box_soft_threshold_properties(
            t1 in -50.0..50.0f64,
            t2 in -50.0..50.0f64,
            a in 0.0..10.0f64,
            m in 1e-3..10.0f64,
        ) {
            let f = |t: f64| box_soft_threshold(t, a, m);
            // Odd, bounded, 1-Lipschitz, monotone.
            prop_assert!((f(-t1) + f(t1)).abs() < 1e-12);
            prop_assert!(f(t1).abs() <= m);
            prop_assert!((f(t1) - f(t2)).abs() <= (t1 - t2).abs() + 1e-12);
            if t1 <= t2 {
                prop_assert!(f(t1) <= f(t2) + 1e-12);
            }
        }

        #[test]
        fn psi_free_matches_scalar_minimization(
            beta in -5.0..5.0f64,
            lambda0 in 1e-3..4.0f64,
            lambda2 in 1e-3..4.0f64,
            big_m in 0.2..6.0f64,
        ) {
            prop_assume!(beta.abs() <= big_m);
            let prob = toy_problem(lambda0, lambda2, big_m);
            let got = psi(beta, 0, &Fixations::root(), &prob);
            let oracle = crate::oracle::psi_by_scalar_minimization(beta, lambda0, lambda2, big_m);
            prop_assert!((got - oracle).abs() <= 1e-8_f64.max(1e-10 * oracle.abs()),
                "psi {} vs oracle {}", got, oracle);
        }

        #[test]
        fn recover_zs_is_conic_feasible(
            beta in -3.0..3.0f64,
            lambda0 in 1e-3..4.0f64,
            lambda2 in 1e-3..4.0f64,
        ) {
            let big_m = 3.0;
            let prob = toy_problem(lambda0, lambda2, big_m);
            let arr = array![beta];
            let (z, s) = recover_zs(&arr.view(), &Fixations::root(), &prob).unwrap();
            prop_assert!((0.0..=1.0).contains(&z[0]));
            prop_assert!(beta * beta <= s[0] * z[0] + 1e-10);
            prop_assert!(beta.abs() <= big_m * z[0] + 1e-10);
        }

        #[test]
        fn prox_psi_never_leaves_box(
            beta_tilde in -100.0..100.0f64,
            lambda0 in 1e-3..10.0f64,
            lambda2 in 1e-3..10.0f64,
            big_m in 0.1..5.0f64,
            rho in 0.1..10.0f64,
        ) {
            let prob = toy_problem(lambda0, lambda2, big_m);
            let regime = RegimeParams::new(&prob, rho);
            for membership in [Membership::Zero, Membership::One, Membership::Free] {
                let v = prox_psi(beta_tilde, membership, &regime);
                prop_assert!(v.abs() <= big_m + 1e-12);
            }
        }
    }
}

//! Synthetic instances, ridge-based λ₂ tuning, CSV ingestion, and the
//! machine-readable solve report.
//!
//! Generation uses a fixed, portable RNG (ChaCha8 seeded from a `u64`) and a
//! pinned draw order — per sample one shared factor then the feature noise,
//! then the response noise vector — so a `(spec, seed)` pair reproduces the
//! same instance bit for bit on every platform and thread count.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bnb::SolveReport;
use crate::linalg::{cholesky, cholesky_solve};
use crate::problem::ProblemData;
use crate::{cast, Error, Result, Scalar};

/// Recipe for a synthetic regression instance.
///
/// Feature rows are drawn from `N(0, Σ)` with `Σ = corr·11ᵀ + (1 − corr)·I`,
/// the ground truth has `k0` equispaced entries of value 1, and the noise
/// level is set so that `Var(Xβ†)/σ² = snr` holds exactly for the empirical
/// variance of the generated signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    /// Number of nonzeros in the ground truth.
    pub k0: usize,
    /// Pairwise feature correlation in `[0, 1)`.
    pub corr: f64,
    /// Signal-to-noise ratio, `> 0`.
    pub snr: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidSpec("n and p must be positive".into()));
        }
        if self.k0 == 0 || self.k0 > self.p {
            return Err(Error::InvalidSpec(format!(
                "k0 = {} must lie in 1..={}",
                self.k0, self.p
            )));
        }
        if !(0.0..1.0).contains(&self.corr) {
            return Err(Error::InvalidSpec(format!("corr = {} outside [0, 1)", self.corr)));
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() {
            return Err(Error::InvalidSpec(format!("snr = {} must be positive", self.snr)));
        }
        Ok(())
    }
}

/// A generated instance: design, response, and the ground truth behind it.
#[derive(Clone, Debug)]
pub struct Instance<T> {
    pub x: Array2<T>,
    pub y: Array1<T>,
    pub beta_true: Array1<T>,
    /// Noise standard deviation actually used.
    pub sigma: T,
}

impl<T: Scalar> Instance<T> {
    /// Packs the data with penalties into a solvable problem.
    pub fn to_problem(&self, lambda0: T, lambda2: T, big_m: T) -> Result<ProblemData<T>> {
        ProblemData::new(self.x.clone(), self.y.clone(), lambda0, lambda2, big_m)
    }
}

/// Population variance (division by `len`, not `len − 1`).
fn population_variance<T: Scalar>(v: &ArrayView1<T>) -> T {
    let n = cast::<T>(v.len() as f64);
    let mean = v.sum() / n;
    v.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n
}

/// Draws a synthetic instance; bit-identical for identical specs.
///
/// Equicorrelated rows come from the one-factor form
/// `x_i = √corr·g_i·1 + √(1 − corr)·ε_i`, which has covariance
/// `corr·11ᵀ + (1 − corr)·I` exactly.
pub fn generate<T: Scalar>(spec: &SyntheticSpec) -> Result<Instance<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let draw = |rng: &mut ChaCha8Rng| -> T { cast(StandardNormal.sample(rng)) };

    let shared = cast::<T>(spec.corr).sqrt();
    let private = (T::one() - cast::<T>(spec.corr)).sqrt();
    let mut x = Array2::<T>::zeros((spec.n, spec.p));
    for i in 0..spec.n {
        let g = draw(&mut rng);
        for j in 0..spec.p {
            x[(i, j)] = shared * g + private * draw(&mut rng);
        }
    }

    let mut beta_true = Array1::<T>::zeros(spec.p);
    for j in 0..spec.k0 {
        beta_true[j * spec.p / spec.k0] = T::one();
    }

    let signal = x.dot(&beta_true);
    let sigma = (population_variance(&signal.view()) / cast(spec.snr)).sqrt();
    let mut y = signal;
    for i in 0..spec.n {
        y[i] = y[i] + sigma * draw(&mut rng);
    }
    Ok(Instance { x, y, beta_true, sigma })
}

/// `count` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid<T: Scalar>(lo: T, hi: T, count: usize) -> Vec<T> {
    assert!(count >= 2 && lo > T::zero() && hi > lo);
    let llo = lo.ln();
    let lhi = hi.ln();
    let step = (lhi - llo) / cast::<T>((count - 1) as f64);
    (0..count).map(|i| (llo + cast::<T>(i as f64) * step).exp()).collect()
}

/// Ridge restricted to `support`: solves
/// `(X_SᵀX_S + 2λ₂ I) β_S = X_Sᵀ y` and embeds the result in a full
/// (elsewhere zero) coefficient vector.
pub fn restricted_ridge<T: Scalar>(
    x: &ArrayView2<T>,
    y: &ArrayView1<T>,
    support: &[usize],
    lambda2: T,
) -> Result<Array1<T>> {
    let mut beta = Array1::<T>::zeros(x.ncols());
    if support.is_empty() {
        return Ok(beta);
    }
    let s = support.len();
    let two = cast::<T>(2.0);
    let mut gram = Array2::<T>::zeros((s, s));
    let mut rhs = Array1::<T>::zeros(s);
    for (a, &ja) in support.iter().enumerate() {
        let col_a = x.column(ja);
        rhs[a] = col_a.dot(y);
        for (b, &jb) in support.iter().enumerate().take(a + 1) {
            let v = col_a.dot(&x.column(jb));
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
        gram[(a, a)] = gram[(a, a)] + two * lambda2;
    }
    let l = cholesky(&gram)?;
    let solution = cholesky_solve(&l, &rhs);
    for (a, &ja) in support.iter().enumerate() {
        beta[ja] = solution[a];
    }
    Ok(beta)
}

/// Picks λ₂ from a 100-point logarithmic grid over `[1e−4, 1e4]` by
/// minimizing `‖β† − β(λ₂)‖₂` of the ridge restricted to the true support.
/// Ties go to the smaller λ₂.
pub fn tune_lambda2<T: Scalar>(inst: &Instance<T>) -> Result<T> {
    let support: Vec<usize> =
        (0..inst.beta_true.len()).filter(|&j| inst.beta_true[j] != T::zero()).collect();
    let mut best: Option<(T, T)> = None;
    for lambda2 in log_grid(cast::<T>(1e-4), cast::<T>(1e4), 100) {
        let beta = restricted_ridge(&inst.x.view(), &inst.y.view(), &support, lambda2)?;
        let err = inst
            .beta_true
            .iter()
            .zip(beta.iter())
            .map(|(&t, &b)| (t - b) * (t - b))
            .sum::<T>()
            .sqrt();
        if best.is_none_or(|(e, _)| err < e) {
            best = Some((err, lambda2));
        }
    }
    Ok(best.expect("grid is nonempty").1)
}

/// Default box radius: 1.5× the largest restricted-ridge coefficient at the
/// tuned λ₂.
pub fn default_big_m<T: Scalar>(inst: &Instance<T>, lambda2: T) -> Result<T> {
    let support: Vec<usize> =
        (0..inst.beta_true.len()).filter(|&j| inst.beta_true[j] != T::zero()).collect();
    let beta = restricted_ridge(&inst.x.view(), &inst.y.view(), &support, lambda2)?;
    let max_abs = beta.iter().fold(T::zero(), |acc, &b| acc.max(b.abs()));
    Ok(cast::<T>(1.5) * max_abs)
}

/// Column preprocessing applied by [`load_csv`].
#[derive(Clone, Copy, Debug, Default)]
pub struct Preprocess {
    /// Subtract each design column's mean (and the response mean).
    pub center: bool,
    /// Scale each design column to unit Euclidean norm (after centering).
    pub normalize: bool,
}

fn parse_cell<T: Scalar>(field: &str, row: usize, col: usize) -> Result<T> {
    match field.trim().parse::<f64>() {
        Ok(v) => Ok(cast(v)),
        Err(err) => Err(Error::ParseError { row, col, msg: err.to_string() }),
    }
}

fn open_error(err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::ParseError { row: 0, col: 0, msg: format!("{other:?}") },
    }
}

fn read_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(open_error)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|err| Error::ParseError {
            row: i + 1,
            col: 0,
            msg: err.to_string(),
        })?;
        rows.push(record.iter().map(str::to_owned).collect());
    }
    Ok(rows)
}

/// Reads `X` (n×p) and `y` (length n) from numeric CSV files and applies the
/// requested preprocessing. Errors carry 1-based row/column positions.
pub fn load_csv<T: Scalar>(
    path_x: &Path,
    path_y: &Path,
    pre: Preprocess,
) -> Result<(Array2<T>, Array1<T>)> {
    let x_rows = read_rows(path_x)?;
    if x_rows.is_empty() {
        return Err(Error::ParseError { row: 1, col: 0, msg: "empty design file".into() });
    }
    let p = x_rows[0].len();
    let n = x_rows.len();
    let mut x = Array2::<T>::zeros((n, p));
    for (i, row) in x_rows.iter().enumerate() {
        if row.len() != p {
            return Err(Error::ParseError {
                row: i + 1,
                col: row.len(),
                msg: format!("expected {p} fields, found {}", row.len()),
            });
        }
        for (j, field) in row.iter().enumerate() {
            x[(i, j)] = parse_cell(field, i + 1, j + 1)?;
        }
    }

    let y_rows = read_rows(path_y)?;
    let mut y = Array1::<T>::zeros(y_rows.len());
    for (i, row) in y_rows.iter().enumerate() {
        if row.len() != 1 {
            return Err(Error::ParseError {
                row: i + 1,
                col: row.len(),
                msg: format!("expected 1 field, found {}", row.len()),
            });
        }
        y[i] = parse_cell(&row[0], i + 1, 1)?;
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "X has {n} rows but y has {} values",
            y.len()
        )));
    }

    if pre.center {
        let n_t = cast::<T>(n as f64);
        for j in 0..p {
            let mean = x.column(j).sum() / n_t;
            x.column_mut(j).mapv_inplace(|v| v - mean);
        }
        let y_mean = y.sum() / n_t;
        y.mapv_inplace(|v| v - y_mean);
    }
    if pre.normalize {
        for j in 0..p {
            let norm = x.column(j).dot(&x.column(j)).sqrt();
            if norm > T::zero() {
                x.column_mut(j).mapv_inplace(|v| v / norm);
            }
        }
    }
    Ok((x, y))
}

/// 17-significant-digit float formatting: round-trips `f64` bit-exactly and
/// stays a valid JSON number. Non-finite values become `null`.
fn fmt_float<T: Scalar>(v: T) -> String {
    let v = v.to_f64().expect("scalar converts to f64");
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

fn fmt_float_array<'a, T: Scalar>(values: impl Iterator<Item = &'a T>) -> String {
    let mut out = String::from("[");
    for (i, &v) in values.enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&fmt_float(v));
    }
    out.push(']');
    out
}

/// Writes a matrix as plain numeric CSV with one row per line.
pub fn write_matrix_csv<T: Scalar>(path: &Path, m: &ArrayView2<T>) -> Result<()> {
    let mut out = String::new();
    for row in m.rows() {
        for (j, &v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.16e}", v.to_f64().expect("scalar converts to f64"));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes a vector as a single-column CSV.
pub fn write_vector_csv<T: Scalar>(path: &Path, v: &ArrayView1<T>) -> Result<()> {
    let mut out = String::new();
    for &value in v {
        let _ = writeln!(out, "{:.16e}", value.to_f64().expect("scalar converts to f64"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Serializes a solve report as JSON with a fixed field order:
/// status, objective, lower_bound, gap, support, coefficients, nodes_solved,
/// wall_time_s, config. All floats use 17 significant digits so parsing the
/// file recovers them bit-exactly.
pub fn write_report<T: Scalar>(report: &SolveReport<T>, path: &Path) -> Result<()> {
    let opts = &report.options;
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"status\": \"{}\",", report.status);
    let _ = writeln!(out, "  \"objective\": {},", fmt_float(report.best_objective));
    let _ = writeln!(out, "  \"lower_bound\": {},", fmt_float(report.global_lb));
    let _ = writeln!(out, "  \"gap\": {},", fmt_float(report.gap));
    let support: Vec<String> = report.support.iter().map(|j| j.to_string()).collect();
    let _ = writeln!(out, "  \"support\": [{}],", support.join(", "));
    let _ = writeln!(out, "  \"coefficients\": {},", fmt_float_array(report.best_beta.iter()));
    let _ = writeln!(out, "  \"nodes_solved\": {},", report.nodes_solved);
    let _ = writeln!(out, "  \"wall_time_s\": {},", fmt_float(report.wall_time.as_secs_f64()));
    out.push_str("  \"config\": {\n");
    let _ = writeln!(out, "    \"rho\": {},", fmt_float(opts.rho));
    let _ = writeln!(out, "    \"batch\": {},", opts.batch);
    let _ = writeln!(out, "    \"gap_tol\": {},", fmt_float(opts.gap_tol));
    let _ = writeln!(out, "    \"int_tol\": {},", fmt_float(opts.int_tol));
    let _ = writeln!(out, "    \"subproblem_tol\": {},", fmt_float(opts.admm.subproblem_tol));
    let _ = writeln!(out, "    \"admm_max_iters\": {},", opts.admm.max_iters);
    let _ = writeln!(out, "    \"fpg_tol\": {},", fmt_float(opts.fpg.tol));
    let _ = writeln!(out, "    \"fpg_max_iters\": {},", opts.fpg.max_iters);
    let time_limit = match opts.time_limit {
        Some(d) => fmt_float(d.as_secs_f64()),
        None => "null".into(),
    };
    let _ = writeln!(out, "    \"time_limit_s\": {time_limit},");
    let node_limit = match opts.node_limit {
        Some(limit) => limit.to_string(),
        None => "null".into(),
    };
    let _ = writeln!(out, "    \"node_limit\": {node_limit},");
    let _ = writeln!(out, "    \"max_warm_states\": {}", opts.max_warm_states);
    out.push_str("  }\n}\n");
    fs::write(path, out)?;
    Ok(())
}

/// Parses a report file back into JSON for inspection.
pub fn read_report(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|err| Error::ParseError { row: err.line(), col: err.column(), msg: err.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnb::{solve, SolveOptions};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn small_spec() -> SyntheticSpec {
        SyntheticSpec { n: 30, p: 10, k0: 2, corr: 0.2, snr: 10.0, seed: 7 }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        for bad in [
            SyntheticSpec { k0: 0, ..small_spec() },
            SyntheticSpec { k0: 11, ..small_spec() },
            SyntheticSpec { corr: 1.0, ..small_spec() },
            SyntheticSpec { corr: -0.1, ..small_spec() },
            SyntheticSpec { snr: 0.0, ..small_spec() },
            SyntheticSpec { n: 0, ..small_spec() },
        ] {
            assert!(matches!(generate::<f64>(&bad), Err(Error::InvalidSpec(_))), "{bad:?}");
        }
    }

    #[test]
    fn generation_is_bit_identical() {
        let a = generate::<f64>(&small_spec()).unwrap();
        let b = generate::<f64>(&small_spec()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.beta_true, b.beta_true);
        assert_eq!(a.sigma, b.sigma);
        let c = generate::<f64>(&SyntheticSpec { seed: 8, ..small_spec() }).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn ground_truth_has_equispaced_unit_entries() {
        let inst = generate::<f64>(&small_spec()).unwrap();
        let support: Vec<usize> =
            (0..10).filter(|&j| inst.beta_true[j] != 0.0).collect();
        assert_eq!(support, vec![0, 5]);
        assert!(support.iter().all(|&j| inst.beta_true[j] == 1.0));
        let inst =
            generate::<f64>(&SyntheticSpec { p: 15, k0: 5, ..small_spec() }).unwrap();
        let support: Vec<usize> =
            (0..15).filter(|&j| inst.beta_true[j] != 0.0).collect();
        assert_eq!(support, vec![0, 3, 6, 9, 12]);
    }

    #[test]
    fn snr_identity_holds_exactly() {
        for snr in [0.5, 10.0, 100.0] {
            let inst = generate::<f64>(&SyntheticSpec { snr, ..small_spec() }).unwrap();
            let signal = inst.x.dot(&inst.beta_true);
            let var = population_variance(&signal.view());
            assert_abs_diff_eq!(var / (inst.sigma * inst.sigma), snr, epsilon = 1e-10 * snr);
        }
    }

    fn sample_covariance(x: &Array2<f64>) -> Array2<f64> {
        let n = x.nrows() as f64;
        let p = x.ncols();
        let means: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n).collect();
        let mut cov = Array2::<f64>::zeros((p, p));
        for a in 0..p {
            for b in 0..p {
                cov[(a, b)] = x.column(a).dot(&x.column(b)) / n - means[a] * means[b];
            }
        }
        cov
    }

    #[test]
    fn uncorrelated_columns_have_vanishing_cross_covariance() {
        let spec = SyntheticSpec { n: 10_000, p: 5, k0: 1, corr: 0.0, snr: 10.0, seed: 3 };
        let inst = generate::<f64>(&spec).unwrap();
        let cov = sample_covariance(&inst.x);
        let mut total = 0.0;
        let mut count = 0;
        for a in 0..5 {
            for b in 0..5 {
                if a != b {
                    total += cov[(a, b)].abs();
                    count += 1;
                }
            }
        }
        assert!(total / count as f64 <= 3.0 / (spec.n as f64).sqrt());
    }

    #[test]
    fn correlated_columns_match_the_target_covariance() {
        let spec = SyntheticSpec { n: 100_000, p: 10, k0: 1, corr: 0.2, snr: 10.0, seed: 4 };
        let inst = generate::<f64>(&spec).unwrap();
        let cov = sample_covariance(&inst.x);
        for a in 0..10 {
            for b in 0..10 {
                let target = if a == b { 1.0 } else { 0.2 };
                assert!(
                    (cov[(a, b)] - target).abs() <= 0.02,
                    "cov[{a},{b}] = {} vs {target}",
                    cov[(a, b)]
                );
            }
        }
    }

    #[test]
    fn log_grid_spans_the_documented_range() {
        let grid = log_grid::<f64>(1e-4, 1e4, 100);
        assert_eq!(grid.len(), 100);
        assert_abs_diff_eq!(grid[0], 1e-4, epsilon = 1e-16);
        assert_abs_diff_eq!(grid[99], 1e4, epsilon = 1e-8);
        let ratio = grid[1] / grid[0];
        for w in grid.windows(2) {
            assert_abs_diff_eq!(w[1] / w[0], ratio, epsilon = 1e-12);
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn restricted_ridge_matches_the_orthonormal_closed_form() {
        // Orthonormal columns: β_S = X_Sᵀy/(1 + 2λ2) coordinate-wise.
        let x = array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        let y = array![3.0, -2.0, 5.0];
        let beta = restricted_ridge(&x.view(), &y.view(), &[0, 1], 0.25).unwrap();
        assert_abs_diff_eq!(beta[0], 3.0 / 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(beta[1], -2.0 / 1.5, epsilon = 1e-12);
        let empty = restricted_ridge(&x.view(), &y.view(), &[], 0.25).unwrap();
        assert_eq!(empty, array![0.0, 0.0]);
    }

    #[test]
    fn noiseless_orthonormal_tuning_prefers_the_smallest_lambda2() {
        // Any shrinkage moves the restricted ridge away from β†, so the error
        // is strictly increasing in λ2 and the grid minimum wins.
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        let beta_true = array![1.0, 0.0];
        let y = x.dot(&beta_true);
        let inst = Instance { x, y, beta_true, sigma: 0.0 };
        let tuned = tune_lambda2(&inst).unwrap();
        assert_abs_diff_eq!(tuned, 1e-4, epsilon = 1e-16);
    }

    #[test]
    fn default_big_m_scales_the_tuned_ridge_solution() {
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        let beta_true = array![1.0, 0.0];
        let y = array![2.0, 0.5];
        let inst = Instance { x, y, beta_true, sigma: 0.0 };
        let m = default_big_m(&inst, 0.25).unwrap();
        // Support {0}: β₀ = 2/(1 + 0.5) = 4/3, so M = 1.5·4/3 = 2.
        assert_abs_diff_eq!(m, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let x_path = dir.path().join("x.csv");
        let y_path = dir.path().join("y.csv");
        let inst = generate::<f64>(&small_spec()).unwrap();
        write_matrix_csv(&x_path, &inst.x.view()).unwrap();
        write_vector_csv(&y_path, &inst.y.view()).unwrap();
        let (x, y) = load_csv::<f64>(&x_path, &y_path, Preprocess::default()).unwrap();
        assert_eq!(x, inst.x);
        assert_eq!(y, inst.y);
    }

    #[test]
    fn identity_matrix_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let x_path = dir.path().join("x.csv");
        let y_path = dir.path().join("y.csv");
        let eye = array![[1.0, 0.0], [0.0, 1.0]];
        let y = array![1.0, 2.0];
        write_matrix_csv(&x_path, &eye.view()).unwrap();
        write_vector_csv(&y_path, &y.view()).unwrap();
        let (x2, y2) = load_csv::<f64>(&x_path, &y_path, Preprocess::default()).unwrap();
        assert_eq!(x2, eye);
        assert_eq!(y2, y);
    }

    #[test]
    fn ragged_rows_error_with_their_position() {
        let dir = tempfile::tempdir().unwrap();
        let x_path = dir.path().join("x.csv");
        let y_path = dir.path().join("y.csv");
        fs::write(&x_path, "1.0,2.0\n3.0\n").unwrap();
        fs::write(&y_path, "1.0\n2.0\n").unwrap();
        match load_csv::<f64>(&x_path, &y_path, Preprocess::default()) {
            Err(Error::ParseError { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn unparsable_cells_error_with_their_position() {
        let dir = tempfile::tempdir().unwrap();
        let x_path = dir.path().join("x.csv");
        let y_path = dir.path().join("y.csv");
        fs::write(&x_path, "1.0,2.0\n3.0,oops\n").unwrap();
        fs::write(&y_path, "1.0\n2.0\n").unwrap();
        match load_csv::<f64>(&x_path, &y_path, Preprocess::default()) {
            Err(Error::ParseError { row, col, .. }) => {
                assert_eq!((row, col), (2, 2));
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_row_counts_error() {
        let dir = tempfile::tempdir().unwrap();
        let x_path = dir.path().join("x.csv");
        let y_path = dir.path().join("y.csv");
        fs::write(&x_path, "1.0\n2.0\n3.0\n").unwrap();
        fs::write(&y_path, "1.0\n2.0\n").unwrap();
        assert!(matches!(
            load_csv::<f64>(&x_path, &y_path, Preprocess::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn preprocessing_flags_center_and_normalize() {
        let dir = tempfile::tempdir().unwrap();
        let x_path = dir.path().join("x.csv");
        let y_path = dir.path().join("y.csv");
        let inst = generate::<f64>(&small_spec()).unwrap();
        write_matrix_csv(&x_path, &inst.x.view()).unwrap();
        write_vector_csv(&y_path, &inst.y.view()).unwrap();
        let pre = Preprocess { center: true, normalize: true };
        let (x, y) = load_csv::<f64>(&x_path, &y_path, pre).unwrap();
        for j in 0..x.ncols() {
            let col = x.column(j);
            assert_abs_diff_eq!(col.sum(), 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(col.dot(&col).sqrt(), 1.0, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(y.sum(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn report_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let inst = generate::<f64>(&small_spec()).unwrap();
        let prob = inst.to_problem(0.3, 0.5, 2.0).unwrap();
        let report =
            solve(&prob, &SolveOptions { gap_tol: 1e-6, ..SolveOptions::default() }).unwrap();
        write_report(&report, &path).unwrap();
        let value = read_report(&path).unwrap();
        assert_eq!(value["status"].as_str().unwrap(), report.status.to_string());
        assert_eq!(value["objective"].as_f64().unwrap(), report.best_objective);
        assert_eq!(value["lower_bound"].as_f64().unwrap(), report.global_lb);
        assert_eq!(value["gap"].as_f64().unwrap(), report.gap);
        assert_eq!(value["nodes_solved"].as_u64().unwrap(), report.nodes_solved);
        let support: Vec<usize> = value["support"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap() as usize)
            .collect();
        assert_eq!(support, report.support);
        let coeffs = value["coefficients"].as_array().unwrap();
        assert_eq!(coeffs.len(), prob.p());
        for (v, &b) in coeffs.iter().zip(report.best_beta.iter()) {
            assert_eq!(v.as_f64().unwrap(), b);
        }
        // The serialized gap is consistent with the serialized bounds.
        let ub = value["objective"].as_f64().unwrap();
        let lb = value["lower_bound"].as_f64().unwrap();
        assert_abs_diff_eq!(value["gap"].as_f64().unwrap(), (ub - lb) / ub, epsilon = 1e-15);
        assert_eq!(value["config"]["batch"].as_u64().unwrap(), 8);
        assert!(value["config"]["time_limit_s"].is_null());
    }

    #[test]
    fn empty_support_and_nonfinite_bounds_serialize_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let inst = generate::<f64>(&small_spec()).unwrap();
        let y = inst.y.clone();
        let big = 0.5 * y.dot(&y) + 1.0;
        let prob = inst.to_problem(big, 0.5, 2.0).unwrap();
        let mut report = solve(&prob, &SolveOptions::default()).unwrap();
        assert!(report.support.is_empty());
        report.global_lb = f64::NEG_INFINITY;
        report.gap = f64::INFINITY;
        write_report(&report, &path).unwrap();
        let value = read_report(&path).unwrap();
        assert_eq!(value["support"].as_array().unwrap().len(), 0);
        assert!(value["lower_bound"].is_null());
        assert!(value["gap"].is_null());
    }
}

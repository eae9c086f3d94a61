//! Best-first branch-and-bound over fixation sets, in batches of K nodes.
//!
//! The controller keeps a priority queue of open nodes ordered by inherited
//! lower bound. Each round it pops up to K nodes, solves their relaxations in
//! one batched ADMM call, rounds the indicator vectors into candidate
//! supports, polishes those with a batched projected-gradient solve, and then
//! walks the batch sequentially: update the incumbent, prune what the bounds
//! allow, branch the rest on the most fractional indicator. The global lower
//! bound is the queue minimum, so the certificate `(UB − LB)/UB` is available
//! after every round.
//!
//! Tree logic is deliberately single-threaded and deterministic; all
//! parallelism lives inside the batched relaxation and upper-bound kernels.

use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use ndarray::Array1;

use crate::admm::{
    solve_relaxation_batch, warm_start_child, AdmmBatch, AdmmOptions, AdmmState, NodeTask,
    RelaxationResult,
};
use crate::precompute::build_precomputed;
use crate::problem::{Fixations, Membership, ProblemData};
use crate::pursuit::{run_matching_pursuit, MpOptions};
use crate::upper_bound::{fpg_solve_batch, round_support, FpgOptions, SupportBatch};
use crate::{cast, Error, Result, Scalar};

/// Why a solve stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// The queue emptied: every support was either visited or excluded by a
    /// valid bound. The reported gap is exactly zero.
    Optimal,
    /// The relative gap dropped to `gap_tol` or below.
    GapReached,
    /// The wall-clock budget ran out; bounds are still valid.
    TimeLimit,
    /// The solved-node budget ran out; bounds are still valid.
    NodeLimit,
    /// The caller's cancellation flag was observed between rounds.
    Cancelled,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::GapReached => "GapReached",
            SolveStatus::TimeLimit => "TimeLimit",
            SolveStatus::NodeLimit => "NodeLimit",
            SolveStatus::Cancelled => "Cancelled",
        };
        f.write_str(name)
    }
}

/// An open subproblem: a set of branching decisions plus everything needed
/// to resume work on it cheaply.
#[derive(Clone, Debug)]
pub struct Node<T> {
    /// Creation order; doubles as the FIFO tie-breaker among equal bounds.
    pub id: u64,
    pub fix: Fixations,
    /// Best known lower bound on this subtree (inherited, then solved).
    pub lb: T,
    pub depth: usize,
    /// Parent's final ADMM iterates, if the memory cap allowed keeping them.
    pub warm: Option<AdmmState<T>>,
}

/// Heap adapter: `BinaryHeap` is a max-heap, so order by reversed `(lb, id)`
/// to pop the smallest bound first and FIFO among equals.
#[derive(Debug)]
struct MinOrder<T>(Node<T>);

impl<T: Scalar> PartialEq for MinOrder<T> {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id && self.0.lb == other.0.lb
    }
}

impl<T: Scalar> Eq for MinOrder<T> {}

impl<T: Scalar> PartialOrd for MinOrder<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for MinOrder<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Bounds are reals or −∞, never NaN.
        match other.0.lb.partial_cmp(&self.0.lb).expect("lower bounds are never NaN") {
            std::cmp::Ordering::Equal => other.0.id.cmp(&self.0.id),
            ord => ord,
        }
    }
}

/// Priority queue of open nodes, smallest lower bound first.
#[derive(Debug, Default)]
pub struct OpenQueue<T: Scalar> {
    heap: BinaryHeap<MinOrder<T>>,
}

impl<T: Scalar> OpenQueue<T> {
    pub fn new() -> Self {
        Self { heap: BinaryHeap::new() }
    }

    pub fn push(&mut self, node: Node<T>) {
        self.heap.push(MinOrder(node));
    }

    pub fn pop(&mut self) -> Option<Node<T>> {
        self.heap.pop().map(|entry| entry.0)
    }

    /// Smallest lower bound among open nodes, `None` when empty.
    pub fn min_lb(&self) -> Option<T> {
        self.heap.peek().map(|entry| entry.0.lb)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// Controls for a full solve. `Default` matches the documented defaults of
/// every stage.
#[derive(Clone, Debug)]
pub struct SolveOptions<T> {
    /// ADMM penalty strength shared by every node relaxation.
    pub rho: T,
    /// Nodes per round: the K in the batched relaxation and polish calls.
    pub batch: usize,
    /// Stop once `(UB − LB)/UB` (absolute when `UB ≤ 0`) is at or below this.
    pub gap_tol: T,
    /// Indicators within this distance of 0/1 count as integral when looking
    /// for a branching coordinate. A node that is integral at this tolerance
    /// but whose bound does not yet certify it stays open and branches on its
    /// most fractional coordinate, so the tolerance affects node accounting,
    /// never correctness.
    pub int_tol: T,
    pub admm: AdmmOptions<T>,
    pub fpg: FpgOptions<T>,
    pub mp: MpOptions<T>,
    pub time_limit: Option<Duration>,
    /// Cap on solved relaxations; checked between rounds.
    pub node_limit: Option<u64>,
    /// Cap on retained warm-start states across the whole queue. Children
    /// created beyond the cap cold-start; bounds are unaffected.
    pub max_warm_states: usize,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            rho: T::one(),
            batch: 8,
            gap_tol: cast(1e-2),
            int_tol: cast(1e-4),
            admm: AdmmOptions::default(),
            fpg: FpgOptions::default(),
            mp: MpOptions::default(),
            time_limit: None,
            node_limit: None,
            max_warm_states: 10_000,
        }
    }
}

/// End-of-round snapshot handed to the progress callback.
#[derive(Clone, Copy, Debug)]
pub struct Progress<T> {
    pub round: usize,
    pub upper: T,
    pub lower: T,
    pub gap: T,
    pub nodes_solved: u64,
    pub open: usize,
}

/// Search events surfaced through [`solve_with`]'s callback.
#[derive(Clone, Debug)]
pub enum SolveEvent<T> {
    /// Bounds snapshot after a batch round.
    Round(Progress<T>),
    /// A node left the tree because its bound cannot beat the incumbent.
    Pruned { fix: Fixations, lower_bound: T },
    /// The incumbent improved.
    Incumbent { objective: T },
}

/// Final certificate and solution.
#[derive(Clone, Debug)]
pub struct SolveReport<T> {
    pub status: SolveStatus,
    /// Objective of the best feasible solution found (always exactly
    /// rescored from its coefficients, never a relaxation value).
    pub best_objective: T,
    pub best_beta: Array1<T>,
    /// Nonzero coordinates of `best_beta`, ascending.
    pub support: Vec<usize>,
    /// Certified lower bound on the optimal objective.
    pub global_lb: T,
    /// `(UB − LB)/UB`, absolute difference when `UB ≤ 0`; exactly 0 on
    /// natural exhaustion.
    pub gap: T,
    /// Relaxations solved (pruned-at-pop nodes are not counted).
    pub nodes_solved: u64,
    pub rounds: usize,
    pub wall_time: Duration,
    /// Echo of the options the solve ran with.
    pub options: SolveOptions<T>,
}

/// One line of a batch-size sweep over the same instance.
#[derive(Clone, Debug)]
pub struct BenchRow<T> {
    pub batch: usize,
    pub nodes_solved: u64,
    pub wall_time: Duration,
    pub objective: T,
    pub gap: T,
    pub status: SolveStatus,
}

/// Pops the `min(k, |open|)` nodes with the smallest bounds, FIFO among ties.
pub fn select_batch<T: Scalar>(open: &mut OpenQueue<T>, k: usize) -> Vec<Node<T>> {
    let take = k.min(open.len());
    let mut nodes = Vec::with_capacity(take);
    for _ in 0..take {
        nodes.push(open.pop().expect("sized by len"));
    }
    nodes
}

/// Picks the free coordinate maximizing `min(ẑ_j, 1 − ẑ_j)` among those more
/// than `int_tol` away from both 0 and 1. Ties break toward larger `|β̂_j|`,
/// then the lower index. Errors with [`Error::NoFractional`] when every free
/// indicator is integral at the given tolerance.
pub fn branch_variable<T: Scalar>(
    result: &RelaxationResult<T>,
    fix: &Fixations,
    int_tol: T,
) -> Result<usize> {
    let mut best: Option<(T, T, usize)> = None;
    for j in 0..result.z_hat.len() {
        if fix.membership(j) != Membership::Free {
            continue;
        }
        let z = result.z_hat[j];
        let frac = z.min(T::one() - z);
        if frac <= int_tol {
            continue;
        }
        let weight = result.beta_hat[j].abs();
        let better = match best {
            None => true,
            Some((bf, bw, _)) => frac > bf || (frac == bf && weight > bw),
        };
        if better {
            best = Some((frac, weight, j));
        }
    }
    best.map(|(_, _, j)| j).ok_or(Error::NoFractional)
}

/// `(UB − LB)/UB`, or the absolute difference in the degenerate `UB ≤ 0`
/// case (only reachable for `y = 0`).
fn relative_gap<T: Scalar>(upper: T, lower: T) -> T {
    if upper > T::zero() {
        (upper - lower) / upper
    } else {
        upper - lower
    }
}

/// [`solve_with`] without cancellation or event reporting.
pub fn solve<T: Scalar>(prob: &ProblemData<T>, opts: &SolveOptions<T>) -> Result<SolveReport<T>> {
    solve_with(prob, opts, None, |_| {})
}

/// Runs branch-and-bound to a certificate.
///
/// The incumbent starts from matching pursuit, the root node carries no
/// fixations and bound −∞, and then batch rounds run as described at module
/// level until the queue empties (status `Optimal`, gap exactly 0), the gap
/// reaches `gap_tol`, or a time/node/cancellation limit fires — limits are
/// checked between rounds, so every reported bound comes from a completed
/// round.
///
/// Incumbents are only ever exactly rescored feasible objectives: relaxation
/// values never become upper bounds, so `best_objective` is always achieved
/// by `best_beta`. A node whose indicators are integral merely to within
/// `int_tol` keeps branching until its bound certifies it; only exactly
/// integral relaxations close a subtree outright.
pub fn solve_with<T: Scalar>(
    prob: &ProblemData<T>,
    opts: &SolveOptions<T>,
    cancel: Option<&AtomicBool>,
    mut on_event: impl FnMut(SolveEvent<T>),
) -> Result<SolveReport<T>> {
    if opts.batch == 0 {
        return Err(Error::InvalidSpec("batch size must be at least 1".into()));
    }
    let start = Instant::now();
    let p = prob.p();
    let pre = build_precomputed(prob, opts.rho)?;
    let prune_scale = T::one() - cast::<T>(1e-12);

    let mut incumbent = run_matching_pursuit(prob, &opts.mp);
    on_event(SolveEvent::Incumbent { objective: incumbent.objective });

    let mut open = OpenQueue::new();
    open.push(Node { id: 0, fix: Fixations::root(), lb: T::neg_infinity(), depth: 0, warm: None });
    let mut next_id: u64 = 1;
    let mut warm_held: usize = 0;
    let mut nodes_solved: u64 = 0;
    let mut rounds: usize = 0;
    let mut global_lb = T::neg_infinity();
    // Every path to a `break` below assigns `gap` first.
    let mut gap;

    let status = loop {
        rounds += 1;
        let threshold = incumbent.objective * prune_scale;

        // Pop up to K nodes; drop those the incumbent already beats.
        let mut nodes = Vec::new();
        for node in select_batch(&mut open, opts.batch) {
            if node.warm.is_some() {
                warm_held -= 1;
            }
            if node.lb >= threshold {
                on_event(SolveEvent::Pruned { fix: node.fix, lower_bound: node.lb });
            } else {
                nodes.push(node);
            }
        }

        // Batched relaxation solve. A popped node's `warm` holds its
        // parent's final iterates; adapt them to this node's fixations here,
        // at pop time, so nodes pruned above never pay for it.
        let mut tasks = Vec::with_capacity(nodes.len());
        for node in &mut nodes {
            let warm = node.warm.take().map(|state| warm_start_child(&state, &node.fix, &pre));
            tasks.push(NodeTask {
                node_id: node.id,
                fix: node.fix.clone(),
                warm,
                parent_lb: node.lb,
            });
        }
        let results = solve_relaxation_batch(AdmmBatch::new(tasks, p), &pre, prob, &opts.admm)?;
        nodes_solved += results.len() as u64;

        // Batched upper bound for every node still alive after its solve.
        let mut alive = Vec::new();
        let mut supports = Vec::new();
        for (k, result) in results.iter().enumerate() {
            if result.lower_bound < threshold {
                alive.push(k);
                supports.push(round_support(&result.z_hat.view(), &nodes[k].fix));
            } else {
                on_event(SolveEvent::Pruned {
                    fix: nodes[k].fix.clone(),
                    lower_bound: result.lower_bound,
                });
            }
        }
        let candidates = if supports.is_empty() {
            Vec::new()
        } else {
            let mut batch = SupportBatch::from_supports(supports, prob);
            batch.warm_rows_from(&incumbent.beta.view());
            fpg_solve_batch(&mut batch, prob, &opts.fpg)
        };

        // Sequential pass: incumbent updates, pruning, branching. Later
        // nodes in the batch see upper bounds improved by earlier ones.
        for (slot, &k) in alive.iter().enumerate() {
            let result = &results[k];
            let node = &nodes[k];
            let candidate = &candidates[slot];
            if candidate.objective < incumbent.objective {
                incumbent = candidate.clone();
                on_event(SolveEvent::Incumbent { objective: incumbent.objective });
            }
            if result.lower_bound >= incumbent.objective * prune_scale {
                on_event(SolveEvent::Pruned {
                    fix: node.fix.clone(),
                    lower_bound: result.lower_bound,
                });
                continue;
            }
            let branch = match branch_variable(result, &node.fix, opts.int_tol) {
                Ok(j) => Some(j),
                // Integral at int_tol but not certified by the bound check
                // above: closing now could lose up to the node's own duality
                // gap, so keep splitting while any strictly fractional
                // coordinate remains.
                Err(Error::NoFractional) => match branch_variable(result, &node.fix, T::zero()) {
                    Ok(j) => Some(j),
                    // Exactly integral: the relaxation picked a support and
                    // its polished candidate was just absorbed; the subtree
                    // is resolved.
                    Err(Error::NoFractional) => None,
                    Err(err) => return Err(err),
                },
                Err(err) => return Err(err),
            };
            if let Some(j) = branch {
                for fix in [node.fix.with_zero(j), node.fix.with_one(j)] {
                    let warm = if warm_held < opts.max_warm_states {
                        warm_held += 1;
                        Some(result.state.clone())
                    } else {
                        None
                    };
                    open.push(Node {
                        id: next_id,
                        fix,
                        lb: result.lower_bound,
                        depth: node.depth + 1,
                        warm,
                    });
                    next_id += 1;
                }
            }
        }

        // The queue minimum bounds every open subtree, hence the optimum —
        // unless the incumbent is already at least as good as everything
        // open, in which case the incumbent value itself is the bound.
        let queue_min = open.min_lb().unwrap_or(T::infinity());
        global_lb = global_lb.max(queue_min.min(incumbent.objective));
        gap = relative_gap(incumbent.objective, global_lb);
        on_event(SolveEvent::Round(Progress {
            round: rounds,
            upper: incumbent.objective,
            lower: global_lb,
            gap,
            nodes_solved,
            open: open.len(),
        }));

        if open.is_empty() {
            break SolveStatus::Optimal;
        }
        if gap <= opts.gap_tol {
            break SolveStatus::GapReached;
        }
        if cancel.is_some_and(|flag| flag.load(Ordering::Relaxed)) {
            break SolveStatus::Cancelled;
        }
        if opts.time_limit.is_some_and(|limit| start.elapsed() >= limit) {
            break SolveStatus::TimeLimit;
        }
        if opts.node_limit.is_some_and(|limit| nodes_solved >= limit) {
            break SolveStatus::NodeLimit;
        }
    };

    Ok(SolveReport {
        status,
        best_objective: incumbent.objective,
        best_beta: incumbent.beta,
        support: incumbent.support,
        global_lb,
        gap,
        nodes_solved,
        rounds,
        wall_time: start.elapsed(),
        options: opts.clone(),
    })
}

/// Solves the same instance once per batch size and tabulates the runs.
pub fn bench_batch_sizes<T: Scalar>(
    prob: &ProblemData<T>,
    opts: &SolveOptions<T>,
    batches: &[usize],
) -> Result<Vec<BenchRow<T>>> {
    let mut rows = Vec::with_capacity(batches.len());
    for &batch in batches {
        let mut run_opts = opts.clone();
        run_opts.batch = batch;
        let report = solve(prob, &run_opts)?;
        rows.push(BenchRow {
            batch,
            nodes_solved: report.nodes_solved,
            wall_time: report.wall_time,
            objective: report.best_objective,
            gap: report.gap,
            status: report.status,
        });
    }
    Ok(rows)
}

//! Branch-and-bound MILP solver over LP relaxations with lazy convex-guard
//! cuts; the engine behind every model in the repo.
//!
//! Nodes share a single simplex tableau: moving to a node applies its binary
//! fixings as bound changes and dual-reoptimizes from the current basis.
//! Conic guards (norm balls, quadratic forms) never enter the LP directly —
//! they are enforced by supporting-hyperplane cuts separated at LP optima and
//! at candidate incumbents.

mod simplex;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::rc::Rc;
use std::time::Instant;

pub use simplex::{LpModel, LpStatus, Simplex};

use crate::milp::{ConicGuard, MilpModel, Sense, VarKind, VarRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BranchRule {
    MostFractional,
    PseudoCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum NodeOrder {
    /// Best-bound with an initial depth-first dive to find an incumbent fast.
    BestBound,
    /// Pure depth-first search.
    DepthFirstDive,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SolveOptions {
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    pub rel_gap_target: f64,
    pub node_limit: usize,
    pub branch_rule: BranchRule,
    pub node_order: NodeOrder,
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    pub cut_violation_tol: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            time_limit: 600.0,
            rel_gap_target: 1e-4,
            node_limit: 10_000_000,
            branch_rule: BranchRule::PseudoCost,
            node_order: NodeOrder::BestBound,
            feasibility_tol: 1e-7,
            integrality_tol: 1e-6,
            cut_violation_tol: 1e-6,
            seed: 0,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> bool {
        self.time_limit > 0.0
            && self.rel_gap_target >= 0.0
            && self.feasibility_tol > 0.0
            && self.integrality_tol > 0.0
            && self.cut_violation_tol > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// A limit (time/nodes) was reached; an incumbent may or may not exist.
    FeasibleAtLimit,
    Infeasible,
    Unbounded,
    /// The LP engine broke down; results are not trustworthy.
    NumericalLimit,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub incumbent: Option<Vec<f64>>,
    pub objective: f64,
    pub best_bound: f64,
    pub rel_gap: f64,
    pub nodes: usize,
    pub wall_time: f64,
    pub cuts_added: usize,
}

impl SolveResult {
    fn closed(status: SolveStatus, bound: f64) -> SolveResult {
        SolveResult {
            status,
            incumbent: None,
            objective: f64::INFINITY,
            best_bound: bound,
            rel_gap: f64::INFINITY,
            nodes: 0,
            wall_time: 0.0,
            cuts_added: 0,
        }
    }
}

/// A supporting-hyperplane cut `coeffs . x <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Emits one cut per guard violated by more than `tol` at `x`: the gradient
/// linearization of the convex guard at the current point.
pub fn separate_conic(x: &[f64], guards: &[ConicGuard], tol: f64) -> Vec<Cut> {
    let mut cuts = Vec::new();
    for g in guards {
        match g {
            ConicGuard::NormBall { vars, kappa } => {
                let norm: f64 = vars.iter().map(|&j| x[j] * x[j]).sum::<f64>().sqrt();
                if norm > kappa + tol {
                    cuts.push(Cut {
                        coeffs: vars.iter().map(|&j| (j, x[j] / norm)).collect(),
                        rhs: *kappa,
                    });
                }
            }
            ConicGuard::QuadForm { vars, matrix, kappa } => {
                let n = vars.len();
                let mut mx = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        mx[i] += matrix[i * n + j] * x[vars[j]];
                    }
                }
                let quad: f64 = (0..n).map(|i| mx[i] * x[vars[i]]).sum();
                let s = quad.max(0.0).sqrt();
                if s > kappa + tol {
                    // (Mx*)'x <= kappa * sqrt(x*'Mx*) by Cauchy-Schwarz in the
                    // M-seminorm; separates x* since (Mx*)'x* = s^2 > kappa*s
                    cuts.push(Cut {
                        coeffs: (0..n).map(|i| (vars[i], mx[i])).collect(),
                        rhs: kappa * s,
                    });
                }
            }
            ConicGuard::SqNormLeVar { vars, bound_var } => {
                let sq: f64 = vars.iter().map(|&j| x[j] * x[j]).sum();
                if sq - x[*bound_var] > tol {
                    // tangent of ||v||^2 - theta <= 0 at x*
                    let mut coeffs: Vec<(usize, f64)> =
                        vars.iter().map(|&j| (j, 2.0 * x[j])).collect();
                    coeffs.push((*bound_var, -1.0));
                    cuts.push(Cut { coeffs, rhs: sq });
                }
            }
        }
    }
    cuts
}

/// Checks a full assignment against the original model: bounds, linear rows,
/// integrality of binaries, and conic guards. Independent of the LP engine.
pub fn check_feasible(
    model: &MilpModel,
    x: &[f64],
    feas_tol: f64,
    int_tol: f64,
    cut_tol: f64,
) -> bool {
    if x.len() != model.num_vars() {
        return false;
    }
    for (j, v) in model.variables.iter().enumerate() {
        if x[j] < v.lb - feas_tol || x[j] > v.ub + feas_tol {
            return false;
        }
        if v.kind == VarKind::Binary && (x[j] - x[j].round()).abs() > int_tol {
            return false;
        }
    }
    for con in &model.constraints {
        let act: f64 = con.coeffs.iter().map(|&(j, c)| c * x[j]).sum();
        let scale = 1.0 + con.coeffs.iter().map(|&(j, c)| (c * x[j]).abs()).sum::<f64>();
        let tol = feas_tol * scale;
        let ok = match con.sense {
            Sense::Le => act <= con.rhs + tol,
            Sense::Ge => act >= con.rhs - tol,
            Sense::Eq => (act - con.rhs).abs() <= tol,
        };
        if !ok {
            return false;
        }
    }
    separate_conic(x, &model.guards, cut_tol).is_empty()
}

/// Result of a pure LP solve of the continuous relaxation.
#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
}

fn to_lp(model: &MilpModel) -> LpModel {
    let n = model.num_vars();
    let mut cols = vec![Vec::new(); n];
    let mut row_lb = Vec::with_capacity(model.num_constraints());
    let mut row_ub = Vec::with_capacity(model.num_constraints());
    for (i, con) in model.constraints.iter().enumerate() {
        for &(j, c) in &con.coeffs {
            cols[j].push((i, c));
        }
        let (lo, hi) = match con.sense {
            Sense::Le => (f64::NEG_INFINITY, con.rhs),
            Sense::Ge => (con.rhs, f64::INFINITY),
            Sense::Eq => (con.rhs, con.rhs),
        };
        row_lb.push(lo);
        row_ub.push(hi);
    }
    let mut obj = vec![0.0; n];
    for &(j, c) in &model.objective {
        obj[j] += c;
    }
    LpModel {
        cols,
        obj,
        lb: model.variables.iter().map(|v| v.lb).collect(),
        ub: model.variables.iter().map(|v| v.ub).collect(),
        row_lb,
        row_ub,
    }
}

/// Solves the continuous relaxation (integrality dropped, conic guards
/// enforced by lazy cuts). Returns primal values, objective, and row duals
/// for the original rows.
pub fn lp_solve(model: &MilpModel, feas_tol: f64, cut_tol: f64) -> LpResult {
    let lp = to_lp(model);
    let nrows = model.num_constraints();
    let mut sx = Simplex::new(&lp, feas_tol);
    let mut status = sx.solve_primal();
    let mut rounds = 0;
    while status == LpStatus::Optimal && rounds < 500 {
        let cuts = separate_conic(sx.values(), &model.guards, cut_tol);
        if cuts.is_empty() {
            break;
        }
        for cut in &cuts {
            sx.add_row(&cut.coeffs, f64::NEG_INFINITY, cut.rhs);
        }
        status = sx.reoptimize();
        rounds += 1;
    }
    LpResult {
        status,
        values: sx.values().to_vec(),
        objective: sx.objective(),
        duals: sx.duals()[..nrows].to_vec(),
    }
}

/// Branching priority groups: cell-assignment binaries first, then class
/// binaries, then everything else.
fn branch_category(role: &VarRole) -> u8 {
    match role {
        VarRole::PointCell { .. } => 0,
        VarRole::CellClass { .. } | VarRole::PointClass { .. } => 1,
        _ => 2,
    }
}

#[derive(Debug)]
struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    /// Binary fixings along the path from the root.
    fixes: Rc<Vec<(usize, f64)>>,
    /// Bookkeeping for pseudo-cost updates.
    branch_var: Option<usize>,
    branch_up: bool,
    parent_obj: f64,
    parent_frac: f64,
}

struct HeapNode(Node);

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: invert so the smallest bound pops first,
        // ties broken by the oldest node id for determinism
        other
            .0
            .bound
            .partial_cmp(&self.0.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

struct PseudoCosts {
    up_sum: Vec<f64>,
    up_count: Vec<usize>,
    down_sum: Vec<f64>,
    down_count: Vec<usize>,
}

impl PseudoCosts {
    fn new(n: usize) -> Self {
        PseudoCosts {
            up_sum: vec![0.0; n],
            up_count: vec![0; n],
            down_sum: vec![0.0; n],
            down_count: vec![0; n],
        }
    }

    fn record(&mut self, var: usize, up: bool, degradation: f64, frac: f64) {
        let per_unit = degradation.max(0.0) / frac.max(1e-6);
        if up {
            self.up_sum[var] += per_unit;
            self.up_count[var] += 1;
        } else {
            self.down_sum[var] += per_unit;
            self.down_count[var] += 1;
        }
    }

    fn score(&self, var: usize, frac: f64) -> Option<f64> {
        if self.up_count[var] == 0 || self.down_count[var] == 0 {
            return None;
        }
        let up = self.up_sum[var] / self.up_count[var] as f64;
        let down = self.down_sum[var] / self.down_count[var] as f64;
        Some((up * frac).max(1e-9) * (down * (1.0 - frac)).max(1e-9))
    }
}

/// GUB groups: equality rows `sum of binaries = 1`, used by the rounding
/// heuristic to produce structurally consistent candidates.
fn gub_groups(model: &MilpModel) -> Vec<Vec<usize>> {
    model
        .constraints
        .iter()
        .filter(|c| {
            c.sense == Sense::Eq
                && c.rhs == 1.0
                && c.coeffs.len() > 1
                && c.coeffs
                    .iter()
                    .all(|&(j, v)| v == 1.0 && model.variables[j].kind == VarKind::Binary)
        })
        .map(|c| c.coeffs.iter().map(|&(j, _)| j).collect())
        .collect()
}

/// Records normalized guard cuts already sitting in the tableau so the
/// separation loops do not pile near-identical rows onto the shared basis
/// (every extra row slows each later pivot and refactorization).
#[derive(Default)]
struct CutPool {
    dirs: Vec<(Vec<(usize, f64)>, f64)>,
}

impl CutPool {
    fn len(&self) -> usize {
        self.dirs.len()
    }

    /// Returns true when the cut is new at resolution `tol` and records it.
    fn try_add(&mut self, cut: &Cut, tol: f64) -> bool {
        let norm = cut.coeffs.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return false;
        }
        let dir: Vec<(usize, f64)> = cut.coeffs.iter().map(|&(j, c)| (j, c / norm)).collect();
        let rhs = cut.rhs / norm;
        let duplicate = self.dirs.iter().any(|(prev, prhs)| {
            prev.len() == dir.len()
                && (prhs - rhs).abs() <= tol
                && prev
                    .iter()
                    .zip(&dir)
                    .all(|(&(j1, c1), &(j2, c2))| j1 == j2 && (c1 - c2).abs() <= tol)
        });
        if duplicate {
            return false;
        }
        self.dirs.push((dir, rhs));
        true
    }
}

fn mirror_add_row(lp: &mut LpModel, cut: &Cut) {
    let row = lp.row_lb.len();
    for &(j, c) in &cut.coeffs {
        lp.cols[j].push((row, c));
    }
    lp.row_lb.push(f64::NEG_INFINITY);
    lp.row_ub.push(cut.rhs);
}

/// Fractional LP optima stop receiving guard cuts once the pool holds this
/// many rows; integral points are always separated so incumbents stay exact.
const FRACTIONAL_CUT_BUDGET: usize = 192;
/// Separation rounds per node at fractional points.
const FRACTIONAL_CUT_ROUNDS: usize = 3;

pub fn solve(model: &MilpModel, options: &SolveOptions) -> SolveResult {
    solve_with_incumbent(model, options, None, None)
}

/// Full solve with an optional warm-start incumbent (verified before use)
/// and an optional plain-text trace (one line per node).
pub fn solve_with_incumbent(
    model: &MilpModel,
    options: &SolveOptions,
    warm_start: Option<&[f64]>,
    mut trace: Option<&mut dyn Write>,
) -> SolveResult {
    assert!(options.validate(), "invalid solve options");
    debug_assert!(model.validate().is_ok());
    let start = Instant::now();
    // `lp` mirrors the tableau's row set (cut rows included, bounds at root)
    // so a numerically distressed tableau can be rebuilt from scratch
    let mut lp = to_lp(model);
    // a single LP can pivot for minutes on big models, so the wall clock is
    // enforced inside the tableau as well, not just between node solves
    let deadline = if options.time_limit.is_finite() {
        start.checked_add(std::time::Duration::from_secs_f64(options.time_limit.min(1e12)))
    } else {
        None
    };
    let mut sx = Simplex::new(&lp, options.feasibility_tol);
    sx.set_deadline(deadline);
    let binaries: Vec<usize> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| j)
        .collect();
    let categories: Vec<u8> = model.variables.iter().map(|v| branch_category(&v.role)).collect();
    let root_bounds: Vec<(f64, f64)> = model.variables.iter().map(|v| (v.lb, v.ub)).collect();
    let groups = gub_groups(model);
    let mut cuts_added = 0usize;
    let mut pool = CutPool::default();
    // debugging aid: cold-verify every node LP against a fresh simplex
    let cold_check = std::env::var_os("HYPARR_COLD_CHECK").is_some();
    let mut dropped_nodes = 0usize;

    // root relaxation with lazy guard separation
    let mut status = sx.solve_primal();
    loop {
        match status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return SolveResult {
                    wall_time: start.elapsed().as_secs_f64(),
                    ..SolveResult::closed(SolveStatus::Infeasible, f64::INFINITY)
                }
            }
            LpStatus::Unbounded => {
                return SolveResult {
                    wall_time: start.elapsed().as_secs_f64(),
                    ..SolveResult::closed(SolveStatus::Unbounded, f64::NEG_INFINITY)
                }
            }
            LpStatus::NumericalLimit => {
                return SolveResult {
                    wall_time: start.elapsed().as_secs_f64(),
                    ..SolveResult::closed(SolveStatus::NumericalLimit, f64::NEG_INFINITY)
                }
            }
            LpStatus::TimeLimit => {
                // ran out of time inside the root relaxation: no incumbent,
                // no trustworthy bound
                return SolveResult {
                    wall_time: start.elapsed().as_secs_f64(),
                    rel_gap: f64::INFINITY,
                    ..SolveResult::closed(SolveStatus::FeasibleAtLimit, f64::NEG_INFINITY)
                };
            }
        }
        let cuts = separate_conic(sx.values(), &model.guards, options.cut_violation_tol);
        let mut added = 0;
        for cut in &cuts {
            if pool.try_add(cut, 1e-9) {
                sx.add_row(&cut.coeffs, f64::NEG_INFINITY, cut.rhs);
                mirror_add_row(&mut lp, cut);
                added += 1;
                cuts_added += 1;
            }
        }
        if added == 0 || start.elapsed().as_secs_f64() > options.time_limit {
            // stopping with violated guards is sound: dropping cuts only
            // relaxes the problem, so the root objective stays a valid bound
            break;
        }
        status = sx.reoptimize();
    }
    let root_obj = sx.objective();

    let mut incumbent: Option<Vec<f64>> = None;
    let mut incumbent_obj = f64::INFINITY;
    if let Some(x0) = warm_start {
        if check_feasible(
            model,
            x0,
            options.feasibility_tol,
            options.integrality_tol,
            options.cut_violation_tol,
        ) {
            incumbent_obj = model.objective_value(x0);
            incumbent = Some(x0.to_vec());
        }
    }

    let mut pseudo = PseudoCosts::new(model.num_vars());
    let mut heap: BinaryHeap<HeapNode> = BinaryHeap::new();
    let mut dive: Vec<Node> = Vec::new();
    let mut next_id = 0usize;
    let mut nodes_processed = 0usize;
    let mut diving = true;
    let mut numerical_trouble = false;

    let root = Node {
        id: next_id,
        depth: 0,
        bound: root_obj,
        fixes: Rc::new(Vec::new()),
        branch_var: None,
        branch_up: false,
        parent_obj: root_obj,
        parent_frac: 0.0,
    };
    next_id += 1;
    dive.push(root);

    let mut current_fixes: Rc<Vec<(usize, f64)>> = Rc::new(Vec::new());
    let mut limit_hit = false;

    macro_rules! global_bound {
        () => {{
            let mut b = incumbent_obj;
            for n in heap.iter() {
                b = b.min(n.0.bound);
            }
            for n in dive.iter() {
                b = b.min(n.bound);
            }
            b
        }};
    }

    'search: while let Some(node) = if diving && !dive.is_empty() {
        dive.pop()
    } else {
        if diving {
            diving = matches!(options.node_order, NodeOrder::DepthFirstDive);
        }
        if !dive.is_empty() {
            // move remaining dive nodes into the best-bound queue
            for n in dive.drain(..) {
                heap.push(HeapNode(n));
            }
        }
        heap.pop().map(|h| h.0)
    } {
        if start.elapsed().as_secs_f64() > options.time_limit
            || nodes_processed >= options.node_limit
        {
            heap.push(HeapNode(node));
            limit_hit = true;
            break 'search;
        }
        // bound-based pruning before touching the tableau
        let cutoff = incumbent_obj - 1e-9 * (1.0 + incumbent_obj.abs());
        if node.bound >= cutoff {
            continue;
        }
        if incumbent.is_some() {
            let gb = global_bound!().min(node.bound);
            if (incumbent_obj - gb) / incumbent_obj.abs().max(1.0) <= options.rel_gap_target {
                heap.push(HeapNode(node));
                break 'search;
            }
        }

        // move the tableau to this node's subproblem
        for &(j, _) in current_fixes.iter() {
            let (lb, ub) = root_bounds[j];
            sx.set_col_bounds(j, lb, ub);
        }
        for &(j, v) in node.fixes.iter() {
            sx.set_col_bounds(j, v, v);
        }
        current_fixes = Rc::clone(&node.fixes);
        sx.refresh_after_bound_changes();
        let mut st = sx.reoptimize();
        nodes_processed += 1;

        if cold_check {
            let mut dbg = lp.clone();
            for &(j, v) in node.fixes.iter() {
                dbg.lb[j] = v;
                dbg.ub[j] = v;
            }
            let mut cold = Simplex::new(&dbg, options.feasibility_tol);
            let cst = cold.solve_primal();
            let agree = match (st, cst) {
                (LpStatus::Optimal, LpStatus::Optimal) => {
                    (sx.objective() - cold.objective()).abs()
                        <= 1e-6 * (1.0 + cold.objective().abs())
                }
                (a, b) => a == b,
            };
            if !agree {
                eprintln!(
                    "COLD MISMATCH node {} depth {}: warm {:?} {:.6} vs cold {:?} {:.6}",
                    node.id,
                    node.depth,
                    st,
                    if st == LpStatus::Optimal { sx.objective() } else { f64::NAN },
                    cst,
                    if cst == LpStatus::Optimal { cold.objective() } else { f64::NAN },
                );
            }
        }

        // pseudo-cost bookkeeping from the parent's branching decision
        if let (Some(var), LpStatus::Optimal) = (node.branch_var, st) {
            pseudo.record(
                var,
                node.branch_up,
                sx.objective() - node.parent_obj,
                if node.branch_up {
                    1.0 - node.parent_frac
                } else {
                    node.parent_frac
                },
            );
        }

        let mut cut_rounds = 0usize;
        let mut rebuilt = false;
        loop {
            // guard-separation rounds and cold rebuilds can each trigger
            // further LP solves; honor the wall clock between them
            if start.elapsed().as_secs_f64() > options.time_limit {
                heap.push(HeapNode(node));
                limit_hit = true;
                break 'search;
            }
            match st {
                LpStatus::Infeasible => {
                    if let Some(t) = trace.as_deref_mut() {
                        let _ = writeln!(t, "node {} depth {} pruned infeasible", node.id, node.depth);
                    }
                    continue 'search;
                }
                LpStatus::Unbounded | LpStatus::NumericalLimit => {
                    // warm basis in distress: rebuild the tableau cold once
                    // before giving up on the node (the models are bounded,
                    // so either outcome here is numerical)
                    if !rebuilt {
                        rebuilt = true;
                        let mut fresh = lp.clone();
                        for &(j, v) in node.fixes.iter() {
                            fresh.lb[j] = v;
                            fresh.ub[j] = v;
                        }
                        sx = Simplex::new(&fresh, options.feasibility_tol);
                        sx.set_deadline(deadline);
                        st = sx.solve_primal();
                        continue;
                    }
                    numerical_trouble = true;
                    dropped_nodes += 1;
                    continue 'search;
                }
                LpStatus::TimeLimit => {
                    // the node LP is incomplete; requeue it so the final
                    // bound stays valid and report the time limit honestly
                    heap.push(HeapNode(node));
                    limit_hit = true;
                    break 'search;
                }
                LpStatus::Optimal => {}
            }
            let obj = sx.objective();
            if obj >= incumbent_obj - 1e-9 * (1.0 + incumbent_obj.abs()) {
                if let Some(t) = trace.as_deref_mut() {
                    let _ = writeln!(
                        t,
                        "node {} depth {} bound {obj:.6} pruned by bound",
                        node.id, node.depth
                    );
                }
                continue 'search;
            }
            // integrality check
            let x = sx.values().to_vec();
            let mut best_frac: Option<(u8, f64, usize)> = None; // (category, score, var)
            for &j in &binaries {
                let f = x[j] - x[j].floor();
                let dist = f.min(1.0 - f);
                if dist > options.integrality_tol {
                    let frac = x[j] - x[j].floor();
                    let score = match options.branch_rule {
                        BranchRule::MostFractional => dist,
                        BranchRule::PseudoCost => pseudo.score(j, frac).unwrap_or(dist),
                    };
                    let cat = categories[j];
                    let better = match best_frac {
                        None => true,
                        Some((bc, bs, _)) => cat < bc || (cat == bc && score > bs + 1e-12),
                    };
                    if better {
                        best_frac = Some((cat, score, j));
                    }
                }
            }

            // guard separation: integral points must satisfy every guard
            // before becoming incumbents; fractional points only receive a
            // bounded number of cuts to keep the shared tableau small
            let integral = best_frac.is_none();
            if integral
                || (cut_rounds < FRACTIONAL_CUT_ROUNDS && pool.len() < FRACTIONAL_CUT_BUDGET)
            {
                let cuts = separate_conic(&x, &model.guards, options.cut_violation_tol);
                let mut added = 0;
                for cut in &cuts {
                    if pool.try_add(cut, 1e-9) || integral {
                        sx.add_row(&cut.coeffs, f64::NEG_INFINITY, cut.rhs);
                        mirror_add_row(&mut lp, cut);
                        added += 1;
                        cuts_added += 1;
                    }
                }
                if added > 0 {
                    cut_rounds += 1;
                    st = sx.reoptimize();
                    continue;
                }
            }

            match best_frac {
                None => {
                    // integral LP optimum: candidate incumbent
                    let mut cand = x.to_vec();
                    for &j in &binaries {
                        cand[j] = cand[j].round();
                    }
                    if check_feasible(
                        model,
                        &cand,
                        options.feasibility_tol * 10.0,
                        options.integrality_tol,
                        options.cut_violation_tol,
                    ) {
                        let cobj = model.objective_value(&cand);
                        if cobj < incumbent_obj {
                            incumbent_obj = cobj;
                            incumbent = Some(cand);
                            diving = matches!(options.node_order, NodeOrder::DepthFirstDive);
                            if let Some(t) = trace.as_deref_mut() {
                                let _ = writeln!(
                                    t,
                                    "node {} depth {} incumbent {cobj:.6}",
                                    node.id, node.depth
                                );
                            }
                        }
                    } else {
                        numerical_trouble = true;
                        dropped_nodes += 1;
                    }
                    continue 'search;
                }
                Some((_, _, var)) => {
                    let frac = x[var] - x[var].floor();
                    let mut up_fixes = (*node.fixes).clone();
                    up_fixes.push((var, 1.0));
                    let mut down_fixes = (*node.fixes).clone();
                    down_fixes.push((var, 0.0));
                    let up = Node {
                        id: next_id,
                        depth: node.depth + 1,
                        bound: obj,
                        fixes: Rc::new(up_fixes),
                        branch_var: Some(var),
                        branch_up: true,
                        parent_obj: obj,
                        parent_frac: frac,
                    };
                    let down = Node {
                        id: next_id + 1,
                        depth: node.depth + 1,
                        bound: obj,
                        fixes: Rc::new(down_fixes),
                        branch_var: Some(var),
                        branch_up: false,
                        parent_obj: obj,
                        parent_frac: frac,
                    };
                    next_id += 2;
                    if let Some(t) = trace.as_deref_mut() {
                        let _ = writeln!(
                            t,
                            "node {} depth {} bound {obj:.6} branch x{var} frac {frac:.4}",
                            node.id, node.depth
                        );
                    }
                    if diving {
                        // explore the more promising side first: the branch
                        // closer to the LP value goes on top of the stack
                        if frac >= 0.5 {
                            dive.push(down);
                            dive.push(up);
                        } else {
                            dive.push(up);
                            dive.push(down);
                        }
                    } else {
                        heap.push(HeapNode(up));
                        heap.push(HeapNode(down));
                    }
                    // periodic GUB rounding heuristic
                    if nodes_processed % 25 == 1 && !groups.is_empty() {
                        if let Some((hx, hobj)) = try_rounding(
                            model, &mut sx, &groups, &binaries, &root_bounds, &current_fixes,
                            options, &mut cuts_added, &mut pool, &mut lp,
                        ) {
                            if hobj < incumbent_obj {
                                incumbent_obj = hobj;
                                incumbent = Some(hx);
                                if let Some(t) = trace.as_deref_mut() {
                                    let _ = writeln!(
                                        t,
                                        "node {} heuristic incumbent {hobj:.6}",
                                        node.id
                                    );
                                }
                            }
                        }
                    }
                    continue 'search;
                }
            }
        }
    }

    let wall_time = start.elapsed().as_secs_f64();
    let best_bound = if limit_hit || !heap.is_empty() || !dive.is_empty() {
        global_bound!()
    } else {
        incumbent_obj
    };
    let (status, objective, rel_gap) = match &incumbent {
        Some(_) => {
            let gap = ((incumbent_obj - best_bound) / incumbent_obj.abs().max(1.0)).max(0.0);
            let st = if gap <= options.rel_gap_target && dropped_nodes == 0 {
                SolveStatus::Optimal
            } else if dropped_nodes > 0 && !limit_hit {
                // subtrees were abandoned for numerical reasons: the bound
                // claim is untrustworthy, so optimality is never reported
                SolveStatus::NumericalLimit
            } else if numerical_trouble && !limit_hit && heap.is_empty() && dive.is_empty() {
                SolveStatus::NumericalLimit
            } else {
                SolveStatus::FeasibleAtLimit
            };
            (st, incumbent_obj, gap)
        }
        None => {
            if limit_hit {
                (SolveStatus::FeasibleAtLimit, f64::INFINITY, f64::INFINITY)
            } else if numerical_trouble {
                (SolveStatus::NumericalLimit, f64::INFINITY, f64::INFINITY)
            } else {
                (SolveStatus::Infeasible, f64::INFINITY, f64::INFINITY)
            }
        }
    };
    SolveResult {
        status,
        incumbent,
        objective,
        best_bound: best_bound.min(objective),
        rel_gap,
        nodes: nodes_processed,
        wall_time,
        cuts_added,
    }
}

/// Rounds the current LP point GUB-group by GUB-group (argmax within each
/// group), fixes all binaries, and LP-completes the continuous part. Restores
/// the node's bounds before returning.
#[allow(clippy::too_many_arguments)]
fn try_rounding(
    model: &MilpModel,
    sx: &mut Simplex,
    groups: &[Vec<usize>],
    binaries: &[usize],
    root_bounds: &[(f64, f64)],
    current_fixes: &Rc<Vec<(usize, f64)>>,
    options: &SolveOptions,
    cuts_added: &mut usize,
    pool: &mut CutPool,
    lp: &mut LpModel,
) -> Option<(Vec<f64>, f64)> {
    let x = sx.values().to_vec();
    let mut target = vec![f64::NAN; model.num_vars()];
    for g in groups {
        let mut best = g[0];
        for &j in g.iter().skip(1) {
            if x[j] > x[best] {
                best = j;
            }
        }
        for &j in g {
            target[j] = if j == best { 1.0 } else { 0.0 };
        }
    }
    for &j in binaries {
        if target[j].is_nan() {
            target[j] = x[j].round();
        }
    }
    // respect existing fixings and root-fixed binaries
    for &(j, v) in current_fixes.iter() {
        target[j] = v;
    }
    for &j in binaries {
        let (lb, ub) = root_bounds[j];
        target[j] = target[j].clamp(lb, ub);
        sx.set_col_bounds(j, target[j], target[j]);
    }
    sx.refresh_after_bound_changes();
    let mut st = sx.reoptimize();
    let mut rounds = 0;
    while st == LpStatus::Optimal && rounds < 50 {
        let cuts = separate_conic(sx.values(), &model.guards, options.cut_violation_tol);
        let mut added = 0;
        for cut in &cuts {
            if pool.try_add(cut, 1e-9) {
                sx.add_row(&cut.coeffs, f64::NEG_INFINITY, cut.rhs);
                mirror_add_row(lp, cut);
                added += 1;
                *cuts_added += 1;
            }
        }
        if added == 0 {
            break;
        }
        st = sx.reoptimize();
        rounds += 1;
    }
    let result = if st == LpStatus::Optimal {
        let mut cand = sx.values().to_vec();
        for &j in binaries {
            cand[j] = cand[j].round();
        }
        if check_feasible(
            model,
            &cand,
            options.feasibility_tol * 10.0,
            options.integrality_tol,
            options.cut_violation_tol,
        ) {
            let obj = model.objective_value(&cand);
            Some((cand, obj))
        } else {
            None
        }
    } else {
        None
    };
    // restore the node's bound state
    for &j in binaries {
        let (lb, ub) = root_bounds[j];
        sx.set_col_bounds(j, lb, ub);
    }
    for &(j, v) in current_fixes.iter() {
        sx.set_col_bounds(j, v, v);
    }
    sx.refresh_after_bound_changes();
    let _ = sx.reoptimize();
    result
}

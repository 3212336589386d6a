//! Bounded-variable revised simplex with a dense basis inverse.
//!
//! The tableau supports the operations branch-and-bound needs: cold primal
//! solves (composite phase 1 + phase 2), bound changes on structural
//! variables, appended cut rows, and dual-simplex reoptimization that reuses
//! the current basis. Row `i` of the model is handled as `a_i . x - s_i = 0`
//! with a logical variable `s_i` ranged by the row bounds, so the all-slack
//! basis is always available as a starting point.
//!
//! Everything is deterministic: Dantzig pricing with lowest-index
//! tie-breaking, and a switch to Bland's rule after a stretch of degenerate
//! pivots.

/// A continuous model snapshot: structural columns with bounds plus ranged
/// rows. Senses are encoded by the row range (`<= rhs` is `(-inf, rhs]`).
#[derive(Debug, Clone)]
pub struct LpModel {
    /// Structural columns, sparse by row.
    pub cols: Vec<Vec<(usize, f64)>>,
    pub obj: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub row_lb: Vec<f64>,
    pub row_ub: Vec<f64>,
}

impl LpModel {
    pub fn num_rows(&self) -> usize {
        self.row_lb.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration cap or basis breakdown; the tableau contents are suspect.
    NumericalLimit,
    /// Wall-clock deadline expired mid-solve; the tableau is consistent but
    /// the solve is incomplete, so neither bound nor point may be trusted.
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NonbasicState {
    AtLower,
    AtUpper,
    /// Free variable resting at zero.
    AtZero,
    Basic,
}

const ZERO_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-8;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_SWITCH: usize = 60;

pub struct Simplex {
    nrows: usize,
    /// Structural column count; logical columns follow.
    nstruct: usize,
    cols: Vec<Vec<(usize, f64)>>,
    obj: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    /// Basic column per row.
    basis: Vec<usize>,
    /// Row of a basic column, or `usize::MAX`.
    basis_row: Vec<usize>,
    state: Vec<NonbasicState>,
    x: Vec<f64>,
    /// Dense row-major basis inverse.
    binv: Vec<f64>,
    feas_tol: f64,
    iter_limit: usize,
    /// Wall-clock cutoff, checked every few pivots; long LPs from
    /// branch-and-bound must not overrun the caller's time budget.
    deadline: Option<std::time::Instant>,
    pivots_since_refactor: usize,
    pub iterations: usize,
}

impl Simplex {
    pub fn new(model: &LpModel, feas_tol: f64) -> Simplex {
        let nrows = model.num_rows();
        let nstruct = model.num_cols();
        let total = nstruct + nrows;
        let mut cols = model.cols.clone();
        let mut obj = model.obj.clone();
        let mut lb = model.lb.clone();
        let mut ub = model.ub.clone();
        for i in 0..nrows {
            cols.push(vec![(i, -1.0)]);
            obj.push(0.0);
            lb.push(model.row_lb[i]);
            ub.push(model.row_ub[i]);
        }
        let mut s = Simplex {
            nrows,
            nstruct,
            cols,
            obj,
            lb,
            ub,
            basis: (nstruct..total).collect(),
            basis_row: vec![usize::MAX; total],
            state: vec![NonbasicState::AtLower; total],
            x: vec![0.0; total],
            binv: vec![0.0; nrows * nrows],
            feas_tol,
            iter_limit: 20_000 + 200 * total,
            deadline: None,
            pivots_since_refactor: 0,
            iterations: 0,
        };
        s.reset_to_slack_basis();
        s
    }

    pub fn set_deadline(&mut self, deadline: Option<std::time::Instant>) {
        self.deadline = deadline;
    }

    /// True when a deadline is set and has passed. Sampled every few pivots
    /// so the clock read does not dominate cheap iterations.
    fn deadline_expired(&self) -> bool {
        self.iterations % 128 == 0
            && self
                .deadline
                .is_some_and(|d| std::time::Instant::now() >= d)
    }

    fn reset_to_slack_basis(&mut self) {
        let total = self.cols.len();
        self.basis = (self.nstruct..total).collect();
        self.basis_row = vec![usize::MAX; total];
        for (i, &j) in self.basis.iter().enumerate() {
            self.basis_row[j] = i;
        }
        for j in 0..total {
            self.state[j] = if self.basis_row[j] != usize::MAX {
                NonbasicState::Basic
            } else {
                nearest_bound_state(self.lb[j], self.ub[j])
            };
            self.x[j] = match self.state[j] {
                NonbasicState::AtLower => self.lb[j],
                NonbasicState::AtUpper => self.ub[j],
                _ => 0.0,
            };
        }
        // slack columns are -e_i, so B = -I
        self.binv = vec![0.0; self.nrows * self.nrows];
        for i in 0..self.nrows {
            self.binv[i * self.nrows + i] = -1.0;
        }
        self.pivots_since_refactor = 0;
        self.recompute_basic_values();
    }

    pub fn num_rows(&self) -> usize {
        self.nrows
    }

    pub fn value(&self, j: usize) -> f64 {
        self.x[j]
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.nstruct]
    }

    pub fn objective(&self) -> f64 {
        (0..self.cols.len()).map(|j| self.obj[j] * self.x[j]).sum()
    }

    /// Row duals `y = c_B' B^-1`.
    pub fn duals(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for (i, &bj) in self.basis.iter().enumerate() {
            let c = self.obj[bj];
            if c != 0.0 {
                for k in 0..self.nrows {
                    y[k] += c * self.binv[i * self.nrows + k];
                }
            }
        }
        y
    }

    pub fn col_bounds(&self, j: usize) -> (f64, f64) {
        (self.lb[j], self.ub[j])
    }

    /// Changes structural bounds. Nonbasic variables snap to the moved bound;
    /// call `refresh_after_bound_changes` once all changes are in.
    pub fn set_col_bounds(&mut self, j: usize, lb: f64, ub: f64) {
        debug_assert!(j < self.nstruct);
        self.lb[j] = lb;
        self.ub[j] = ub;
        match self.state[j] {
            NonbasicState::Basic => {}
            _ => {
                self.state[j] = nearest_bound_state_for(self.x[j], lb, ub);
                self.x[j] = match self.state[j] {
                    NonbasicState::AtLower => lb,
                    NonbasicState::AtUpper => ub,
                    _ => 0.0,
                };
            }
        }
    }

    pub fn refresh_after_bound_changes(&mut self) {
        self.recompute_basic_values();
    }

    /// Appends a ranged row and makes its new logical variable basic; the
    /// basis inverse is extended exactly, so the dual solution is preserved.
    pub fn add_row(&mut self, coeffs: &[(usize, f64)], row_lb: f64, row_ub: f64) {
        let n = self.nrows;
        for c in &mut self.cols {
            c.retain(|&(r, _)| r < n); // defensive; rows only grow
        }
        for &(j, v) in coeffs {
            debug_assert!(j < self.nstruct);
            self.cols[j].push((n, v));
        }
        let slack = self.cols.len();
        self.cols.push(vec![(n, -1.0)]);
        self.obj.push(0.0);
        self.lb.push(row_lb);
        self.ub.push(row_ub);
        self.x.push(0.0);
        self.state.push(NonbasicState::Basic);
        self.basis_row.push(n);
        self.basis.push(slack);

        // B_new = [[B, 0], [g_B', -1]]  =>  B_new^-1 = [[B^-1, 0], [g_B' B^-1, -1]]
        let mut gb_binv = vec![0.0; n];
        for &(j, v) in coeffs {
            let row = self.basis_row[j];
            if row != usize::MAX && row < n {
                for k in 0..n {
                    gb_binv[k] += v * self.binv[row * n + k];
                }
            }
        }
        let nn = n + 1;
        let mut binv = vec![0.0; nn * nn];
        for i in 0..n {
            binv[i * nn..i * nn + n].copy_from_slice(&self.binv[i * n..(i + 1) * n]);
        }
        binv[n * nn..n * nn + n].copy_from_slice(&gb_binv);
        binv[n * nn + n] = -1.0;
        self.binv = binv;
        self.nrows = nn;
        self.iter_limit = 20_000 + 200 * self.cols.len();
        // value of the new basic slack = row activity
        let act: f64 = coeffs.iter().map(|&(j, v)| v * self.x[j]).sum();
        self.x[slack] = act;
    }

    fn recompute_basic_values(&mut self) {
        let n = self.nrows;
        let mut r = vec![0.0; n];
        for j in 0..self.cols.len() {
            if self.basis_row[j] != usize::MAX {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                for &(row, v) in &self.cols[j] {
                    r[row] += v * xj;
                }
            }
        }
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += self.binv[i * n + k] * r[k];
            }
            self.x[self.basis[i]] = -acc;
        }
    }

    /// `w = B^-1 A_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let n = self.nrows;
        let mut w = vec![0.0; n];
        for &(row, v) in &self.cols[j] {
            for i in 0..n {
                let b = self.binv[i * n + row];
                if b != 0.0 {
                    w[i] += b * v;
                }
            }
        }
        w
    }

    /// Rebuilds `binv` from the basis by Gauss-Jordan elimination. Returns
    /// false on a singular basis.
    fn refactor(&mut self) -> bool {
        let n = self.nrows;
        let mut m = vec![0.0; n * n];
        for (k, &bj) in self.basis.iter().enumerate() {
            for &(row, v) in &self.cols[bj] {
                m[row * n + k] = v;
            }
        }
        let mut inv = vec![0.0; n * n];
        for i in 0..n {
            inv[i * n + i] = 1.0;
        }
        for col in 0..n {
            let mut piv = col;
            let mut best = m[col * n + col].abs();
            for r in col + 1..n {
                let v = m[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-12 {
                return false;
            }
            if piv != col {
                for k in 0..n {
                    m.swap(col * n + k, piv * n + k);
                    inv.swap(col * n + k, piv * n + k);
                }
            }
            let p = m[col * n + col];
            for k in 0..n {
                m[col * n + k] /= p;
                inv[col * n + k] /= p;
            }
            for r in 0..n {
                if r != col {
                    let f = m[r * n + col];
                    if f != 0.0 {
                        for k in 0..n {
                            m[r * n + k] -= f * m[col * n + k];
                            inv[r * n + k] -= f * inv[col * n + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.pivots_since_refactor = 0;
        true
    }

    /// Replaces basic row `p` by column `q` and applies the eta update.
    fn pivot(&mut self, p: usize, q: usize, w: &[f64]) -> bool {
        let n = self.nrows;
        let wp = w[p];
        if wp.abs() < PIVOT_TOL {
            return false;
        }
        let leaving = self.basis[p];
        self.basis_row[leaving] = usize::MAX;
        self.basis[p] = q;
        self.basis_row[q] = p;
        self.state[q] = NonbasicState::Basic;
        for i in 0..n {
            if i != p {
                let f = w[i] / wp;
                if f != 0.0 {
                    for k in 0..n {
                        self.binv[i * n + k] -= f * self.binv[p * n + k];
                    }
                }
            }
        }
        for k in 0..n {
            self.binv[p * n + k] /= wp;
        }
        self.pivots_since_refactor += 1;
        if self.pivots_since_refactor >= REFACTOR_EVERY {
            if !self.refactor() {
                return false;
            }
            self.recompute_basic_values();
        }
        true
    }

    fn infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .map(|&j| (self.lb[j] - self.x[j]).max(0.0) + (self.x[j] - self.ub[j]).max(0.0))
            .sum()
    }

    /// Cold or warm primal solve: composite phase 1 until basic feasibility,
    /// then phase 2 on the true objective.
    pub fn solve_primal(&mut self) -> LpStatus {
        // the iteration budget is per solve, not per tableau lifetime: a
        // branch-and-bound run reoptimizes the same tableau thousands of times
        self.iterations = 0;
        match self.primal_loop(true) {
            LpStatus::Optimal => {}
            LpStatus::Unbounded => return LpStatus::NumericalLimit, // phase 1 is bounded below
            other => return other,
        }
        if self.infeasibility() > self.feas_tol * (1.0 + self.nrows as f64).sqrt() {
            return LpStatus::Infeasible;
        }
        self.primal_loop(false)
    }

    /// One primal simplex run. In phase 1 the cost is the infeasibility
    /// gradient of the basic variables; termination at zero infeasibility.
    fn primal_loop(&mut self, phase1: bool) -> LpStatus {
        let total = self.cols.len();
        let mut bland = false;
        let mut degenerate_run = 0usize;
        loop {
            self.iterations += 1;
            if self.iterations > self.iter_limit {
                return LpStatus::NumericalLimit;
            }
            if self.deadline_expired() {
                return LpStatus::TimeLimit;
            }
            if phase1 && self.infeasibility() <= self.feas_tol {
                return LpStatus::Optimal;
            }
            // duals for the active cost vector
            let n = self.nrows;
            let mut y = vec![0.0; n];
            for (i, &bj) in self.basis.iter().enumerate() {
                let c = if phase1 {
                    phase1_cost(self.x[bj], self.lb[bj], self.ub[bj], self.feas_tol)
                } else {
                    self.obj[bj]
                };
                if c != 0.0 {
                    for k in 0..n {
                        y[k] += c * self.binv[i * n + k];
                    }
                }
            }
            // price nonbasic columns
            let mut enter: Option<(usize, f64, f64)> = None; // (col, |d|, sigma)
            for j in 0..total {
                if self.basis_row[j] != usize::MAX {
                    continue;
                }
                let cj = if phase1 { 0.0 } else { self.obj[j] };
                let mut d = cj;
                for &(row, v) in &self.cols[j] {
                    d -= y[row] * v;
                }
                let sigma = match self.state[j] {
                    NonbasicState::AtLower if d < -self.dual_tol() => 1.0,
                    NonbasicState::AtUpper if d > self.dual_tol() => -1.0,
                    NonbasicState::AtZero if d.abs() > self.dual_tol() => -d.signum(),
                    _ => continue,
                };
                if bland {
                    enter = Some((j, d.abs(), sigma));
                    break;
                }
                match enter {
                    Some((_, best, _)) if d.abs() <= best => {}
                    _ => enter = Some((j, d.abs(), sigma)),
                }
            }
            let Some((q, _, sigma)) = enter else {
                return LpStatus::Optimal;
            };

            let w = self.ftran(q);
            // ratio test: entering moves by delta >= 0 in direction sigma,
            // basic i moves at rate -sigma*w_i
            let mut delta = self.ub[q] - self.lb[q]; // bound flip limit
            if !matches!(self.state[q], NonbasicState::AtLower | NonbasicState::AtUpper) {
                delta = f64::INFINITY;
            }
            let mut blocking: Option<(usize, f64, f64)> = None; // (row, |w|, target bound)
            for i in 0..n {
                if w[i].abs() < ZERO_TOL {
                    continue;
                }
                let bj = self.basis[i];
                let xv = self.x[bj];
                let (blo, bhi) = if phase1 {
                    phase1_bounds(xv, self.lb[bj], self.ub[bj], self.feas_tol)
                } else {
                    (self.lb[bj], self.ub[bj])
                };
                let step = -sigma * w[i];
                let (limit, target) = if step < 0.0 {
                    if blo == f64::NEG_INFINITY {
                        continue;
                    }
                    (((xv - blo) / -step).max(0.0), blo)
                } else {
                    if bhi == f64::INFINITY {
                        continue;
                    }
                    (((bhi - xv) / step).max(0.0), bhi)
                };
                let replace = match blocking {
                    None => limit < delta - ZERO_TOL,
                    Some((_, bw, _)) => {
                        limit < delta - ZERO_TOL
                            || (limit <= delta + ZERO_TOL && !bland && w[i].abs() > bw)
                    }
                };
                if limit < delta - ZERO_TOL || (replace && limit <= delta + ZERO_TOL) {
                    delta = delta.min(limit);
                    blocking = Some((i, w[i].abs(), target));
                }
            }
            if delta == f64::INFINITY {
                return LpStatus::Unbounded;
            }
            if delta <= ZERO_TOL {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_SWITCH {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            // apply the step
            for i in 0..n {
                if w[i] != 0.0 {
                    let bj = self.basis[i];
                    self.x[bj] -= sigma * delta * w[i];
                }
            }
            self.x[q] += sigma * delta;
            match blocking {
                None => {
                    // bound flip
                    self.state[q] = if sigma > 0.0 {
                        NonbasicState::AtUpper
                    } else {
                        NonbasicState::AtLower
                    };
                    self.x[q] = if sigma > 0.0 { self.ub[q] } else { self.lb[q] };
                }
                Some((p, _, target)) => {
                    let leaving = self.basis[p];
                    if !self.pivot(p, q, &w) {
                        if !self.refactor() {
                            return LpStatus::NumericalLimit;
                        }
                        self.recompute_basic_values();
                        continue;
                    }
                    self.x[leaving] = target;
                    self.state[leaving] = if target == self.lb[leaving] {
                        NonbasicState::AtLower
                    } else if target == self.ub[leaving] {
                        NonbasicState::AtUpper
                    } else {
                        // phase-1 block at a bound of the relaxed interval
                        nearest_bound_state_for(target, self.lb[leaving], self.ub[leaving])
                    };
                }
            }
        }
    }

    fn dual_tol(&self) -> f64 {
        1e-9
    }

    /// Dual-simplex reoptimization from the current (dual-feasible) basis;
    /// falls back to a primal solve if the dual loop stalls.
    pub fn reoptimize(&mut self) -> LpStatus {
        self.iterations = 0;
        match self.dual_loop() {
            DualOutcome::PrimalFeasible => self.primal_loop(false),
            DualOutcome::Infeasible => LpStatus::Infeasible,
            DualOutcome::Stalled => self.solve_primal(),
            DualOutcome::TimeLimit => LpStatus::TimeLimit,
        }
    }

    fn dual_loop(&mut self) -> DualOutcome {
        let total = self.cols.len();
        let n = self.nrows;
        let cap = 20_000 + 50 * total;
        for _ in 0..cap {
            self.iterations += 1;
            if self.deadline_expired() {
                return DualOutcome::TimeLimit;
            }
            // most-violated basic variable leaves
            let mut leave: Option<(usize, f64, bool)> = None; // (row, viol, below)
            for i in 0..n {
                let bj = self.basis[i];
                let below = self.lb[bj] - self.x[bj];
                let above = self.x[bj] - self.ub[bj];
                let (viol, is_below) = if below > above { (below, true) } else { (above, false) };
                if viol > self.feas_tol {
                    match leave {
                        Some((_, best, _)) if viol <= best => {}
                        _ => leave = Some((i, viol, is_below)),
                    }
                }
            }
            let Some((p, _, below)) = leave else {
                return DualOutcome::PrimalFeasible;
            };
            // duals and the pivot row
            let mut y = vec![0.0; n];
            for (i, &bj) in self.basis.iter().enumerate() {
                let c = self.obj[bj];
                if c != 0.0 {
                    for k in 0..n {
                        y[k] += c * self.binv[i * n + k];
                    }
                }
            }
            let rho: Vec<f64> = self.binv[p * n..(p + 1) * n].to_vec();
            // dual ratio test; flip the row sign so we always "increase" x_Bp
            let flip = if below { 1.0 } else { -1.0 };
            let mut enter: Option<(usize, f64, f64)> = None; // (col, ratio, alpha)
            for j in 0..total {
                if self.basis_row[j] != usize::MAX {
                    continue;
                }
                // fixed columns cannot move and never help
                if self.ub[j] - self.lb[j] < ZERO_TOL
                    && !matches!(self.state[j], NonbasicState::AtZero)
                {
                    continue;
                }
                let mut alpha = 0.0;
                for &(row, v) in &self.cols[j] {
                    alpha += rho[row] * v;
                }
                let alpha_f = alpha * flip;
                let mut d = self.obj[j];
                for &(row, v) in &self.cols[j] {
                    d -= y[row] * v;
                }
                let ratio = match self.state[j] {
                    NonbasicState::AtLower if alpha_f < -PIVOT_TOL => d.max(0.0) / -alpha_f,
                    NonbasicState::AtUpper if alpha_f > PIVOT_TOL => (-d).max(0.0) / alpha_f,
                    NonbasicState::AtZero if alpha_f.abs() > PIVOT_TOL => 0.0,
                    _ => continue,
                };
                let better = match enter {
                    None => true,
                    Some((_, best, ba)) => {
                        ratio < best - 1e-12 || (ratio <= best + 1e-12 && alpha.abs() > ba.abs())
                    }
                };
                if better {
                    enter = Some((j, ratio, alpha));
                }
            }
            let Some((q, _, alpha_q)) = enter else {
                return DualOutcome::Infeasible;
            };
            let bp = self.basis[p];
            let target = if below { self.lb[bp] } else { self.ub[bp] };
            let needed = target - self.x[bp]; // change of x_Bp
            let delta_q = needed / -alpha_q; // dx_Bp/dx_q = -alpha_q
            let w = self.ftran(q);
            for i in 0..n {
                if i != p && w[i] != 0.0 {
                    let bj = self.basis[i];
                    self.x[bj] -= w[i] * delta_q;
                }
            }
            // update primal values before the pivot: a refactor inside
            // `pivot` recomputes basic values from the nonbasic point, so the
            // leaving variable must already sit on its target bound
            self.x[q] += delta_q;
            self.x[bp] = target;
            self.state[bp] = if below {
                NonbasicState::AtLower
            } else {
                NonbasicState::AtUpper
            };
            if !self.pivot(p, q, &w) {
                return DualOutcome::Stalled;
            }
        }
        DualOutcome::Stalled
    }
}

enum DualOutcome {
    PrimalFeasible,
    Infeasible,
    Stalled,
    TimeLimit,
}

fn nearest_bound_state(lb: f64, ub: f64) -> NonbasicState {
    if lb.is_finite() {
        NonbasicState::AtLower
    } else if ub.is_finite() {
        NonbasicState::AtUpper
    } else {
        NonbasicState::AtZero
    }
}

fn nearest_bound_state_for(x: f64, lb: f64, ub: f64) -> NonbasicState {
    match (lb.is_finite(), ub.is_finite()) {
        (false, false) => NonbasicState::AtZero,
        (true, false) => NonbasicState::AtLower,
        (false, true) => NonbasicState::AtUpper,
        (true, true) => {
            if (x - lb).abs() <= (ub - x).abs() {
                NonbasicState::AtLower
            } else {
                NonbasicState::AtUpper
            }
        }
    }
}

fn phase1_cost(x: f64, lb: f64, ub: f64, tol: f64) -> f64 {
    if x < lb - tol {
        -1.0
    } else if x > ub + tol {
        1.0
    } else {
        0.0
    }
}

/// Effective blocking interval of a basic variable during phase 1: an
/// infeasible variable only blocks when it reaches the violated bound.
fn phase1_bounds(x: f64, lb: f64, ub: f64, tol: f64) -> (f64, f64) {
    if x < lb - tol {
        (f64::NEG_INFINITY, lb)
    } else if x > ub + tol {
        (ub, f64::INFINITY)
    } else {
        (lb, ub)
    }
}

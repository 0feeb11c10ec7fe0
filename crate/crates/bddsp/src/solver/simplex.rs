//! Dense bounded-variable simplex tableau.
//!
//! Columns are structural variables or row slacks, kept in creation order. Row `k`
//! of the model reads `sum_j a_kj x_j + s_k = b_k`; the slack bounds encode the
//! relation (`<=`: `s >= 0`, `>=`: `s <= 0`, `=`: `s = 0`). The tableau holds
//! `B^-1 [A | I]` row-major plus the reduced-cost row, so bound changes, new rows
//! and new columns all keep the current basis and re-enter through the dual simplex.

use super::Relation;

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
/// Temporary box for variables whose cost sign needs an infinite bound.
const ARTIFICIAL_BOUND: f64 = 1e7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Lower,
    Upper,
    /// Held at its current value (free, or released from an artificial box).
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack(usize),
}

#[derive(Clone, Debug)]
struct ModelRow {
    coeffs: Vec<(usize, f64)>,
    rhs: f64,
    slack: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct Tableau {
    rows: Vec<Vec<f64>>,
    dj: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    boxed: Vec<bool>,
    x: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<Option<usize>>,
    side: Vec<Side>,
    kind: Vec<ColKind>,
    model_rows: Vec<ModelRow>,
    structural: Vec<usize>,
    pub(crate) max_pivots: usize,
    pub(crate) bland_after: usize,
    pub(crate) pivots: usize,
    degenerate_run: usize,
}

fn slack_bounds(rel: Relation) -> (f64, f64) {
    match rel {
        Relation::Le => (0.0, f64::INFINITY),
        Relation::Ge => (f64::NEG_INFINITY, 0.0),
        Relation::Eq => (0.0, 0.0),
    }
}

impl Tableau {
    pub(crate) fn new(max_pivots: usize, bland_after: usize) -> Self {
        Tableau {
            rows: Vec::new(),
            dj: Vec::new(),
            cost: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
            boxed: Vec::new(),
            x: Vec::new(),
            basis: Vec::new(),
            pos: Vec::new(),
            side: Vec::new(),
            kind: Vec::new(),
            model_rows: Vec::new(),
            structural: Vec::new(),
            max_pivots,
            bland_after,
            pivots: 0,
            degenerate_run: 0,
        }
    }

    pub(crate) fn num_structural(&self) -> usize {
        self.structural.len()
    }

    #[cfg(test)]
    pub(crate) fn num_rows(&self) -> usize {
        self.model_rows.len()
    }

    fn push_column(&mut self, cost: f64, lo: f64, hi: f64, kind: ColKind) -> usize {
        let col = self.cost.len();
        for row in &mut self.rows {
            row.push(0.0);
        }
        self.cost.push(cost);
        self.dj.push(cost);
        self.lo.push(lo);
        self.hi.push(hi);
        self.boxed.push(false);
        self.pos.push(None);
        self.kind.push(kind);
        let (side, value) = if lo.is_finite() {
            (Side::Lower, lo)
        } else if hi.is_finite() {
            (Side::Upper, hi)
        } else {
            (Side::Free, 0.0)
        };
        self.side.push(side);
        self.x.push(value);
        col
    }

    /// Appends a structural column absent from every existing row.
    pub(crate) fn add_column(&mut self, cost: f64, lo: f64, hi: f64) -> usize {
        let col = self.push_column(cost, lo, hi, ColKind::Structural);
        self.structural.push(col);
        // Reduced cost equals the cost since the column is zero in every row.
        self.choose_side(col);
        self.structural.len() - 1
    }

    /// Appends a model row with its slack basic. Coefficients index structural variables.
    pub(crate) fn add_row(&mut self, coeffs: &[(usize, f64)], rel: Relation, rhs: f64) {
        let (slo, shi) = slack_bounds(rel);
        let row_id = self.model_rows.len();
        let slack = self.push_column(0.0, slo, shi, ColKind::Slack(row_id));
        let mut dense = vec![0.0; self.cost.len()];
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for &(var, a) in coeffs {
            let col = self.structural[var];
            dense[col] += a;
            merged.push((col, a));
        }
        dense[slack] = 1.0;
        // Express the new row over the nonbasic columns.
        let mut activity = 0.0;
        for &(col, a) in &merged {
            activity += a * self.x[col];
        }
        for &(col, _) in &merged {
            if let Some(r) = self.pos[col] {
                let f = dense[col];
                if f != 0.0 {
                    let src = &self.rows[r];
                    for (d, s) in dense.iter_mut().zip(src.iter()) {
                        *d -= f * s;
                    }
                    dense[col] = 0.0;
                }
            }
        }
        self.rows.push(dense);
        self.basis.push(slack);
        self.pos[slack] = Some(self.rows.len() - 1);
        self.side[slack] = Side::Free;
        self.x[slack] = rhs - activity;
        self.model_rows.push(ModelRow {
            coeffs: merged,
            rhs,
            slack,
        });
    }

    /// Changes the bounds of a structural variable, keeping its nonbasic side.
    pub(crate) fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        let col = self.structural[var];
        self.lo[col] = lo;
        self.hi[col] = hi;
        self.boxed[col] = false;
        if self.pos[col].is_some() {
            return;
        }
        let target = match self.side[col] {
            Side::Lower if lo.is_finite() => lo,
            Side::Upper if hi.is_finite() => hi,
            _ => {
                self.choose_side(col);
                return;
            }
        };
        self.move_nonbasic(col, target);
    }

    pub(crate) fn bounds(&self, var: usize) -> (f64, f64) {
        let col = self.structural[var];
        (self.lo[col], self.hi[col])
    }

    fn move_nonbasic(&mut self, col: usize, target: f64) {
        let delta = target - self.x[col];
        if delta != 0.0 {
            for (r, row) in self.rows.iter().enumerate() {
                let a = row[col];
                if a != 0.0 {
                    self.x[self.basis[r]] -= a * delta;
                }
            }
        }
        self.x[col] = target;
    }

    /// Puts a nonbasic column on the side its reduced cost prefers, boxing if needed.
    fn choose_side(&mut self, col: usize) {
        let d = self.dj[col];
        let (lo, hi) = (self.lo[col], self.hi[col]);
        let (side, target) = if d > DUAL_TOL {
            if lo.is_finite() {
                (Side::Lower, lo)
            } else {
                self.lo[col] = -Self::artificial(hi);
                self.boxed[col] = true;
                (Side::Lower, self.lo[col])
            }
        } else if d < -DUAL_TOL {
            if hi.is_finite() {
                (Side::Upper, hi)
            } else {
                self.hi[col] = Self::artificial(lo);
                self.boxed[col] = true;
                (Side::Upper, self.hi[col])
            }
        } else if lo.is_finite() {
            (Side::Lower, lo)
        } else if hi.is_finite() {
            (Side::Upper, hi)
        } else {
            (Side::Free, self.x[col])
        };
        self.side[col] = side;
        self.move_nonbasic(col, target);
    }

    /// Box size on the open side, clear of the finite opposite bound.
    fn artificial(other: f64) -> f64 {
        if other.is_finite() {
            ARTIFICIAL_BOUND.max(other.abs() + ARTIFICIAL_BOUND)
        } else {
            ARTIFICIAL_BOUND
        }
    }

    fn dual_infeasible(&self, col: usize) -> bool {
        let d = self.dj[col];
        match self.side[col] {
            Side::Lower => d < -DUAL_TOL && self.lo[col] != self.hi[col],
            Side::Upper => d > DUAL_TOL && self.lo[col] != self.hi[col],
            Side::Free => d.abs() > DUAL_TOL,
        }
    }

    fn restore_dual_feasibility(&mut self) {
        for col in 0..self.cost.len() {
            if self.pos[col].is_none() && self.dual_infeasible(col) {
                self.choose_side(col);
            }
        }
    }

    /// Optimizes from the current basis.
    pub(crate) fn solve(&mut self) -> Outcome {
        self.pivots = 0;
        self.degenerate_run = 0;
        self.restore_dual_feasibility();
        let first = self.dual_simplex();
        if first != Outcome::Optimal {
            if first == Outcome::Infeasible && self.boxed.iter().any(|&b| b) {
                // The box may be the cause; fall back to primal from a released basis.
                self.release_boxes();
                return self.primal_from_current();
            }
            return first;
        }
        if self.boxed.iter().any(|&b| b) {
            self.release_boxes();
            let out = self.primal_simplex();
            if out != Outcome::Optimal {
                return out;
            }
        }
        self.finish()
    }

    fn primal_from_current(&mut self) -> Outcome {
        let out = self.phase_one();
        if out != Outcome::Optimal {
            return out;
        }
        let out = self.primal_simplex();
        if out != Outcome::Optimal {
            return out;
        }
        self.finish()
    }

    fn finish(&mut self) -> Outcome {
        if self.residual() > 1e-7 {
            self.refactor();
            let out = self.dual_simplex();
            if out != Outcome::Optimal {
                return out;
            }
            if self.boxed.iter().any(|&b| b) {
                self.release_boxes();
                return self.primal_simplex();
            }
        }
        Outcome::Optimal
    }

    fn release_boxes(&mut self) {
        for col in 0..self.cost.len() {
            if !self.boxed[col] {
                continue;
            }
            self.boxed[col] = false;
            let (tlo, thi) = self.true_bounds(col);
            self.lo[col] = tlo;
            self.hi[col] = thi;
            if self.pos[col].is_none() {
                let at_lo = tlo.is_finite() && self.x[col] == tlo;
                let at_hi = thi.is_finite() && self.x[col] == thi;
                self.side[col] = if at_lo {
                    Side::Lower
                } else if at_hi {
                    Side::Upper
                } else {
                    Side::Free
                };
            }
        }
    }

    fn true_bounds(&self, col: usize) -> (f64, f64) {
        // Artificial boxes only ever replace an infinite side.
        let lo = if self.lo[col] <= -ARTIFICIAL_BOUND {
            f64::NEG_INFINITY
        } else {
            self.lo[col]
        };
        let hi = if self.hi[col] >= ARTIFICIAL_BOUND {
            f64::INFINITY
        } else {
            self.hi[col]
        };
        (lo, hi)
    }

    /// Minimizes the total bound violation of basic columns from the current basis.
    fn phase_one(&mut self) -> Outcome {
        loop {
            if self.pivots >= self.max_pivots {
                return Outcome::IterationLimit;
            }
            // Phase-one cost of a basic column: -1 below its lower bound, +1 above its upper.
            let weights: Vec<f64> = self
                .basis
                .iter()
                .map(|&j| {
                    if self.x[j] < self.lo[j] - Self::tol(self.lo[j]) {
                        -1.0
                    } else if self.x[j] > self.hi[j] + Self::tol(self.hi[j]) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            if weights.iter().all(|&w| w == 0.0) {
                return Outcome::Optimal;
            }
            let bland = self.bland();
            let mut enter: Option<(usize, f64, f64)> = None;
            for q in 0..self.cost.len() {
                if self.pos[q].is_some() {
                    continue;
                }
                let mut d = 0.0;
                for (r, &w) in weights.iter().enumerate() {
                    if w != 0.0 {
                        d -= w * self.rows[r][q];
                    }
                }
                let can_up =
                    !self.hi[q].is_finite() || self.x[q] < self.hi[q] - Self::tol(self.hi[q]);
                let can_down =
                    !self.lo[q].is_finite() || self.x[q] > self.lo[q] + Self::tol(self.lo[q]);
                let (score, dir) = if d < -DUAL_TOL && can_up {
                    (-d, 1.0)
                } else if d > DUAL_TOL && can_down {
                    (d, -1.0)
                } else {
                    continue;
                };
                if enter.is_none_or(|(_, bs, _)| !bland && score > bs) {
                    enter = Some((q, score, dir));
                }
            }
            let Some((q, _, dir)) = enter else {
                // Leftovers from the artificial box scale are rounding, not infeasibility.
                return if self.primal_infeasibility() <= 1e-6 {
                    Outcome::Optimal
                } else {
                    Outcome::Infeasible
                };
            };
            let mut step = if dir > 0.0 {
                self.hi[q] - self.x[q]
            } else {
                self.x[q] - self.lo[q]
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let alpha = row[q] * dir;
                if alpha.abs() < PIVOT_TOL {
                    continue;
                }
                let j = self.basis[r];
                // Basic value moves by -alpha per unit step. Feasible columns stop at the
                // bound they approach; violated ones stop once they become feasible.
                let bound = match (alpha > 0.0, weights[r]) {
                    (true, w) if w >= 0.0 => {
                        if w > 0.0 {
                            self.hi[j]
                        } else {
                            self.lo[j]
                        }
                    }
                    (false, w) if w <= 0.0 => {
                        if w < 0.0 {
                            self.lo[j]
                        } else {
                            self.hi[j]
                        }
                    }
                    _ => continue,
                };
                if !bound.is_finite() {
                    continue;
                }
                let limit = ((self.x[j] - bound) / alpha).max(0.0);
                let better = match leave {
                    None => limit < step,
                    Some((br, _)) => {
                        limit < step - FEAS_TOL
                            || (limit <= step + FEAS_TOL
                                && if bland {
                                    j < self.basis[br]
                                } else {
                                    alpha.abs() > self.rows[br][q].abs()
                                })
                    }
                };
                if better {
                    step = limit;
                    leave = Some((r, bound));
                }
            }
            if !step.is_finite() {
                // Phase one is bounded below, so this only happens numerically.
                return Outcome::Infeasible;
            }
            match leave {
                None => {
                    self.shift_entering(q, dir * step);
                    self.side[q] = if dir > 0.0 { Side::Upper } else { Side::Lower };
                    self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                    self.count_pivot(step == 0.0);
                }
                Some((r, bound)) => {
                    self.shift_entering(q, dir * step);
                    let out = self.basis[r];
                    if bound == self.lo[out] {
                        self.x[out] = self.lo[out];
                        self.side[out] = Side::Lower;
                    } else {
                        self.x[out] = self.hi[out];
                        self.side[out] = Side::Upper;
                    }
                    self.pivot(r, q);
                    self.count_pivot(step == 0.0);
                }
            }
        }
    }

    fn primal_infeasibility(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &j in &self.basis {
            let v = self.x[j];
            worst = worst.max(self.lo[j] - v).max(v - self.hi[j]);
        }
        worst
    }

    fn bland(&self) -> bool {
        self.degenerate_run >= self.bland_after
    }

    fn tol(bound: f64) -> f64 {
        FEAS_TOL * bound.abs().max(1.0)
    }

    fn dual_simplex(&mut self) -> Outcome {
        loop {
            if self.pivots >= self.max_pivots {
                return Outcome::IterationLimit;
            }
            let bland = self.bland();
            let mut leave: Option<(usize, f64)> = None;
            for (r, &j) in self.basis.iter().enumerate() {
                let v = self.x[j];
                let infeas = if v < self.lo[j] - Self::tol(self.lo[j]) {
                    self.lo[j] - v
                } else if v > self.hi[j] + Self::tol(self.hi[j]) {
                    v - self.hi[j]
                } else {
                    continue;
                };
                match leave {
                    None => leave = Some((r, infeas)),
                    Some((br, bi)) => {
                        let better = if bland {
                            j < self.basis[br]
                        } else {
                            infeas > bi
                        };
                        if better {
                            leave = Some((r, infeas));
                        }
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Outcome::Optimal;
            };
            let out = self.basis[r];
            let below = self.x[out] < self.lo[out];
            let row = &self.rows[r];
            let mut enter: Option<(usize, f64, f64)> = None;
            for (q, &a) in row.iter().enumerate() {
                if a.abs() < PIVOT_TOL || self.pos[q].is_some() {
                    continue;
                }
                if self.lo[q] == self.hi[q] && self.side[q] != Side::Free {
                    continue;
                }
                let ok = match self.side[q] {
                    Side::Lower => (a < 0.0) == below,
                    Side::Upper => (a > 0.0) == below,
                    Side::Free => true,
                };
                if !ok {
                    continue;
                }
                let ratio = (self.dj[q] / a).abs();
                let better = match enter {
                    None => true,
                    Some((bq, br, ba)) => {
                        if bland {
                            ratio < br - DUAL_TOL || (ratio <= br + DUAL_TOL && q < bq)
                        } else {
                            ratio < br - DUAL_TOL || (ratio <= br + DUAL_TOL && a.abs() > ba)
                        }
                    }
                };
                if better {
                    enter = Some((q, ratio, a.abs()));
                }
            }
            let Some((q, ratio, _)) = enter else {
                return Outcome::Infeasible;
            };
            let a = self.rows[r][q];
            let target = if below { self.lo[out] } else { self.hi[out] };
            let delta = (self.x[out] - target) / a;
            self.shift_entering(q, delta);
            self.x[out] = target;
            self.side[out] = if below { Side::Lower } else { Side::Upper };
            self.pivot(r, q);
            self.count_pivot(ratio < DUAL_TOL);
        }
    }

    fn shift_entering(&mut self, q: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        for (r, row) in self.rows.iter().enumerate() {
            let a = row[q];
            if a != 0.0 {
                self.x[self.basis[r]] -= a * delta;
            }
        }
        self.x[q] += delta;
    }

    fn count_pivot(&mut self, degenerate: bool) {
        self.pivots += 1;
        if degenerate {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }
    }

    fn primal_simplex(&mut self) -> Outcome {
        loop {
            if self.pivots >= self.max_pivots {
                return Outcome::IterationLimit;
            }
            let bland = self.bland();
            let mut enter: Option<(usize, f64)> = None;
            for q in 0..self.cost.len() {
                if self.pos[q].is_some() {
                    continue;
                }
                let d = self.dj[q];
                let can_up =
                    !self.hi[q].is_finite() || self.x[q] < self.hi[q] - Self::tol(self.hi[q]);
                let can_down =
                    !self.lo[q].is_finite() || self.x[q] > self.lo[q] + Self::tol(self.lo[q]);
                let score = if d < -DUAL_TOL && can_up {
                    -d
                } else if d > DUAL_TOL && can_down {
                    d
                } else {
                    continue;
                };
                let better = match enter {
                    None => true,
                    Some((_, bs)) => !bland && score > bs,
                };
                if better {
                    enter = Some((q, score));
                }
            }
            let Some((q, _)) = enter else {
                return Outcome::Optimal;
            };
            let dir = if self.dj[q] < 0.0 { 1.0 } else { -1.0 };
            let own = if dir > 0.0 {
                self.hi[q] - self.x[q]
            } else {
                self.x[q] - self.lo[q]
            };
            let mut step = own;
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let alpha = row[q] * dir;
                if alpha.abs() < PIVOT_TOL {
                    continue;
                }
                let j = self.basis[r];
                let limit = if alpha > 0.0 {
                    if !self.lo[j].is_finite() {
                        continue;
                    }
                    ((self.x[j] - self.lo[j]) / alpha).max(0.0)
                } else {
                    if !self.hi[j].is_finite() {
                        continue;
                    }
                    ((self.hi[j] - self.x[j]) / -alpha).max(0.0)
                };
                let better = match leave {
                    None => limit < step,
                    Some((br, _)) => {
                        if bland {
                            limit < step - FEAS_TOL
                                || (limit <= step + FEAS_TOL && j < self.basis[br])
                        } else {
                            limit < step - FEAS_TOL
                                || (limit <= step + FEAS_TOL
                                    && alpha.abs() > self.rows[br][q].abs())
                        }
                    }
                };
                if better {
                    step = limit;
                    leave = Some((r, alpha));
                }
            }
            if !step.is_finite() {
                return Outcome::Unbounded;
            }
            match leave {
                None => {
                    // Bound flip of the entering column.
                    self.shift_entering(q, dir * step);
                    self.side[q] = if dir > 0.0 { Side::Upper } else { Side::Lower };
                    self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                    self.count_pivot(step == 0.0);
                }
                Some((r, alpha)) => {
                    self.shift_entering(q, dir * step);
                    let out = self.basis[r];
                    if alpha > 0.0 {
                        self.x[out] = self.lo[out];
                        self.side[out] = Side::Lower;
                    } else {
                        self.x[out] = self.hi[out];
                        self.side[out] = Side::Upper;
                    }
                    self.pivot(r, q);
                    self.count_pivot(step == 0.0);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let inv = 1.0 / self.rows[r][q];
        let mut nz: Vec<usize> = Vec::new();
        {
            let prow = &mut self.rows[r];
            for (j, v) in prow.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < 1e-14 {
                        *v = 0.0;
                    } else {
                        nz.push(j);
                    }
                }
            }
            prow[q] = 1.0;
        }
        let prow = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[q];
            if f == 0.0 {
                continue;
            }
            for &j in &nz {
                row[j] -= f * prow[j];
            }
            row[q] = 0.0;
        }
        let f = self.dj[q];
        if f != 0.0 {
            for &j in &nz {
                self.dj[j] -= f * prow[j];
            }
            self.dj[q] = 0.0;
        }
        self.rows[r] = prow;
        let out = self.basis[r];
        self.pos[out] = None;
        self.basis[r] = q;
        self.pos[q] = Some(r);
    }

    fn residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.model_rows {
            let mut act = self.x[row.slack];
            for &(c, a) in &row.coeffs {
                act += a * self.x[c];
            }
            worst = worst.max((act - row.rhs).abs() / row.rhs.abs().max(1.0));
        }
        worst
    }

    /// Rebuilds `B^-1 [A | I]`, basic values and reduced costs from the model rows.
    pub(crate) fn refactor(&mut self) {
        let m = self.model_rows.len();
        let n = self.cost.len();
        let mut mat: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut rhs: Vec<f64> = Vec::with_capacity(m);
        for row in &self.model_rows {
            let mut dense = vec![0.0; n];
            for &(c, a) in &row.coeffs {
                dense[c] += a;
            }
            dense[row.slack] = 1.0;
            mat.push(dense);
            rhs.push(row.rhs);
        }
        let old_basis = self.basis.clone();
        let mut assigned = vec![false; m];
        let mut new_basis = vec![usize::MAX; m];
        for &col in &old_basis {
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in mat.iter().enumerate() {
                if assigned[i] {
                    continue;
                }
                let v = row[col].abs();
                if v > 1e-11 && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((i, v));
                }
            }
            let Some((p, _)) = best else {
                self.pos[col] = None;
                continue;
            };
            assigned[p] = true;
            new_basis[p] = col;
            let inv = 1.0 / mat[p][col];
            for v in mat[p].iter_mut() {
                *v *= inv;
            }
            rhs[p] *= inv;
            let prow = mat[p].clone();
            let prhs = rhs[p];
            for i in 0..m {
                if i == p {
                    continue;
                }
                let f = mat[i][col];
                if f != 0.0 {
                    for (v, s) in mat[i].iter_mut().zip(prow.iter()) {
                        *v -= f * s;
                    }
                    mat[i][col] = 0.0;
                    rhs[i] -= f * prhs;
                }
            }
        }
        // Rows left without a basic column take their own slack.
        for i in 0..m {
            if new_basis[i] == usize::MAX {
                let slack = self.model_rows[i].slack;
                let inv = 1.0 / mat[i][slack];
                for v in mat[i].iter_mut() {
                    *v *= inv;
                }
                rhs[i] *= inv;
                new_basis[i] = slack;
            }
        }
        for col in 0..n {
            self.pos[col] = None;
        }
        for (i, &col) in new_basis.iter().enumerate() {
            self.pos[col] = Some(i);
        }
        for col in 0..n {
            if self.pos[col].is_none() && old_basis.contains(&col) {
                self.side[col] = Side::Free;
            }
        }
        self.basis = new_basis;
        self.rows = mat;
        for i in 0..m {
            let mut v = rhs[i];
            for (j, &t) in self.rows[i].iter().enumerate() {
                if t != 0.0 && self.pos[j].is_none() {
                    v -= t * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
        for j in 0..n {
            let mut d = self.cost[j];
            for (i, &b) in self.basis.iter().enumerate() {
                let cb = self.cost[b];
                if cb != 0.0 {
                    d -= cb * self.rows[i][j];
                }
            }
            self.dj[j] = if self.pos[j].is_some() { 0.0 } else { d };
        }
        self.restore_dual_feasibility();
    }

    pub(crate) fn values(&self) -> Vec<f64> {
        self.structural.iter().map(|&c| self.x[c]).collect()
    }

    pub(crate) fn objective(&self) -> f64 {
        self.structural
            .iter()
            .map(|&c| self.cost[c] * self.x[c])
            .sum()
    }

    /// Row duals for the internal minimization: `y_k = -d(slack_k)`.
    pub(crate) fn duals(&self) -> Vec<f64> {
        self.model_rows.iter().map(|r| -self.dj[r.slack]).collect()
    }

    /// Slack value of model row `k`; zero means the row is tight.
    #[cfg(test)]
    pub(crate) fn slack(&self, k: usize) -> f64 {
        self.x[self.model_rows[k].slack]
    }

    /// Removes model rows whose slack is basic. Other requested rows are kept.
    #[cfg(test)]
    pub(crate) fn remove_rows(&mut self, rows: &[usize]) -> Vec<usize> {
        let mut removed = Vec::new();
        let mut drop_col = vec![false; self.cost.len()];
        let mut drop_pos = vec![false; self.rows.len()];
        let mut drop_row = vec![false; self.model_rows.len()];
        for &k in rows {
            let slack = self.model_rows[k].slack;
            if let Some(p) = self.pos[slack] {
                drop_col[slack] = true;
                drop_pos[p] = true;
                drop_row[k] = true;
                removed.push(k);
            }
        }
        if removed.is_empty() {
            return removed;
        }
        let keep: Vec<usize> = (0..self.cost.len()).filter(|&c| !drop_col[c]).collect();
        let mut remap = vec![usize::MAX; self.cost.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let mut rows = Vec::with_capacity(self.rows.len() - removed.len());
        let mut basis = Vec::with_capacity(rows.capacity());
        for (p, row) in std::mem::take(&mut self.rows).into_iter().enumerate() {
            if drop_pos[p] {
                continue;
            }
            rows.push(keep.iter().map(|&c| row[c]).collect::<Vec<f64>>());
            basis.push(remap[self.basis[p]]);
        }
        let pick = |v: &Vec<f64>| keep.iter().map(|&c| v[c]).collect::<Vec<f64>>();
        self.dj = pick(&self.dj);
        self.cost = pick(&self.cost);
        self.lo = pick(&self.lo);
        self.hi = pick(&self.hi);
        self.x = pick(&self.x);
        self.boxed = keep.iter().map(|&c| self.boxed[c]).collect();
        self.side = keep.iter().map(|&c| self.side[c]).collect();
        let mut row_remap = vec![usize::MAX; self.model_rows.len()];
        let mut model_rows = Vec::new();
        for (k, mut row) in std::mem::take(&mut self.model_rows).into_iter().enumerate() {
            if drop_row[k] {
                continue;
            }
            row_remap[k] = model_rows.len();
            row.slack = remap[row.slack];
            for e in &mut row.coeffs {
                e.0 = remap[e.0];
            }
            model_rows.push(row);
        }
        self.model_rows = model_rows;
        self.kind = keep
            .iter()
            .map(|&c| match self.kind[c] {
                ColKind::Slack(k) => ColKind::Slack(row_remap[k]),
                ColKind::Structural => ColKind::Structural,
            })
            .collect();
        for s in &mut self.structural {
            *s = remap[*s];
        }
        self.rows = rows;
        self.basis = basis;
        self.pos = vec![None; self.cost.len()];
        for (p, &c) in self.basis.iter().enumerate() {
            self.pos[c] = Some(p);
        }
        removed
    }

    #[cfg(test)]
    pub(crate) fn check_consistency(&self) {
        for (k, row) in self.model_rows.iter().enumerate() {
            assert_eq!(self.kind[row.slack], ColKind::Slack(k));
        }
        assert!(self.residual() < 1e-6, "residual {}", self.residual());
    }
}

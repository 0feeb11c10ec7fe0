//! Desk-scale LP/MILP engine: bounded simplex with duals and best-first
//! branch-and-bound over binaries with lazy-constraint and heuristic hooks.

mod format;
mod simplex;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

pub use format::{parse_lp, write_lp};
use simplex::{Outcome, Tableau};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Relation::Le => lhs <= rhs + tol,
            Relation::Ge => lhs >= rhs - tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        Row {
            coeffs,
            relation,
            rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.relation {
            Relation::Le => (act - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - act).max(0.0),
            Relation::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Linear program over continuous and binary columns. Binaries get bounds `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub kinds: Vec<VarKind>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: Vec::new(),
            rows: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            kinds: Vec::new(),
        }
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64, kind: VarKind) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.kinds.push(kind);
        self.objective.len() - 1
    }

    pub fn add_binary(&mut self, cost: f64) -> usize {
        self.add_var(cost, 0.0, 1.0, VarKind::Binary)
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.rows.push(Row::new(coeffs, relation, rhs));
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Checks bounds, rows and integrality of `x` within `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        for j in 0..x.len() {
            if x[j] < self.lower[j] - tol || x[j] > self.upper[j] + tol {
                return false;
            }
            if self.kinds[j] == VarKind::Binary && (x[j] - x[j].round()).abs() > tol {
                return false;
            }
        }
        self.rows.iter().all(|r| r.violation(x) <= tol)
    }

    fn validate(&self) -> Result<(), String> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.kinds.len() != n {
            return Err("column arrays have different lengths".into());
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] {
                return Err(format!("column {j} has empty bounds"));
            }
            if self.kinds[j] == VarKind::Binary
                && (!self.lower[j].is_finite() || !self.upper[j].is_finite())
            {
                return Err(format!("binary column {j} needs finite bounds"));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if let Some(&(j, _)) = r.coeffs.iter().find(|&&(j, _)| j >= n) {
                return Err(format!("row {i} references column {j} of {n}"));
            }
        }
        Ok(())
    }

    fn internal_cost(&self, j: usize) -> f64 {
        match self.sense {
            Sense::Minimize => self.objective[j],
            Sense::Maximize => -self.objective[j],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: Status,
    /// Primal values; for branch-and-bound, the incumbent (empty when none exists).
    pub primal: Vec<f64>,
    /// One dual per row, in the sign convention of the stated sense (LP solves only).
    pub duals: Vec<f64>,
    pub objective: f64,
    /// Best proven bound; equals `objective` for solved LPs.
    pub bound: f64,
    pub nodes: usize,
    pub time: Duration,
}

#[derive(Clone, Debug)]
pub struct LpOptions {
    pub max_pivots: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            max_pivots: 500_000,
            bland_after: 1000,
        }
    }
}

fn load(lp: &LinearProgram, opts: &LpOptions) -> Tableau {
    let mut t = Tableau::new(opts.max_pivots, opts.bland_after);
    for j in 0..lp.num_vars() {
        t.add_column(lp.internal_cost(j), lp.lower[j], lp.upper[j]);
    }
    for r in &lp.rows {
        t.add_row(&r.coeffs, r.relation, r.rhs);
    }
    t
}

pub fn solve_lp(lp: &LinearProgram) -> SolveResult {
    solve_lp_with(lp, &LpOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &LpOptions) -> SolveResult {
    let start = Instant::now();
    if let Err(msg) = lp.validate() {
        panic!("malformed linear program: {msg}");
    }
    let mut t = load(lp, opts);
    let outcome = t.solve();
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let status = match outcome {
        Outcome::Optimal => Status::Optimal,
        Outcome::Infeasible => Status::Infeasible,
        Outcome::Unbounded => Status::Unbounded,
        Outcome::IterationLimit => Status::Limit,
    };
    let (primal, duals, objective) = if status == Status::Optimal {
        let x = t.values();
        let obj = lp.objective_value(&x);
        let y = t.duals().into_iter().map(|v| sign * v).collect();
        (x, y, obj)
    } else {
        let obj = match status {
            Status::Infeasible => sign * f64::INFINITY,
            Status::Unbounded => -sign * f64::INFINITY,
            _ => f64::NAN,
        };
        (Vec::new(), Vec::new(), obj)
    };
    SolveResult {
        status,
        primal,
        duals,
        objective,
        bound: objective,
        nodes: 0,
        time: start.elapsed(),
    }
}

#[derive(Clone, Debug)]
pub struct BnbOptions {
    pub int_tol: f64,
    /// Absolute gap under which a node cannot improve the incumbent.
    pub gap_tol: f64,
    pub max_nodes: usize,
    pub time_limit: Option<Duration>,
    pub lp: LpOptions,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            int_tol: 1e-6,
            gap_tol: 1e-9,
            max_nodes: usize::MAX,
            time_limit: None,
            lp: LpOptions::default(),
        }
    }
}

/// Search state handed to callbacks.
#[derive(Clone, Debug)]
pub struct NodeContext {
    pub node: usize,
    pub depth: usize,
    /// Objective of the node LP (internal minimization sense).
    pub lp_objective: f64,
    pub best_bound: f64,
    pub incumbent: Option<f64>,
}

/// Column appended to the model by a callback; it appears in no existing row.
#[derive(Clone, Debug)]
pub struct Column {
    pub cost: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Default)]
pub struct LazyOutcome {
    /// Columns are appended before rows, so rows may reference them.
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    /// A full solution known to satisfy every present and future lazy row.
    pub candidate: Option<Vec<f64>>,
}

pub trait BnbCallbacks {
    /// Called at every node whose LP solution is integral on the binaries.
    fn lazy(&mut self, _x: &[f64], _ctx: &NodeContext) -> LazyOutcome {
        LazyOutcome::default()
    }

    /// Called at fractional nodes; returned rows are added and the node re-solved.
    fn fractional_cuts(&mut self, _x: &[f64], _ctx: &NodeContext) -> Vec<Row> {
        Vec::new()
    }

    /// Called at fractional nodes that beat the incumbent; may propose a solution.
    fn heuristic(&mut self, _x: &[f64], _ctx: &NodeContext) -> Option<Vec<f64>> {
        None
    }
}

pub struct NoCallbacks;

impl BnbCallbacks for NoCallbacks {}

#[derive(Clone, Debug)]
struct Node {
    bound: f64,
    id: usize,
    depth: usize,
    /// (binary column, fixed value)
    fixings: Vec<(usize, bool)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: the smallest bound comes out first, newer nodes on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.id.cmp(&other.id))
    }
}

/// Best-first branch-and-bound on the binary columns of `lp`.
pub fn solve_bnb(
    lp: &LinearProgram,
    callbacks: &mut dyn BnbCallbacks,
    options: &BnbOptions,
) -> SolveResult {
    let start = Instant::now();
    if let Err(msg) = lp.validate() {
        panic!("malformed linear program: {msg}");
    }
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut model = lp.clone();
    let mut tab = load(lp, &options.lp);
    let binaries: Vec<usize> = (0..lp.num_vars())
        .filter(|&j| lp.kinds[j] == VarKind::Binary)
        .collect();
    // Internal minimization values throughout.
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: 0,
        depth: 0,
        fixings: Vec::new(),
    });
    let mut next_id = 1;
    let mut nodes = 0;
    let mut limit_hit = false;
    let mut unbounded = false;
    let internal_obj = |m: &LinearProgram, x: &[f64]| sign * m.objective_value(x);

    let try_candidate =
        |m: &LinearProgram, cand: Vec<f64>, inc: &mut Option<(f64, Vec<f64>)>| {
            if !m.is_feasible(&cand, 1e-6) {
                return;
            }
            let val = internal_obj(m, &cand);
            if inc.as_ref().is_none_or(|(v, _)| val < *v - 1e-12) {
                *inc = Some((val, cand));
            }
        };

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound >= *inc - options.gap_tol {
                heap.clear();
                break;
            }
        }
        if nodes >= options.max_nodes
            || options.time_limit.is_some_and(|l| start.elapsed() >= l)
        {
            heap.push(node);
            limit_hit = true;
            break;
        }
        nodes += 1;
        for &j in &binaries {
            let (lo, hi) = (model.lower[j], model.upper[j]);
            let (lo, hi) = match node.fixings.iter().rev().find(|f| f.0 == j) {
                Some(&(_, v)) => {
                    let b = if v { 1.0 } else { 0.0 };
                    (b, b)
                }
                None => (lo, hi),
            };
            if tab.bounds(j) != (lo, hi) {
                tab.set_bounds(j, lo, hi);
            }
        }
        loop {
            let outcome = tab.solve();
            match outcome {
                Outcome::Optimal => {}
                Outcome::Infeasible => break,
                Outcome::Unbounded => {
                    unbounded = true;
                    break;
                }
                Outcome::IterationLimit => {
                    limit_hit = true;
                    heap.push(node.clone());
                    break;
                }
            }
            let obj = tab.objective();
            if let Some((inc, _)) = &incumbent {
                if obj >= *inc - options.gap_tol {
                    break;
                }
            }
            let x = tab.values();
            let best_bound = heap.peek().map_or(obj, |n: &Node| n.bound.min(obj));
            let ctx = NodeContext {
                node: node.id,
                depth: node.depth,
                lp_objective: obj,
                best_bound,
                incumbent: incumbent.as_ref().map(|(v, _)| *v),
            };
            let mut branch: Option<(usize, f64)> = None;
            for &j in &binaries {
                let f = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
                if f > options.int_tol && branch.is_none_or(|(_, bf)| f > bf + 1e-12) {
                    branch = Some((j, f));
                }
            }
            match branch {
                None => {
                    let outcome = callbacks.lazy(&x, &ctx);
                    for col in &outcome.columns {
                        let j = model.add_var(col.cost, col.lower, col.upper, VarKind::Continuous);
                        tab.add_column(sign * col.cost, col.lower, col.upper);
                        debug_assert_eq!(j + 1, tab.num_structural());
                    }
                    let mut x_ext = x.clone();
                    x_ext.resize(model.num_vars(), 0.0);
                    let violated = outcome.rows.iter().any(|r| r.violation(&x_ext) > 1e-6)
                        || !outcome.columns.is_empty();
                    for r in outcome.rows {
                        tab.add_row(&r.coeffs, r.relation, r.rhs);
                        model.rows.push(r);
                    }
                    if let Some(c) = outcome.candidate {
                        try_candidate(&model, c, &mut incumbent);
                    }
                    if violated {
                        continue;
                    }
                    let val = internal_obj(&model, &x_ext);
                    if incumbent.as_ref().is_none_or(|(v, _)| val < *v - 1e-12) {
                        incumbent = Some((val, x_ext));
                    }
                    break;
                }
                Some((j, _)) => {
                    if incumbent.as_ref().is_none_or(|(v, _)| obj < *v - options.gap_tol) {
                        if let Some(c) = callbacks.heuristic(&x, &ctx) {
                            try_candidate(&model, c, &mut incumbent);
                        }
                    }
                    let cuts = callbacks.fractional_cuts(&x, &ctx);
                    if cuts.iter().any(|r| r.violation(&x) > 1e-6) {
                        for r in cuts {
                            tab.add_row(&r.coeffs, r.relation, r.rhs);
                            model.rows.push(r);
                        }
                        continue;
                    }
                    for value in [false, true] {
                        let mut fixings = node.fixings.clone();
                        fixings.push((j, value));
                        heap.push(Node {
                            bound: obj,
                            id: next_id,
                            depth: node.depth + 1,
                            fixings,
                        });
                        next_id += 1;
                    }
                    break;
                }
            }
        }
        if unbounded || limit_hit {
            break;
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let (status, objective, primal) = match (&incumbent, unbounded, limit_hit) {
        (_, true, _) => (Status::Unbounded, f64::NEG_INFINITY, Vec::new()),
        (Some((v, x)), false, false) => (Status::Optimal, *v, x.clone()),
        (None, false, false) => (Status::Infeasible, f64::INFINITY, Vec::new()),
        (inc, false, true) => (
            Status::Limit,
            inc.as_ref().map_or(f64::INFINITY, |(v, _)| *v),
            inc.as_ref().map_or(Vec::new(), |(_, x)| x.clone()),
        ),
    };
    let bound = match status {
        Status::Optimal => objective,
        Status::Limit => open_bound.min(objective),
        _ => objective,
    };
    SolveResult {
        status,
        primal,
        duals: Vec::new(),
        objective: sign * objective,
        bound: sign * bound,
        nodes,
        time: start.elapsed(),
    }
}

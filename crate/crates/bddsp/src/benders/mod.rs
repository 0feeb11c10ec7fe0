//! Decomposition drivers: branch-and-cut over a master problem with one recourse
//! variable per scenario, optionally extended with the CVaR mean-risk columns.
//!
//! Master columns, in order: first-stage binaries `x`, then `eta[w]` (and
//! `theta[w]` under CVaR), then every block of CVaR columns appended by
//! separation rounds.

mod cvar;
mod log;

pub use cvar::{cvar_sorted, value_at_risk, CvarConfig};
pub use log::{write_solve_log, LogEntry};

use crate::cuts::{
    cap_cut, cap_cut_strong, cap_duals, cost_cut, cost_cut_strong, cost_duals, link_exprs,
    lshaped_cut, lshaped_cut_monotone, pure_benders_cut, rationalize, recourse_lower_bound, Cut,
    CutError, CutKind,
};
use crate::diagram::{
    build_cap_bdd, build_cost_bdd, mean_size, shortest_path, Bdd, BuildOptions, DiagramError,
};
use crate::model::{
    rational_to_f64, recourse_ip, LShapedVariant, Mode, ModelError, Rational, StochasticProgram,
};
use crate::solver::{
    solve_bnb, BnbCallbacks, BnbOptions, Column, LazyOutcome, LinearProgram, NoCallbacks,
    NodeContext, Relation, Row, Sense, Status, VarKind,
};
use rayon::prelude::*;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::time::{Duration, Instant};
use thiserror::Error;

/// Relative tolerance for "the cut is violated".
const CUT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    BddCap,
    BddCost,
    LShaped,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::BddCap, Method::BddCost, Method::LShaped];

    pub fn name(self) -> &'static str {
        match self {
            Method::BddCap => "bdd-cap",
            Method::BddCost => "bdd-cost",
            Method::LShaped => "lshaped",
        }
    }

    /// The program mode a method needs, if it needs one.
    pub fn required_mode(self) -> Option<Mode> {
        match self {
            Method::BddCap => Some(Mode::CapacityLinked),
            Method::BddCost => Some(Mode::CostLinked),
            Method::LShaped => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BendersError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error("method {method} cannot solve a {mode:?} program")]
    MethodMismatch { method: Method, mode: Mode },
    #[error("no first-stage solution is feasible")]
    Infeasible,
    #[error("scenario {0} has no feasible recourse at a first-stage point")]
    NoRecourse(usize),
    #[error("master problem is unbounded")]
    Unbounded,
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Clone, Debug)]
pub struct BendersOptions {
    /// Add cuts from the LP relaxation of the recourse next to the method's cuts.
    pub pure_benders: bool,
    /// Also separate those cuts at fractional master solutions.
    pub pb_at_fractional: bool,
    /// Per-layer strengthened diagram cuts instead of the base ones.
    pub strengthen: bool,
    /// Round fractional master points and complete them into incumbents.
    pub heuristic: bool,
    /// Re-solve the master to optimality between separation rounds instead of
    /// separating inside the search tree.
    pub pure_loop: bool,
    pub max_rounds: usize,
    pub time_limit: Option<Duration>,
    pub build: BuildOptions,
    /// Keep every optimality cut added, for the cut log.
    pub keep_cuts: bool,
}

impl Default for BendersOptions {
    fn default() -> Self {
        BendersOptions {
            pure_benders: false,
            pb_at_fractional: false,
            strengthen: true,
            heuristic: true,
            pure_loop: false,
            max_rounds: 100_000,
            time_limit: None,
            build: BuildOptions::default(),
            keep_cuts: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// A time, node or round limit stopped the search; bounds are still valid.
    Limit,
}

#[derive(Clone, Debug, Default)]
pub struct Stats {
    /// Separation rounds: lazy callbacks in branch-and-cut, master solves in the loop.
    pub rounds: usize,
    pub nodes: usize,
    pub heuristic_calls: usize,
    pub cuts: BTreeMap<CutKind, usize>,
    pub build_time: Duration,
    pub solve_time: Duration,
    pub subproblem_time: Duration,
    pub mean_nodes: f64,
    pub mean_arcs: f64,
}

impl Stats {
    pub fn total_cuts(&self) -> usize {
        self.cuts.values().sum()
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: SolveStatus,
    /// Best first-stage point found; empty when a limit hit before any.
    pub x: Vec<bool>,
    /// Exact recourse value of every scenario at `x`.
    pub recourse: Vec<Rational>,
    /// Objective at `x`, recomputed exactly from the recourse values.
    pub objective: f64,
    /// Same, as a fraction (CVaR parameters are rationalized first).
    pub exact_objective: Option<Rational>,
    /// CVaR of the recourse at `x`, under a risk-averse solve.
    pub cvar: Option<Rational>,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub stats: Stats,
    pub log: Vec<LogEntry>,
    pub cuts: Vec<Cut>,
}

impl Solution {
    /// Relative gap between the bounds; zero at optimality.
    pub fn gap(&self) -> f64 {
        if self.status == SolveStatus::Optimal {
            return 0.0;
        }
        if !self.upper_bound.is_finite() {
            return f64::INFINITY;
        }
        (self.upper_bound - self.lower_bound).max(0.0) / self.upper_bound.abs().max(1e-9)
    }
}

/// A program with its scenario subproblems ready: diagrams built for the diagram
/// methods, recourse lower bounds computed for every method.
pub struct Prepared<'a> {
    pub sp: &'a StochasticProgram,
    pub method: Method,
    pub diagrams: Vec<Bdd>,
    pub lower: Vec<Rational>,
    pub build_time: Duration,
}

impl<'a> Prepared<'a> {
    pub fn new(
        sp: &'a StochasticProgram,
        method: Method,
        build: &BuildOptions,
    ) -> Result<Prepared<'a>, BendersError> {
        sp.validate()?;
        if let Some(mode) = method.required_mode() {
            if sp.mode != mode {
                return Err(BendersError::MethodMismatch {
                    method,
                    mode: sp.mode,
                });
            }
        }
        let start = Instant::now();
        let diagrams = match method {
            Method::BddCap => sp
                .scenarios
                .par_iter()
                .map(|s| build_cap_bdd(s, build))
                .collect::<Result<Vec<_>, _>>()?,
            Method::BddCost => sp
                .scenarios
                .par_iter()
                .map(|s| build_cost_bdd(s, build))
                .collect::<Result<Vec<_>, _>>()?,
            Method::LShaped => Vec::new(),
        };
        Ok(Prepared {
            sp,
            method,
            diagrams,
            lower: sp.scenarios.iter().map(recourse_lower_bound).collect(),
            build_time: start.elapsed(),
        })
    }

    /// Exact recourse value of scenario `w` at `x`.
    pub fn recourse(&self, w: usize, x: &[bool]) -> Result<Rational, BendersError> {
        match self.method {
            Method::BddCap | Method::BddCost => match shortest_path(&self.diagrams[w], x) {
                Ok(sp) => Ok(sp.value),
                Err(DiagramError::NoOpenPath) => Err(BendersError::NoRecourse(w)),
                Err(e) => Err(e.into()),
            },
            Method::LShaped => ip_recourse(self.sp, w, x),
        }
    }

    /// Recourse value and optimality cuts of scenario `w` at `x`.
    fn separate(
        &self,
        w: usize,
        x: &[bool],
        opts: &BendersOptions,
    ) -> Result<(Rational, Vec<Cut>), BendersError> {
        let s = &self.sp.scenarios[w];
        let mut cuts = Vec::with_capacity(2);
        let tau = match self.method {
            Method::BddCap => {
                let d = cap_duals(&self.diagrams[w], x).map_err(|e| no_path(e, w))?;
                cuts.push(if opts.strengthen {
                    cap_cut_strong(&d, &self.diagrams[w], w)
                } else {
                    cap_cut(&d, &self.diagrams[w], w)
                });
                d.value
            }
            Method::BddCost => {
                let d = cost_duals(&self.diagrams[w], x).map_err(|e| no_path(e, w))?;
                cuts.push(if opts.strengthen {
                    cost_cut_strong(&d, &self.diagrams[w], w)
                } else {
                    cost_cut(&d, &self.diagrams[w], w)
                });
                d.value
            }
            Method::LShaped => {
                let tau = ip_recourse(self.sp, w, x)?;
                cuts.push(match self.sp.lshaped {
                    LShapedVariant::Monotone => lshaped_cut_monotone(tau, x, w),
                    LShapedVariant::Standard => {
                        lshaped_cut(tau, self.lower[w], x, &link_exprs(s), w)
                    }
                });
                tau
            }
        };
        if opts.pure_benders {
            cuts.push(pure_benders_cut(&s.relaxation, &to_f64(x), w)?);
        }
        Ok((tau, cuts))
    }
}

fn no_path(e: CutError, w: usize) -> BendersError {
    match e {
        CutError::Diagram(DiagramError::NoOpenPath) => BendersError::NoRecourse(w),
        e => e.into(),
    }
}

/// Recourse by solving the scenario's binary program; the value is recomputed
/// exactly from the optimal recourse decision.
fn ip_recourse(sp: &StochasticProgram, w: usize, x: &[bool]) -> Result<Rational, BendersError> {
    let s = &sp.scenarios[w];
    let ip = recourse_ip(s, sp.mode, x);
    let res = solve_bnb(&ip, &mut NoCallbacks, &BnbOptions::default());
    if res.status != Status::Optimal {
        return Err(BendersError::NoRecourse(w));
    }
    Ok((0..s.num_vars())
        .filter(|&j| res.primal[j] > 0.5)
        .map(|j| s.arc_cost(j, sp.mode, x))
        .sum())
}

fn to_f64(x: &[bool]) -> Vec<f64> {
    x.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

pub fn solve_risk_neutral(
    sp: &StochasticProgram,
    method: Method,
    options: &BendersOptions,
) -> Result<Solution, BendersError> {
    let prep = Prepared::new(sp, method, &options.build)?;
    solve_prepared(&prep, None, options)
}

pub fn solve_cvar(
    sp: &StochasticProgram,
    method: Method,
    cfg: CvarConfig,
    options: &BendersOptions,
) -> Result<Solution, BendersError> {
    cfg.validate()?;
    let prep = Prepared::new(sp, method, &options.build)?;
    solve_prepared(&prep, Some(cfg), options)
}

/// Master columns of the risk-neutral part plus the CVaR bookkeeping.
struct Layout {
    nb: usize,
    eta: Vec<usize>,
    theta: Vec<usize>,
    /// `(zeta, nu[w])` of every CVaR block, in creation order.
    blocks: Vec<(usize, Vec<usize>)>,
    num_cols: usize,
}

fn build_master(prep: &Prepared, cvar: Option<CvarConfig>) -> (LinearProgram, Layout) {
    let sp = prep.sp;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let scale = 1.0 + cvar.map_or(0.0, |c| c.lambda);
    for c in &sp.first_stage_cost {
        lp.add_binary(scale * rational_to_f64(*c));
    }
    for r in &sp.first_stage_rows {
        lp.add_row(
            r.terms.iter().map(|&(j, a)| (j, a as f64)).collect(),
            r.relation,
            r.rhs as f64,
        );
    }
    let probs: Vec<f64> = sp
        .scenarios
        .iter()
        .map(|s| rational_to_f64(s.probability))
        .collect();
    let eta: Vec<usize> = (0..probs.len())
        .map(|w| {
            lp.add_var(
                probs[w],
                rational_to_f64(prep.lower[w]),
                f64::INFINITY,
                VarKind::Continuous,
            )
        })
        .collect();
    // theta[w] >= eta[w] >= lower[w] at any optimum, so the bound is valid.
    let theta = match cvar {
        Some(c) => (0..probs.len())
            .map(|w| {
                lp.add_var(
                    c.lambda * probs[w],
                    rational_to_f64(prep.lower[w]),
                    f64::INFINITY,
                    VarKind::Continuous,
                )
            })
            .collect(),
        None => Vec::new(),
    };
    let layout = Layout {
        nb: sp.num_first_stage(),
        eta,
        theta,
        blocks: Vec::new(),
        num_cols: lp.num_vars(),
    };
    (lp, layout)
}

/// `eta[w] - sum a_k x_k >= c` for `rhs(x) = c + sum a_k x_k`.
fn cut_row(cut: &Cut, layout: &Layout) -> Row {
    let (c, a) = cut.affine(layout.nb);
    let w = match cut.target {
        crate::cuts::CutTarget::Eta(w) | crate::cuts::CutTarget::Theta(w) => w,
    };
    let mut coeffs = vec![(layout.eta[w], 1.0)];
    for (k, ak) in a.iter().enumerate() {
        if *ak != Rational::from(0) {
            coeffs.push((k, -rational_to_f64(*ak)));
        }
    }
    Row::new(coeffs, Relation::Ge, rational_to_f64(c))
}

/// Output of one separation round at a binary master point.
#[derive(Default)]
struct Round {
    columns: Vec<Column>,
    rows: Vec<Row>,
    /// Full master vector, sized to include `columns`.
    candidate: Vec<f64>,
    candidate_value: f64,
    added: BTreeMap<CutKind, usize>,
    kept: Vec<Cut>,
    subproblem_time: Duration,
}

struct Driver<'p, 'a> {
    prep: &'p Prepared<'a>,
    opts: &'p BendersOptions,
    cvar: Option<CvarConfig>,
    layout: Layout,
    probs: Vec<f64>,
    stats: Stats,
    log: Vec<LogEntry>,
    cuts: Vec<Cut>,
    tried: HashSet<Vec<bool>>,
    lb: f64,
    ub: f64,
    error: Option<BendersError>,
}

impl Driver<'_, '_> {
    fn tolerance(v: f64) -> f64 {
        CUT_TOL * v.abs().max(1.0)
    }

    fn recourse_all(&self, x: &[bool]) -> Result<Vec<Rational>, BendersError> {
        (0..self.probs.len())
            .into_par_iter()
            .map(|w| self.prep.recourse(w, x))
            .collect()
    }

    /// Master vector that prices `x` exactly: `eta = tau` and, under CVaR, every
    /// block at the quantile of `tau`.
    fn candidate(&self, x: &[bool], tau: &[f64]) -> (Vec<f64>, f64) {
        let l = &self.layout;
        let mut v = vec![0.0; l.num_cols];
        for k in 0..l.nb {
            v[k] = if x[k] { 1.0 } else { 0.0 };
        }
        for (w, &t) in tau.iter().enumerate() {
            v[l.eta[w]] = t;
        }
        if let Some(c) = self.cvar {
            let zeta = value_at_risk(tau, &self.probs, c.alpha);
            for (w, &t) in tau.iter().enumerate() {
                v[l.theta[w]] = zeta + (t - zeta).max(0.0) / (1.0 - c.alpha);
            }
            for (z, nu) in &l.blocks {
                v[*z] = zeta;
                for (w, &t) in tau.iter().enumerate() {
                    v[nu[w]] = (t - zeta).max(0.0);
                }
            }
        }
        let value = self.master_value(&v);
        (v, value)
    }

    fn master_value(&self, v: &[f64]) -> f64 {
        let sp = self.prep.sp;
        let scale = 1.0 + self.cvar.map_or(0.0, |c| c.lambda);
        let mut total: f64 = (0..self.layout.nb)
            .map(|k| scale * rational_to_f64(sp.first_stage_cost[k]) * v[k])
            .sum();
        for (w, &p) in self.probs.iter().enumerate() {
            total += p * v[self.layout.eta[w]];
            if let Some(c) = self.cvar {
                total += c.lambda * p * v[self.layout.theta[w]];
            }
        }
        total
    }

    /// Columns and rows of a fresh CVaR block; updates the layout.
    fn append_block(&mut self, round: &mut Round) {
        let alpha = self.cvar.expect("CVaR block without CVaR").alpha;
        let n = self.probs.len();
        let zeta = self.layout.num_cols;
        round.columns.push(Column {
            cost: 0.0,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        });
        let nu: Vec<usize> = (0..n).map(|w| zeta + 1 + w).collect();
        for _ in 0..n {
            round.columns.push(Column {
                cost: 0.0,
                lower: 0.0,
                upper: f64::INFINITY,
            });
        }
        for w in 0..n {
            round.rows.push(Row::new(
                vec![
                    (self.layout.theta[w], 1.0),
                    (zeta, -1.0),
                    (nu[w], -1.0 / (1.0 - alpha)),
                ],
                Relation::Ge,
                0.0,
            ));
            round.rows.push(Row::new(
                vec![(nu[w], 1.0), (self.layout.eta[w], -1.0), (zeta, 1.0)],
                Relation::Ge,
                0.0,
            ));
        }
        self.layout.num_cols += 1 + n;
        self.layout.blocks.push((zeta, nu));
    }

    /// One separation round at the binary point `x` with master values `v`.
    fn round(&mut self, x: &[bool], v: &[f64]) -> Result<Round, BendersError> {
        let start = Instant::now();
        let n = self.probs.len();
        let results: Vec<(Rational, Vec<Cut>)> = (0..n)
            .into_par_iter()
            .map(|w| self.prep.separate(w, x, self.opts))
            .collect::<Result<_, _>>()?;
        let mut round = Round {
            subproblem_time: start.elapsed(),
            ..Round::default()
        };
        let tau: Vec<f64> = results.iter().map(|(t, _)| rational_to_f64(*t)).collect();
        let xf = to_f64(x);
        for (w, (_, cuts)) in results.into_iter().enumerate() {
            let eta = v[self.layout.eta[w]];
            for cut in cuts {
                let rhs = cut.rhs_f64(&xf);
                if rhs > eta + Self::tolerance(rhs) {
                    round.rows.push(cut_row(&cut, &self.layout));
                    *round.added.entry(cut.kind).or_default() += 1;
                    if self.opts.keep_cuts {
                        round.kept.push(cut);
                    }
                }
            }
        }
        if let (Some(c), true) = (self.cvar, round.rows.is_empty()) {
            // Checked in aggregate: several quantiles can be optimal, and a
            // per-scenario test could then keep firing at a priced point.
            let zeta = value_at_risk(&tau, &self.probs, c.alpha);
            let want: f64 = tau
                .iter()
                .zip(&self.probs)
                .map(|(&t, &p)| p * (zeta + (t - zeta).max(0.0) / (1.0 - c.alpha)))
                .sum();
            let have: f64 = self
                .probs
                .iter()
                .enumerate()
                .map(|(w, &p)| p * v[self.layout.theta[w]])
                .sum();
            if want > have + Self::tolerance(want) {
                self.append_block(&mut round);
                *round.added.entry(CutKind::CVaR).or_default() += 1;
            }
        }
        // `append_block` already grew the layout, so the candidate is full size.
        let (cand, value) = self.candidate(x, &tau);
        round.candidate = cand;
        round.candidate_value = value;
        Ok(round)
    }

    fn record(&mut self, round: &Round, lb: f64, callback_time: Duration) {
        self.stats.rounds += 1;
        self.stats.subproblem_time += round.subproblem_time;
        for (&k, &c) in &round.added {
            *self.stats.cuts.entry(k).or_default() += c;
        }
        self.ub = self.ub.min(round.candidate_value);
        self.lb = self.lb.max(lb).min(self.ub);
        self.log.push(LogEntry {
            round: self.stats.rounds,
            lower_bound: self.lb,
            upper_bound: self.ub,
            cuts: round.added.clone(),
            callback_time,
            subproblem_time: round.subproblem_time,
        });
    }

    fn fractional_pb(&mut self, xf: &[f64], v: &[f64]) -> Result<Vec<Row>, BendersError> {
        let sp = self.prep.sp;
        let start = Instant::now();
        let cuts: Vec<Cut> = (0..self.probs.len())
            .into_par_iter()
            .map(|w| pure_benders_cut(&sp.scenarios[w].relaxation, xf, w))
            .collect::<Result<_, _>>()?;
        self.stats.subproblem_time += start.elapsed();
        let mut rows = Vec::new();
        for cut in cuts {
            let w = match cut.target {
                crate::cuts::CutTarget::Eta(w) | crate::cuts::CutTarget::Theta(w) => w,
            };
            let rhs = cut.rhs_f64(xf);
            if rhs > v[self.layout.eta[w]] + Self::tolerance(rhs) {
                rows.push(cut_row(&cut, &self.layout));
                *self.stats.cuts.entry(CutKind::PureBenders).or_default() += 1;
                if self.opts.keep_cuts {
                    self.cuts.push(cut);
                }
            }
        }
        Ok(rows)
    }
}

impl BnbCallbacks for Driver<'_, '_> {
    fn lazy(&mut self, v: &[f64], ctx: &NodeContext) -> LazyOutcome {
        if self.error.is_some() {
            return LazyOutcome::default();
        }
        let start = Instant::now();
        let x: Vec<bool> = v[..self.layout.nb].iter().map(|&b| b > 0.5).collect();
        match self.round(&x, v) {
            Ok(mut round) => {
                self.record(&round, ctx.best_bound, start.elapsed());
                self.cuts.append(&mut round.kept);
                LazyOutcome {
                    columns: round.columns,
                    rows: round.rows,
                    candidate: Some(round.candidate),
                }
            }
            Err(e) => {
                self.error = Some(e);
                LazyOutcome::default()
            }
        }
    }

    fn fractional_cuts(&mut self, v: &[f64], _ctx: &NodeContext) -> Vec<Row> {
        if !self.opts.pure_benders || !self.opts.pb_at_fractional || self.error.is_some() {
            return Vec::new();
        }
        let xf = v[..self.layout.nb].to_vec();
        match self.fractional_pb(&xf, v) {
            Ok(rows) => rows,
            Err(e) => {
                self.error = Some(e);
                Vec::new()
            }
        }
    }

    fn heuristic(&mut self, v: &[f64], _ctx: &NodeContext) -> Option<Vec<f64>> {
        if !self.opts.heuristic || self.error.is_some() {
            return None;
        }
        let x: Vec<bool> = v[..self.layout.nb].iter().map(|&b| b >= 0.5).collect();
        if !self.prep.sp.first_stage_feasible(&x) || !self.tried.insert(x.clone()) {
            return None;
        }
        self.stats.heuristic_calls += 1;
        let start = Instant::now();
        let tau = match self.recourse_all(&x) {
            Ok(t) => t,
            Err(e) => {
                self.error = Some(e);
                return None;
            }
        };
        self.stats.subproblem_time += start.elapsed();
        let tau: Vec<f64> = tau.iter().map(|t| rational_to_f64(*t)).collect();
        let (cand, value) = self.candidate(&x, &tau);
        self.ub = self.ub.min(value);
        Some(cand)
    }
}

pub fn solve_prepared(
    prep: &Prepared,
    cvar: Option<CvarConfig>,
    options: &BendersOptions,
) -> Result<Solution, BendersError> {
    if let Some(c) = cvar {
        c.validate()?;
    }
    let start = Instant::now();
    let (mut master, layout) = build_master(prep, cvar);
    let probs = prep
        .sp
        .scenarios
        .iter()
        .map(|s| rational_to_f64(s.probability))
        .collect();
    let (mean_nodes, mean_arcs) = mean_size(&prep.diagrams);
    let mut driver = Driver {
        prep,
        opts: options,
        cvar,
        layout,
        probs,
        stats: Stats {
            build_time: prep.build_time,
            mean_nodes,
            mean_arcs,
            ..Stats::default()
        },
        log: Vec::new(),
        cuts: Vec::new(),
        tried: HashSet::new(),
        lb: f64::NEG_INFINITY,
        ub: f64::INFINITY,
        error: None,
    };
    let bnb = BnbOptions {
        time_limit: options.time_limit,
        ..BnbOptions::default()
    };

    let (status, best) = if options.pure_loop {
        pure_loop(&mut master, &mut driver, &bnb, start)?
    } else {
        let res = solve_bnb(&master, &mut driver, &bnb);
        if let Some(e) = driver.error.take() {
            return Err(e);
        }
        driver.stats.nodes = res.nodes;
        match res.status {
            Status::Optimal => {
                driver.lb = driver.lb.max(res.bound).min(res.objective);
                driver.ub = driver.ub.min(res.objective);
                (SolveStatus::Optimal, Some(res.primal))
            }
            Status::Infeasible => return Err(BendersError::Infeasible),
            Status::Unbounded => return Err(BendersError::Unbounded),
            Status::Limit => {
                driver.lb = driver.lb.max(res.bound);
                let best = (!res.primal.is_empty()).then_some(res.primal);
                (SolveStatus::Limit, best)
            }
        }
    };
    driver.stats.solve_time = start.elapsed();
    finish(prep, cvar, driver, status, best)
}

/// Master to optimality, separate at its solution, repeat until nothing is violated.
fn pure_loop(
    master: &mut LinearProgram,
    driver: &mut Driver,
    bnb: &BnbOptions,
    start: Instant,
) -> Result<(SolveStatus, Option<Vec<f64>>), BendersError> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..driver.opts.max_rounds {
        let mut opts = bnb.clone();
        if let Some(limit) = bnb.time_limit {
            match limit.checked_sub(start.elapsed()) {
                Some(left) => opts.time_limit = Some(left),
                None => return Ok((SolveStatus::Limit, best.map(|b| b.1))),
            }
        }
        let t0 = Instant::now();
        let res = solve_bnb(master, &mut NoCallbacks, &opts);
        driver.stats.nodes += res.nodes;
        match res.status {
            Status::Optimal => {}
            Status::Infeasible => return Err(BendersError::Infeasible),
            Status::Unbounded => return Err(BendersError::Unbounded),
            Status::Limit => return Ok((SolveStatus::Limit, best.map(|b| b.1))),
        }
        let v = res.primal;
        let x: Vec<bool> = v[..driver.layout.nb].iter().map(|&b| b > 0.5).collect();
        let mut round = driver.round(&x, &v)?;
        driver.record(&round, res.objective, t0.elapsed());
        driver.cuts.append(&mut round.kept);
        if best.as_ref().is_none_or(|(b, _)| round.candidate_value < *b) {
            best = Some((round.candidate_value, round.candidate.clone()));
        }
        if round.rows.is_empty() && round.columns.is_empty() {
            driver.lb = driver.lb.max(res.objective).min(driver.ub);
            return Ok((SolveStatus::Optimal, Some(v)));
        }
        for c in &round.columns {
            master.add_var(c.cost, c.lower, c.upper, VarKind::Continuous);
        }
        for r in round.rows {
            master.rows.push(r);
        }
    }
    Ok((SolveStatus::Limit, best.map(|b| b.1)))
}

fn finish(
    prep: &Prepared,
    cvar: Option<CvarConfig>,
    driver: Driver,
    status: SolveStatus,
    best: Option<Vec<f64>>,
) -> Result<Solution, BendersError> {
    let nb = driver.layout.nb;
    let sp = prep.sp;
    let (x, recourse, exact, cv) = match best {
        Some(v) => {
            let x: Vec<bool> = v[..nb].iter().map(|&b| b > 0.5).collect();
            let tau = driver.recourse_all(&x)?;
            let probs: Vec<Rational> = sp.scenarios.iter().map(|s| s.probability).collect();
            let expected: Rational = tau.iter().zip(&probs).map(|(t, p)| *t * *p).sum();
            let first = sp.first_stage_value(&x);
            let (exact, cv) = match cvar {
                None => (first + expected, None),
                Some(c) => {
                    let lambda = rationalize(c.lambda, 1_000_000);
                    let alpha = rationalize(c.alpha, 1_000_000);
                    let cv = cvar_sorted(&tau, &probs, alpha)?;
                    let one = Rational::from(1);
                    ((one + lambda) * first + expected + lambda * cv, Some(cv))
                }
            };
            (x, tau, Some(exact), cv)
        }
        None => (Vec::new(), Vec::new(), None, None),
    };
    let objective = exact.map_or(f64::INFINITY, rational_to_f64);
    let upper = driver.ub.min(objective);
    let lower = match status {
        SolveStatus::Optimal => objective,
        SolveStatus::Limit => driver.lb.min(upper),
    };
    Ok(Solution {
        status,
        x,
        recourse,
        objective,
        exact_objective: exact,
        cvar: cv,
        lower_bound: lower,
        upper_bound: if status == SolveStatus::Optimal { objective } else { upper },
        stats: driver.stats,
        log: driver.log,
        cuts: driver.cuts,
    })
}

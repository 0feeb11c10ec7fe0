//! Optimality cuts on the per-scenario recourse estimate.
//!
//! A cut reads `eta >= constant - sum coef * expr(x)`. Every term remembers the
//! link indicator it stands for (when it has one), so cuts can be evaluated both on
//! first-stage points and directly on link indicator vectors.

use crate::diagram::{shortest_path, ArcKind, Bdd, DiagramError, DiagramKind, ShortestPath};
use crate::model::{IndicatorExpr, Rational, Relaxation, Scenario};
use crate::solver::{solve_lp, LinearProgram, Sense, Status, VarKind};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Violations below this are ignored when deciding whether to add a cut.
pub const VIOLATION_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CutError {
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("relaxation solve ended with status {0:?}")]
    Relaxation(Status),
    #[error("wrong diagram kind for this cut family")]
    WrongDiagram,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CutKind {
    BddCap,
    BddCapStrong,
    BddCost,
    BddCostStrong,
    LShaped,
    LShapedSmwds,
    PureBenders,
    CVaR,
}

impl CutKind {
    pub const ALL: [CutKind; 8] = [
        CutKind::BddCap,
        CutKind::BddCapStrong,
        CutKind::BddCost,
        CutKind::BddCostStrong,
        CutKind::LShaped,
        CutKind::LShapedSmwds,
        CutKind::PureBenders,
        CutKind::CVaR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CutKind::BddCap => "bdd-cap",
            CutKind::BddCapStrong => "bdd-cap-strong",
            CutKind::BddCost => "bdd-cost",
            CutKind::BddCostStrong => "bdd-cost-strong",
            CutKind::LShaped => "lshaped",
            CutKind::LShapedSmwds => "lshaped-monotone",
            CutKind::PureBenders => "pure-benders",
            CutKind::CVaR => "cvar",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CutTarget {
    Eta(usize),
    Theta(usize),
}

/// Link indicator a term stands for: `rho_link`, or `1 - rho_link` when complemented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkRef {
    pub link: usize,
    pub complemented: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutTerm {
    pub coef: Rational,
    pub expr: IndicatorExpr,
    pub link: Option<LinkRef>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cut {
    pub target: CutTarget,
    pub kind: CutKind,
    pub constant: Rational,
    pub terms: Vec<CutTerm>,
}

impl Cut {
    pub fn rhs(&self, x: &[bool]) -> Rational {
        self.constant
            - self
                .terms
                .iter()
                .map(|t| t.coef * Rational::from(t.expr.value(x)))
                .sum::<Rational>()
    }

    pub fn rhs_f64(&self, x: &[f64]) -> f64 {
        crate::model::rational_to_f64(self.constant)
            - self
                .terms
                .iter()
                .map(|t| crate::model::rational_to_f64(t.coef) * t.expr.value_f64(x))
                .sum::<f64>()
    }

    /// Right-hand side as a function of the link indicators; `None` when some term
    /// has no link meaning.
    pub fn rhs_links(&self, rho: &[bool]) -> Option<Rational> {
        let mut v = self.constant;
        for t in &self.terms {
            let l = t.link?;
            let ind = rho[l.link] != l.complemented;
            if ind {
                v -= t.coef;
            }
        }
        Some(v)
    }

    /// `rhs(x) = constant + sum a_k x_k`; returns the constant and `a`.
    pub fn affine(&self, num_first: usize) -> (Rational, Vec<Rational>) {
        let mut c = self.constant;
        let mut a = vec![Rational::from(0); num_first];
        for t in &self.terms {
            c -= t.coef * Rational::from(t.expr.constant);
            for &(k, g) in &t.expr.terms {
                a[k] -= t.coef * Rational::from(g);
            }
        }
        (c, a)
    }

    /// Merges terms with equal expressions and link meaning; drops zero terms.
    pub fn normalized(mut self) -> Cut {
        let mut merged: BTreeMap<(IndicatorExpr, Option<LinkRef>), Rational> = BTreeMap::new();
        for t in self.terms.drain(..) {
            *merged.entry((t.expr, t.link)).or_default() += t.coef;
        }
        self.terms = merged
            .into_iter()
            .filter(|(_, c)| *c != Rational::from(0))
            .map(|((expr, link), coef)| CutTerm { coef, expr, link })
            .collect();
        self
    }
}

impl fmt::Display for CutTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutTarget::Eta(w) => write!(f, "eta[{w}]"),
            CutTarget::Theta(w) => write!(f, "theta[{w}]"),
        }
    }
}

/// `eta[0] >= 1 - 2*(x0 + x1 + x3)`; the kind is not printed.
impl fmt::Display for Cut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} >= {}", self.target, self.constant)?;
        for t in &self.terms {
            let neg = t.coef < Rational::from(0);
            let c = if neg { -t.coef } else { t.coef };
            let simple = t.expr.constant == 0 && t.expr.terms.len() == 1 && t.expr.terms[0].1 == 1;
            let body = if simple {
                t.expr.to_string()
            } else {
                format!("({})", t.expr)
            };
            let sign = if neg { '+' } else { '-' };
            if c == Rational::from(1) {
                write!(f, " {sign} {body}")?;
            } else {
                write!(f, " {sign} {c}*{body}")?;
            }
        }
        Ok(())
    }
}

/// One log line per cut: `kind,target,constant,coef*[expr];...`.
pub fn write_cut_log<'a>(cuts: impl IntoIterator<Item = &'a Cut>) -> String {
    let mut out = String::from("kind,target,constant,terms\n");
    for c in cuts {
        let terms: Vec<String> = c.terms.iter().map(|t| format!("{}*[{}]", t.coef, t.expr)).collect();
        out.push_str(&format!("{},{},{},{}\n", c.kind.name(), c.target, c.constant, terms.join(";")));
    }
    out
}

/// Node potentials plus the multipliers of the capacity rows (`beta`) or of the
/// waiver terms (`z`). Values are scaled by `scale`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualSolution {
    pub value: Rational,
    pub pi: Vec<i64>,
    /// `(arc, link, beta)` with `beta > 0`.
    pub beta: Vec<(usize, usize, i64)>,
    /// `(one-arc, z)` with `z > 0`.
    pub z: Vec<(usize, i64)>,
    pub scale: i64,
}

impl DualSolution {
    pub fn potential(&self, node: usize) -> Rational {
        Rational::new(self.pi[node], self.scale)
    }
}

fn check_kind(bdd: &Bdd, kind: DiagramKind) -> Result<(), CutError> {
    if bdd.kind == kind {
        Ok(())
    } else {
        Err(CutError::WrongDiagram)
    }
}

/// Potentials from the shortest path at `x`; every blocked arc whose reduced cost
/// would be negative gets `beta` on its lowest-indexed blocking link.
/// Shortest-path potentials, clipped at the root value when no arc cost is
/// negative. Clipping keeps every arc constraint satisfied (a clipped head can
/// only loosen it, a clipped tail sits at or below its head plus a nonnegative
/// cost) and leaves the objective alone, but it bounds every multiplier by the
/// recourse value, which is what lets the strong cuts dominate the no-good cut.
fn capped_shortest_path(bdd: &Bdd, x: &[bool]) -> Result<ShortestPath, CutError> {
    let mut sp = shortest_path(bdd, x)?;
    if bdd.costs_nonnegative() {
        let top = sp.pi[bdd.root];
        for p in &mut sp.pi {
            *p = (*p).min(top);
        }
    }
    Ok(sp)
}

pub fn cap_duals(bdd: &Bdd, x: &[bool]) -> Result<DualSolution, CutError> {
    check_kind(bdd, DiagramKind::Capacity)?;
    let sp = capped_shortest_path(bdd, x)?;
    let mut beta = Vec::new();
    for (a, arc) in bdd.arcs.iter().enumerate() {
        if arc.links.is_empty() || bdd.arc_open(a, x) {
            continue;
        }
        let slack = sp.pi[arc.tail] - sp.pi[arc.head] - bdd.arc_cost_scaled(a, x);
        if slack > 0 {
            let i = *arc
                .links
                .iter()
                .find(|&&i| !bdd.capacities[i].truth(x))
                .expect("blocked arc has a closed link");
            beta.push((a, i, slack));
        }
    }
    Ok(DualSolution {
        value: sp.value,
        pi: sp.pi,
        beta,
        z: Vec::new(),
        scale: bdd.scale(),
    })
}

fn cap_term(bdd: &Bdd, link: usize, v: i64) -> CutTerm {
    CutTerm {
        coef: bdd.unscale(v),
        expr: bdd.capacities[link].clone(),
        link: Some(LinkRef {
            link,
            complemented: false,
        }),
    }
}

pub fn cap_cut(d: &DualSolution, bdd: &Bdd, scenario: usize) -> Cut {
    Cut {
        target: CutTarget::Eta(scenario),
        kind: CutKind::BddCap,
        constant: d.value,
        terms: d.beta.iter().map(|&(_, i, b)| cap_term(bdd, i, b)).collect(),
    }
    .normalized()
}

/// Uses the largest `beta` per (layer, link), since a path crosses each layer once.
/// With nonnegative costs the recourse is nonnegative, so a link's total
/// coefficient is clipped at the recourse value: once that link alone drives the
/// right-hand side to zero, the cut says nothing more.
pub fn cap_cut_strong(d: &DualSolution, bdd: &Bdd, scenario: usize) -> Cut {
    let mut best: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for &(a, i, b) in &d.beta {
        let e = best.entry((bdd.arcs[a].var, i)).or_insert(0);
        *e = (*e).max(b);
    }
    let mut per_link: BTreeMap<usize, i64> = BTreeMap::new();
    for (&(_, i), &b) in &best {
        *per_link.entry(i).or_insert(0) += b;
    }
    let top = d.pi[bdd.root];
    if bdd.costs_nonnegative() {
        for (&i, b) in per_link.iter_mut() {
            if bdd.capacities[i].range().0 >= 0 {
                *b = (*b).min(top);
            }
        }
    }
    Cut {
        target: CutTarget::Eta(scenario),
        kind: CutKind::BddCapStrong,
        constant: d.value,
        terms: per_link.iter().map(|(&i, &b)| cap_term(bdd, i, b)).collect(),
    }
    .normalized()
}

/// Potentials at `x`; `z = max(0, pi_tail - pi_head - cost2)` on every one-arc.
pub fn cost_duals(bdd: &Bdd, x: &[bool]) -> Result<DualSolution, CutError> {
    check_kind(bdd, DiagramKind::Cost)?;
    let sp = capped_shortest_path(bdd, x)?;
    let z = bdd
        .arcs
        .iter()
        .enumerate()
        .filter(|(_, arc)| arc.kind == ArcKind::One)
        .filter_map(|(a, arc)| {
            let v = sp.pi[arc.tail] - sp.pi[arc.head] - bdd.cost2_scaled(arc.var);
            (v > 0).then_some((a, v))
        })
        .collect();
    Ok(DualSolution {
        value: sp.value,
        pi: sp.pi,
        beta: Vec::new(),
        z,
        scale: bdd.scale(),
    })
}

/// Terms on variables without a waiver vanish: their indicator is identically zero.
fn cost_term(bdd: &Bdd, var: usize, v: i64) -> Option<CutTerm> {
    let expr = bdd.waivers[var].clone()?;
    Some(CutTerm {
        coef: bdd.unscale(v),
        expr,
        link: bdd.waiver_links[var].map(|link| LinkRef {
            link,
            complemented: false,
        }),
    })
}

pub fn cost_cut(d: &DualSolution, bdd: &Bdd, scenario: usize) -> Cut {
    Cut {
        target: CutTarget::Eta(scenario),
        kind: CutKind::BddCost,
        constant: d.value,
        terms: d
            .z
            .iter()
            .filter_map(|&(a, z)| cost_term(bdd, bdd.arcs[a].var, z))
            .collect(),
    }
    .normalized()
}

pub fn cost_cut_strong(d: &DualSolution, bdd: &Bdd, scenario: usize) -> Cut {
    let mut best = vec![0i64; bdd.num_vars];
    for &(a, z) in &d.z {
        let j = bdd.arcs[a].var;
        best[j] = best[j].max(z);
    }
    Cut {
        target: CutTarget::Eta(scenario),
        kind: CutKind::BddCostStrong,
        constant: d.value,
        terms: best
            .iter()
            .enumerate()
            .filter(|(_, &z)| z > 0)
            .filter_map(|(j, &z)| cost_term(bdd, j, z))
            .collect(),
    }
    .normalized()
}

/// Upper bound on `[expr(x) = 0]` that vanishes at `xhat` (where `expr >= 1`): the
/// expression itself when it only takes values 0 and 1, otherwise a no-good over
/// the variables it reads.
fn off_indicator(expr: &IndicatorExpr, xhat: &[bool]) -> IndicatorExpr {
    let (lo, hi) = expr.range();
    if lo >= 0 && hi <= 1 {
        return IndicatorExpr::new(1 - expr.constant, expr.terms.iter().map(|&(k, a)| (k, -a)).collect());
    }
    let mut constant = 0;
    let mut terms = Vec::new();
    for &(k, _) in &expr.terms {
        if xhat[k] {
            constant += 1;
            terms.push((k, -1));
        } else {
            terms.push((k, 1));
        }
    }
    IndicatorExpr::new(constant, terms)
}

/// Link expressions of a scenario, as indicators: the capacity expression of a row
/// link or the waiver expression of a variable link.
pub fn link_exprs(s: &Scenario) -> Vec<IndicatorExpr> {
    s.links.iter().map(|l| l.expr.clone()).collect()
}

/// Lower bound on the recourse of `s` at any first-stage point: every variable at
/// its cheapest possible cost, constraints ignored.
pub fn recourse_lower_bound(s: &Scenario) -> Rational {
    let zero = Rational::from(0);
    s.cost1
        .iter()
        .zip(&s.cost2)
        .map(|(&c1, &c2)| zero.min(c2).min(c1 + c2))
        .sum()
}

/// No-good cut in link space, valid when `lower` bounds the recourse from below:
/// `eta >= tau - (tau - lower) * (sum_{rho_hat=1} (1 - rho) + sum_{rho_hat=0} rho)`.
pub fn lshaped_cut(
    tau: Rational,
    lower: Rational,
    xhat: &[bool],
    links: &[IndicatorExpr],
    scenario: usize,
) -> Cut {
    let coef = tau - lower;
    let terms = if coef <= Rational::from(0) {
        Vec::new()
    } else {
        links
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let on = e.truth(xhat);
                CutTerm {
                    coef,
                    expr: if on { off_indicator(e, xhat) } else { e.clone() },
                    link: Some(LinkRef {
                        link: i,
                        complemented: on,
                    }),
                }
            })
            .collect()
    };
    Cut {
        target: CutTarget::Eta(scenario),
        kind: CutKind::LShaped,
        constant: tau,
        terms,
    }
    .normalized()
}

/// No-good cut for recourse that never increases when a first-stage variable
/// switches on: `eta >= tau - tau * sum_{xhat_k = 0} x_k`.
pub fn lshaped_cut_monotone(tau: Rational, xhat: &[bool], scenario: usize) -> Cut {
    let terms = if tau == Rational::from(0) {
        Vec::new()
    } else {
        (0..xhat.len())
            .filter(|&k| !xhat[k])
            .map(|k| CutTerm {
                coef: tau,
                expr: IndicatorExpr::var(k),
                link: None,
            })
            .collect()
    };
    Cut {
        target: CutTarget::Eta(scenario),
        kind: CutKind::LShapedSmwds,
        constant: tau,
        terms,
    }
}

/// Closest fraction with denominator at most `max_den` (continued fractions).
pub fn rationalize(v: f64, max_den: i64) -> Rational {
    if !v.is_finite() {
        return Rational::from(0);
    }
    let neg = v < 0.0;
    let mut f = v.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    for _ in 0..64 {
        let a = f.floor();
        if a > 1e15 {
            break;
        }
        let a = a as i64;
        let (p2, q2) = (a.saturating_mul(p1).saturating_add(p0), a.saturating_mul(q1).saturating_add(q0));
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = f - a as f64;
        if frac < 1e-12 {
            break;
        }
        f = 1.0 / frac;
    }
    if q1 == 0 {
        return Rational::from(v.round() as i64);
    }
    let r = Rational::new(p1, q1);
    if neg {
        -r
    } else {
        r
    }
}

/// Duals of the relaxation solved at `xhat`, as fractions.
pub fn relaxation_duals(rel: &Relaxation, xhat: &[f64]) -> Result<(f64, Vec<Rational>), CutError> {
    let mut lp = LinearProgram::new(Sense::Minimize);
    for &c in &rel.costs {
        lp.add_var(c, 0.0, f64::INFINITY, VarKind::Continuous);
    }
    for r in &rel.rows {
        lp.add_row(r.terms.clone(), r.relation, r.rhs_at(xhat));
    }
    let res = solve_lp(&lp);
    if res.status != Status::Optimal {
        return Err(CutError::Relaxation(res.status));
    }
    Ok((res.objective, res.duals.iter().map(|&d| rationalize(d, 1_000_000)).collect()))
}

/// Benders cut from the relaxation duals `delta`: `eta >= sum delta_i rhs_i(x)`.
pub fn pure_benders_cut(rel: &Relaxation, xhat: &[f64], scenario: usize) -> Result<Cut, CutError> {
    let (_, delta) = relaxation_duals(rel, xhat)?;
    let zero = Rational::from(0);
    let mut constant = zero;
    let mut coef: BTreeMap<usize, Rational> = BTreeMap::new();
    for (r, &d) in rel.rows.iter().zip(&delta) {
        if d == zero {
            continue;
        }
        constant += d * rationalize(r.rhs, 1_000_000);
        for &(k, g) in &r.x_terms {
            *coef.entry(k).or_default() += d * rationalize(g, 1_000_000);
        }
    }
    Ok(Cut {
        target: CutTarget::Eta(scenario),
        kind: CutKind::PureBenders,
        constant,
        terms: coef
            .into_iter()
            .filter(|(_, c)| *c != zero)
            .map(|(k, c)| CutTerm {
                coef: c,
                expr: IndicatorExpr::var(k),
                link: None,
            })
            .collect(),
    })
}

/// Link indicator vector of a scenario at `x`.
pub fn link_truths(s: &Scenario, x: &[bool]) -> Vec<bool> {
    s.links.iter().map(|l| l.expr.truth(x)).collect()
}

#[cfg(test)]
mod tests;

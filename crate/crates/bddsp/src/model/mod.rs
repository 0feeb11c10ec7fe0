//! Problem description for two-stage programs with binary recourse.
//!
//! First-stage variables `x` are binary. Each scenario owns binary recourse variables
//! `y`, a feasible set described by a [`TransitionFunction`], and a list of links that
//! tie the recourse to `x` through affine [`IndicatorExpr`]s.
//!
//! * Capacity-linked programs: link `i` carries a linear constraint over `y` that is
//!   enforced while its expression evaluates to zero and becomes redundant once the
//!   expression is at least one. The expression is the capacity of every diagram arc
//!   that violates the constraint.
//! * Cost-linked programs: link `i` targets a recourse variable `q`; when its
//!   expression is one, the `cost1` part of `q` is waived.

mod equivalent;
mod format;
mod transition;

pub use equivalent::{
    brute_force_recourse, build_deterministic_equivalent, check_complete_recourse,
    recourse_ip, DeterministicEquivalent,
};
pub use format::{parse_program, write_program};
pub use transition::LinearTransition;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

pub use crate::solver::Relation;

pub type Rational = Ratio<i64>;

pub fn rational_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable index {index} out of range (have {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("scenario probabilities sum to {0}, expected 1")]
    ProbabilitySum(Rational),
    #[error("scenario {0}: probability must lie in (0, 1]")]
    Probability(usize),
    #[error("scenario {scenario}: cost1 of variable {var} is negative")]
    NegativeCost1 { scenario: usize, var: usize },
    #[error("scenario {scenario}, link {link}: {reason}")]
    BadLink {
        scenario: usize,
        link: usize,
        reason: String,
    },
    #[error("scenario {0}: cost and variable counts disagree")]
    Shape(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Other(String),
}

/// Affine function `constant + sum coeff * x_j` of first-stage binaries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IndicatorExpr {
    pub constant: i64,
    pub terms: Vec<(usize, i64)>,
}

impl IndicatorExpr {
    pub fn new(constant: i64, terms: Vec<(usize, i64)>) -> Self {
        let mut e = IndicatorExpr { constant, terms };
        e.normalize();
        e
    }

    pub fn var(j: usize) -> Self {
        IndicatorExpr::new(0, vec![(j, 1)])
    }

    /// Plain sum of the given first-stage variables.
    pub fn sum_of(vars: impl IntoIterator<Item = usize>) -> Self {
        IndicatorExpr::new(0, vars.into_iter().map(|j| (j, 1)).collect())
    }

    /// Merges duplicate indices, drops zero coefficients and sorts by index.
    fn normalize(&mut self) {
        self.terms.sort_unstable_by_key(|t| t.0);
        let mut out: Vec<(usize, i64)> = Vec::with_capacity(self.terms.len());
        for &(j, a) in &self.terms {
            match out.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => out.push((j, a)),
            }
        }
        out.retain(|t| t.1 != 0);
        self.terms = out;
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|t| t.0).max()
    }

    pub fn value(&self, x: &[bool]) -> i64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(j, a)| if x[j] { a } else { 0 })
                .sum::<i64>()
    }

    pub fn truth(&self, x: &[bool]) -> bool {
        self.value(x) >= 1
    }

    /// Value at a fractional point, used when cuts are checked against LP solutions.
    pub fn value_f64(&self, x: &[f64]) -> f64 {
        self.constant as f64
            + self
                .terms
                .iter()
                .map(|&(j, a)| a as f64 * x[j])
                .sum::<f64>()
    }

    /// Smallest and largest value over all binary points.
    pub fn range(&self) -> (i64, i64) {
        let lo = self.constant + self.terms.iter().map(|t| t.1.min(0)).sum::<i64>();
        let hi = self.constant + self.terms.iter().map(|t| t.1.max(0)).sum::<i64>();
        (lo, hi)
    }
}

impl fmt::Display for IndicatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_affine(f, self.constant, &self.terms, 'x')
    }
}

pub(crate) fn write_affine(
    f: &mut impl fmt::Write,
    constant: i64,
    terms: &[(usize, i64)],
    letter: char,
) -> fmt::Result {
    let mut first = true;
    if constant != 0 || terms.is_empty() {
        write!(f, "{constant}")?;
        first = false;
    }
    for &(j, a) in terms {
        let (sign, mag) = if a < 0 { ("-", -a) } else { ("+", a) };
        if first {
            if a < 0 {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {sign} ")?;
        }
        if mag == 1 {
            write!(f, "{letter}{j}")?;
        } else {
            write!(f, "{mag}*{letter}{j}")?;
        }
        first = false;
    }
    Ok(())
}

/// Affine value and truth (`value >= 1`) of `expr` at the binary point `x`.
pub fn eval_indicator(expr: &IndicatorExpr, x: &[bool]) -> Result<(i64, bool), ModelError> {
    if let Some(j) = expr.max_index() {
        if j >= x.len() {
            return Err(ModelError::IndexOutOfRange {
                index: j,
                len: x.len(),
            });
        }
    }
    let v = expr.value(x);
    Ok((v, v >= 1))
}

/// Integer linear constraint `sum a_j v_j (rel) rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearRow {
    pub terms: Vec<(usize, i64)>,
    pub relation: Relation,
    pub rhs: i64,
}

impl LinearRow {
    pub fn new(terms: Vec<(usize, i64)>, relation: Relation, rhs: i64) -> Self {
        LinearRow {
            terms,
            relation,
            rhs,
        }
    }

    pub fn activity(&self, v: &[bool]) -> i64 {
        self.terms
            .iter()
            .map(|&(j, a)| if v[j] { a } else { 0 })
            .sum()
    }

    pub fn satisfied(&self, v: &[bool]) -> bool {
        let act = self.activity(v);
        match self.relation {
            Relation::Le => act <= self.rhs,
            Relation::Ge => act >= self.rhs,
            Relation::Eq => act == self.rhs,
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|t| t.0).max()
    }

    /// Smallest and largest activity over binary points.
    pub fn activity_range(&self) -> (i64, i64) {
        let lo = self.terms.iter().map(|t| t.1.min(0)).sum();
        let hi = self.terms.iter().map(|t| t.1.max(0)).sum();
        (lo, hi)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinkTarget {
    /// Constraint over the recourse variables (capacity-linked programs).
    Row(LinearRow),
    /// Recourse variable whose `cost1` is waived (cost-linked programs).
    Var(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub expr: IndicatorExpr,
    pub target: LinkTarget,
}

/// Row of a linear relaxation: `sum a_j v_j (rel) rhs - sum g_k x_k`, with `v >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineRow {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub x_terms: Vec<(usize, f64)>,
}

impl AffineRow {
    pub fn rhs_at(&self, x: &[f64]) -> f64 {
        self.rhs - self.x_terms.iter().map(|&(k, g)| g * x[k]).sum::<f64>()
    }
}

/// Linear relaxation of a scenario's recourse problem, parameterized by `x`.
///
/// Its optimal value must not exceed the recourse value at any binary `x`; the
/// dual solution then yields a cut valid for every `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Relaxation {
    pub costs: Vec<f64>,
    pub rows: Vec<AffineRow>,
}

pub type State = Vec<u64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Feasible(State),
    /// No first-stage decision can repair the violation.
    InfeasibleHard,
    /// Only link constraints are violated; `state` treats them as satisfied.
    InfeasibleSoft { links: Vec<usize>, state: State },
}

/// Layer-by-layer description of the recourse feasible set.
///
/// States are compared by value, so two states must be equal exactly when they
/// admit the same completions.
pub trait TransitionFunction: Send + Sync + fmt::Debug {
    fn initial_state(&self) -> State;
    fn step(&self, state: &State, var: usize, bit: bool) -> Step;
    fn is_accepting(&self, state: &State) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    CapacityLinked,
    CostLinked,
}

/// Problem-specific knowledge that licenses stronger no-good cuts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LShapedVariant {
    #[default]
    Standard,
    /// Recourse never increases when a first-stage variable switches on, so the
    /// cut only needs to react to variables that are off at the generating point.
    Monotone,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: usize,
    pub probability: Rational,
    pub cost1: Vec<Rational>,
    pub cost2: Vec<Rational>,
    /// Constraints on the recourse alone (hard in both modes).
    pub rows: Vec<LinearRow>,
    pub links: Vec<Link>,
    pub relaxation: Relaxation,
    pub transition: Arc<dyn TransitionFunction>,
}

impl Scenario {
    pub fn num_vars(&self) -> usize {
        self.cost1.len()
    }

    /// Link expression waiving `cost1[var]`, if any (cost-linked programs).
    pub fn cost_link(&self, var: usize) -> Option<&IndicatorExpr> {
        self.links.iter().find_map(|l| match l.target {
            LinkTarget::Var(q) if q == var => Some(&l.expr),
            _ => None,
        })
    }

    /// Cost of switching `var` on, at first-stage point `x`.
    pub fn arc_cost(&self, var: usize, mode: Mode, x: &[bool]) -> Rational {
        let full = self.cost1[var] + self.cost2[var];
        match mode {
            Mode::CapacityLinked => full,
            Mode::CostLinked => match self.cost_link(var) {
                Some(e) if e.truth(x) => self.cost2[var],
                _ => full,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct StochasticProgram {
    pub mode: Mode,
    pub first_stage_cost: Vec<Rational>,
    pub first_stage_rows: Vec<LinearRow>,
    pub scenarios: Vec<Scenario>,
    pub lshaped: LShapedVariant,
}

impl StochasticProgram {
    pub fn num_first_stage(&self) -> usize {
        self.first_stage_cost.len()
    }

    pub fn first_stage_feasible(&self, x: &[bool]) -> bool {
        self.first_stage_rows.iter().all(|r| r.satisfied(x))
    }

    pub fn first_stage_value(&self, x: &[bool]) -> Rational {
        self.first_stage_cost
            .iter()
            .zip(x)
            .filter(|(_, &b)| b)
            .map(|(c, _)| *c)
            .sum()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let nb = self.num_first_stage();
        let check = |idx: Option<usize>, len: usize| match idx {
            Some(index) if index >= len => Err(ModelError::IndexOutOfRange { index, len }),
            _ => Ok(()),
        };
        for r in &self.first_stage_rows {
            check(r.max_index(), nb)?;
        }
        let mut total = Rational::zero();
        for s in &self.scenarios {
            if s.probability <= Rational::zero() || s.probability > Rational::from(1) {
                return Err(ModelError::Probability(s.id));
            }
            total += s.probability;
            let ny = s.num_vars();
            if s.cost2.len() != ny {
                return Err(ModelError::Shape(s.id));
            }
            if let Some(var) = s.cost1.iter().position(|c| c.is_negative()) {
                return Err(ModelError::NegativeCost1 {
                    scenario: s.id,
                    var,
                });
            }
            for r in &s.rows {
                check(r.max_index(), ny)?;
            }
            let mut linked = vec![false; ny];
            for (i, l) in s.links.iter().enumerate() {
                check(l.expr.max_index(), nb)?;
                let bad = |reason: &str| ModelError::BadLink {
                    scenario: s.id,
                    link: i,
                    reason: reason.to_string(),
                };
                let (lo, hi) = l.expr.range();
                match (&l.target, self.mode) {
                    (LinkTarget::Row(row), Mode::CapacityLinked) => {
                        check(row.max_index(), ny)?;
                        if lo < 0 {
                            return Err(bad("expression can be negative"));
                        }
                    }
                    (LinkTarget::Var(q), Mode::CostLinked) => {
                        check(Some(*q), ny)?;
                        if lo < 0 || hi > 1 {
                            return Err(bad("expression must stay within {0, 1}"));
                        }
                        if std::mem::replace(&mut linked[*q], true) {
                            return Err(bad("variable linked twice"));
                        }
                    }
                    _ => return Err(bad("link target does not match the program mode")),
                }
            }
            if s.relaxation.costs.len() < ny {
                return Err(ModelError::Shape(s.id));
            }
            for r in &s.relaxation.rows {
                check(r.terms.iter().map(|t| t.0).max(), s.relaxation.costs.len())?;
                check(r.x_terms.iter().map(|t| t.0).max(), nb)?;
            }
        }
        if !self.scenarios.is_empty() && total != Rational::from(1) {
            return Err(ModelError::ProbabilitySum(total));
        }
        Ok(())
    }
}

/// Relaxation derived from the links: capacity links become big-M rows, cost links
/// become `t <= y`, `t <= L(x)` with a credit of `cost1` on `t`. Every recourse
/// variable gets an explicit `y <= 1` row.
pub fn derive_relaxation(
    cost1: &[Rational],
    cost2: &[Rational],
    rows: &[LinearRow],
    links: &[Link],
) -> Relaxation {
    let ny = cost1.len();
    let mut costs: Vec<f64> = (0..ny)
        .map(|j| rational_to_f64(cost1[j] + cost2[j]))
        .collect();
    let mut out = Vec::new();
    let plain = |r: &LinearRow| AffineRow {
        terms: r.terms.iter().map(|&(j, a)| (j, a as f64)).collect(),
        relation: r.relation,
        rhs: r.rhs as f64,
        x_terms: Vec::new(),
    };
    out.extend(rows.iter().map(plain));
    for j in 0..ny {
        out.push(AffineRow {
            terms: vec![(j, 1.0)],
            relation: Relation::Le,
            rhs: 1.0,
            x_terms: Vec::new(),
        });
    }
    for l in links {
        match &l.target {
            LinkTarget::Row(row) => {
                let (lo, hi) = row.activity_range();
                let x_part = |m: i64| -> Vec<(usize, f64)> {
                    l.expr.terms.iter().map(|&(k, a)| (k, (m * a) as f64)).collect()
                };
                // Enforced at R(x) = 0, slack by M once R(x) >= 1.
                if matches!(row.relation, Relation::Ge | Relation::Eq) {
                    let m = (row.rhs - lo).max(0);
                    out.push(AffineRow {
                        terms: row.terms.iter().map(|&(j, a)| (j, a as f64)).collect(),
                        relation: Relation::Ge,
                        rhs: (row.rhs - m * l.expr.constant) as f64,
                        x_terms: x_part(m),
                    });
                }
                if matches!(row.relation, Relation::Le | Relation::Eq) {
                    let m = (hi - row.rhs).max(0);
                    out.push(AffineRow {
                        terms: row.terms.iter().map(|&(j, a)| (j, a as f64)).collect(),
                        relation: Relation::Le,
                        rhs: (row.rhs + m * l.expr.constant) as f64,
                        x_terms: x_part(-m),
                    });
                }
            }
            LinkTarget::Var(q) => {
                let t = costs.len();
                costs.push(-rational_to_f64(cost1[*q]));
                out.push(AffineRow {
                    terms: vec![(t, 1.0), (*q, -1.0)],
                    relation: Relation::Le,
                    rhs: 0.0,
                    x_terms: Vec::new(),
                });
                out.push(AffineRow {
                    terms: vec![(t, 1.0)],
                    relation: Relation::Le,
                    rhs: l.expr.constant as f64,
                    x_terms: l.expr.terms.iter().map(|&(k, a)| (k, -(a as f64))).collect(),
                });
            }
        }
    }
    Relaxation { costs, rows: out }
}

impl Scenario {
    /// Scenario whose feasible set is given by linear rows, with the generic
    /// transition and relaxation.
    pub fn linear(
        id: usize,
        probability: Rational,
        cost1: Vec<Rational>,
        cost2: Vec<Rational>,
        rows: Vec<LinearRow>,
        links: Vec<Link>,
    ) -> Scenario {
        let relaxation = derive_relaxation(&cost1, &cost2, &rows, &links);
        let soft: Vec<LinearRow> = links
            .iter()
            .filter_map(|l| match &l.target {
                LinkTarget::Row(r) => Some(r.clone()),
                LinkTarget::Var(_) => None,
            })
            .collect();
        let transition = Arc::new(LinearTransition::new(cost1.len(), rows.clone(), soft));
        Scenario {
            id,
            probability,
            cost1,
            cost2,
            rows,
            links,
            relaxation,
            transition,
        }
    }
}

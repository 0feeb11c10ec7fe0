//! Text format for stochastic programs.
//!
//! ```text
//! mode cap                      # or: cost
//! lshaped standard              # or: monotone (optional, default standard)
//! first_stage 3
//! cost 1 1 2/3
//! constraint x0 + x1 <= 1
//! scenario 0 1/2
//! vars 2
//! d1 1 1
//! d2 0 0
//! row y0 + y1 >= 1                          # hard recourse constraint
//! link x0 + x2 -> row y0 + 2*y1 >= 1        # capacity-linked
//! link x1 -> y0                             # cost-linked
//! relax_costs 1 1                           # optional explicit relaxation
//! relax_row >= 1 : 0:1 1:1 | 0:1 2:1
//! end
//! ```
//! Affine expressions are sums of `c`, `x<j>` / `y<j>` and `c*x<j>`. Costs are
//! integers or fractions `p/q`. A relaxation row `rel rhs : v-terms | x-terms`
//! reads `sum a v (rel) rhs - sum g x`. Without `relax_*` lines the relaxation is
//! derived from the links. `#` starts a comment.

use super::{
    derive_relaxation, write_affine, AffineRow, IndicatorExpr, LShapedVariant, LinearRow, Link,
    LinkTarget, Mode, ModelError, Rational, Relation, Relaxation, Scenario, StochasticProgram,
};
use std::fmt::Write;

fn perr(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses `c + x3 - 2*x5` style sums; returns the constant and the terms.
fn parse_affine(s: &str, letter: char, line: usize) -> Result<(i64, Vec<(usize, i64)>), ModelError> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(perr(line, "empty expression"));
    }
    let mut constant = 0i64;
    let mut terms = Vec::new();
    let mut rest = compact.as_str();
    while !rest.is_empty() {
        let mut sign = 1i64;
        if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        } else if let Some(r) = rest.strip_prefix('-') {
            sign = -1;
            rest = r;
        }
        let end = rest.find(['+', '-']).unwrap_or(rest.len());
        let (tok, tail) = rest.split_at(end);
        rest = tail;
        let (coef, var) = match tok.split_once('*') {
            Some((c, v)) => (c, Some(v)),
            None if tok.starts_with(letter) => ("1", Some(tok)),
            None => (tok, None),
        };
        let coef: i64 = coef
            .parse()
            .map_err(|_| perr(line, format!("bad coefficient `{coef}`")))?;
        match var {
            Some(v) => {
                let idx = v
                    .strip_prefix(letter)
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| perr(line, format!("bad variable `{v}`, expected {letter}<index>")))?;
                terms.push((idx, sign * coef));
            }
            None => constant += sign * coef,
        }
    }
    Ok((constant, terms))
}

fn parse_relation(tok: &str, line: usize) -> Result<Relation, ModelError> {
    match tok {
        "<=" => Ok(Relation::Le),
        ">=" => Ok(Relation::Ge),
        "=" => Ok(Relation::Eq),
        _ => Err(perr(line, format!("unknown relation `{tok}`"))),
    }
}

/// Parses `<expr> <rel> <int>`.
fn parse_row(s: &str, letter: char, line: usize) -> Result<LinearRow, ModelError> {
    let toks: Vec<&str> = s.split_whitespace().collect();
    let pos = toks
        .iter()
        .position(|t| matches!(*t, "<=" | ">=" | "="))
        .ok_or_else(|| perr(line, "row needs a relation"))?;
    if pos + 2 != toks.len() {
        return Err(perr(line, "row must end with `<rel> <rhs>`"));
    }
    let (constant, terms) = parse_affine(&toks[..pos].join(" "), letter, line)?;
    let rhs: i64 = toks[pos + 1]
        .parse()
        .map_err(|_| perr(line, format!("bad right-hand side `{}`", toks[pos + 1])))?;
    Ok(LinearRow::new(terms, parse_relation(toks[pos], line)?, rhs - constant))
}

fn parse_rationals(toks: &[&str], line: usize) -> Result<Vec<Rational>, ModelError> {
    toks.iter()
        .map(|t| {
            t.parse::<Rational>()
                .map_err(|_| perr(line, format!("bad number `{t}`")))
        })
        .collect()
}

fn parse_pairs(s: &str, line: usize) -> Result<Vec<(usize, f64)>, ModelError> {
    s.split_whitespace()
        .map(|t| {
            let (j, a) = t
                .split_once(':')
                .ok_or_else(|| perr(line, format!("term `{t}` is not index:coef")))?;
            let j = j.parse().map_err(|_| perr(line, format!("bad index `{j}`")))?;
            let a = a.parse().map_err(|_| perr(line, format!("bad coefficient `{a}`")))?;
            Ok((j, a))
        })
        .collect()
}

#[derive(Default)]
struct ScenarioDraft {
    id: usize,
    probability: Rational,
    vars: Option<usize>,
    d1: Vec<Rational>,
    d2: Vec<Rational>,
    rows: Vec<LinearRow>,
    links: Vec<Link>,
    relax_costs: Option<Vec<f64>>,
    relax_rows: Vec<AffineRow>,
}

impl ScenarioDraft {
    fn finish(self, line: usize) -> Result<Scenario, ModelError> {
        let n = self.vars.ok_or_else(|| perr(line, "scenario without `vars`"))?;
        if self.d1.len() != n || self.d2.len() != n {
            return Err(perr(line, format!("d1 and d2 need {n} entries")));
        }
        let mut s = Scenario::linear(
            self.id,
            self.probability,
            self.d1,
            self.d2,
            self.rows,
            self.links,
        );
        match self.relax_costs {
            Some(costs) => {
                s.relaxation = Relaxation {
                    costs,
                    rows: self.relax_rows,
                }
            }
            None if !self.relax_rows.is_empty() => {
                return Err(perr(line, "relax_row without relax_costs"));
            }
            None => {
                s.relaxation = derive_relaxation(&s.cost1, &s.cost2, &s.rows, &s.links);
            }
        }
        Ok(s)
    }
}

pub fn parse_program(text: &str) -> Result<StochasticProgram, ModelError> {
    let mut mode: Option<Mode> = None;
    let mut lshaped = LShapedVariant::Standard;
    let mut first_stage: Option<usize> = None;
    let mut cost: Option<Vec<Rational>> = None;
    let mut constraints = Vec::new();
    let mut scenarios = Vec::new();
    let mut draft: Option<ScenarioDraft> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        let (head, rest) = s.split_once(char::is_whitespace).unwrap_or((s, ""));
        let rest = rest.trim();
        let toks: Vec<&str> = rest.split_whitespace().collect();
        match (head, draft.as_mut()) {
            ("mode", None) => {
                mode = Some(match rest {
                    "cap" => Mode::CapacityLinked,
                    "cost" => Mode::CostLinked,
                    _ => return Err(perr(line, "mode must be cap or cost")),
                })
            }
            ("lshaped", None) => {
                lshaped = match rest {
                    "standard" => LShapedVariant::Standard,
                    "monotone" => LShapedVariant::Monotone,
                    _ => return Err(perr(line, "lshaped must be standard or monotone")),
                }
            }
            ("first_stage", None) => {
                first_stage = Some(rest.parse().map_err(|_| perr(line, "bad first_stage count"))?)
            }
            ("cost", None) => cost = Some(parse_rationals(&toks, line)?),
            ("constraint", None) => constraints.push(parse_row(rest, 'x', line)?),
            ("scenario", None) => {
                if toks.len() != 2 {
                    return Err(perr(line, "scenario needs an id and a probability"));
                }
                draft = Some(ScenarioDraft {
                    id: toks[0].parse().map_err(|_| perr(line, "bad scenario id"))?,
                    probability: parse_rationals(&toks[1..], line)?[0],
                    ..Default::default()
                });
            }
            ("vars", Some(d)) => {
                d.vars = Some(rest.parse().map_err(|_| perr(line, "bad vars count"))?)
            }
            ("d1", Some(d)) => d.d1 = parse_rationals(&toks, line)?,
            ("d2", Some(d)) => d.d2 = parse_rationals(&toks, line)?,
            ("row", Some(d)) => d.rows.push(parse_row(rest, 'y', line)?),
            ("link", Some(d)) => {
                let (lhs, target) = rest
                    .split_once("->")
                    .ok_or_else(|| perr(line, "link needs `->`"))?;
                let (constant, terms) = parse_affine(lhs, 'x', line)?;
                let expr = IndicatorExpr::new(constant, terms);
                let target = target.trim();
                let target = match target.strip_prefix("row") {
                    Some(row) => LinkTarget::Row(parse_row(row, 'y', line)?),
                    None => LinkTarget::Var(
                        target
                            .strip_prefix('y')
                            .and_then(|q| q.parse().ok())
                            .ok_or_else(|| perr(line, "link target must be `row ...` or y<index>"))?,
                    ),
                };
                d.links.push(Link { expr, target });
            }
            ("relax_costs", Some(d)) => {
                d.relax_costs = Some(
                    toks.iter()
                        .map(|t| t.parse::<f64>().map_err(|_| perr(line, format!("bad number `{t}`"))))
                        .collect::<Result<_, _>>()?,
                )
            }
            ("relax_row", Some(d)) => {
                if toks.len() < 3 || toks[2] != ":" {
                    return Err(perr(line, "relax_row needs `<rel> <rhs> : terms | x-terms`"));
                }
                let relation = parse_relation(toks[0], line)?;
                let rhs: f64 = toks[1].parse().map_err(|_| perr(line, "bad right-hand side"))?;
                let body = rest.split_once(':').map(|p| p.1).unwrap_or("");
                let (v, x) = body.split_once('|').unwrap_or((body, ""));
                d.relax_rows.push(AffineRow {
                    terms: parse_pairs(v, line)?,
                    relation,
                    rhs,
                    x_terms: parse_pairs(x, line)?,
                });
            }
            ("end", Some(_)) => {
                scenarios.push(draft.take().expect("open scenario").finish(line)?);
            }
            (other, None) => return Err(perr(line, format!("unexpected `{other}` outside a scenario"))),
            (other, Some(_)) => return Err(perr(line, format!("unexpected `{other}` inside a scenario"))),
        }
    }
    if draft.is_some() {
        return Err(perr(last_line, "missing `end`"));
    }
    let mode = mode.ok_or_else(|| perr(last_line, "missing `mode`"))?;
    let n = first_stage.ok_or_else(|| perr(last_line, "missing `first_stage`"))?;
    let cost = cost.unwrap_or_else(|| vec![Rational::from(0); n]);
    if cost.len() != n {
        return Err(perr(last_line, format!("cost needs {n} entries")));
    }
    let sp = StochasticProgram {
        mode,
        first_stage_cost: cost,
        first_stage_rows: constraints,
        scenarios,
        lshaped,
    };
    sp.validate()?;
    Ok(sp)
}

fn write_row(out: &mut String, r: &LinearRow, letter: char) {
    write_affine(out, 0, &r.terms, letter).unwrap();
    write!(out, " {} {}", r.relation.symbol(), r.rhs).unwrap();
}

fn write_pairs(out: &mut String, terms: &[(usize, f64)]) {
    for &(j, a) in terms {
        write!(out, " {j}:{a}").unwrap();
    }
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_program(sp: &StochasticProgram) -> String {
    let mut out = String::new();
    let mode = match sp.mode {
        Mode::CapacityLinked => "cap",
        Mode::CostLinked => "cost",
    };
    writeln!(out, "mode {mode}").unwrap();
    if sp.lshaped == LShapedVariant::Monotone {
        writeln!(out, "lshaped monotone").unwrap();
    }
    writeln!(out, "first_stage {}", sp.num_first_stage()).unwrap();
    writeln!(out, "cost {}", join(&sp.first_stage_cost)).unwrap();
    for r in &sp.first_stage_rows {
        out.push_str("constraint ");
        write_row(&mut out, r, 'x');
        out.push('\n');
    }
    for s in &sp.scenarios {
        writeln!(out, "scenario {} {}", s.id, s.probability).unwrap();
        writeln!(out, "vars {}", s.num_vars()).unwrap();
        writeln!(out, "d1 {}", join(&s.cost1)).unwrap();
        writeln!(out, "d2 {}", join(&s.cost2)).unwrap();
        for r in &s.rows {
            out.push_str("row ");
            write_row(&mut out, r, 'y');
            out.push('\n');
        }
        for l in &s.links {
            write!(out, "link {} -> ", l.expr).unwrap();
            match &l.target {
                LinkTarget::Row(r) => {
                    out.push_str("row ");
                    write_row(&mut out, r, 'y');
                }
                LinkTarget::Var(q) => write!(out, "y{q}").unwrap(),
            }
            out.push('\n');
        }
        writeln!(out, "relax_costs {}", join(&s.relaxation.costs)).unwrap();
        for r in &s.relaxation.rows {
            write!(out, "relax_row {} {} :", r.relation.symbol(), r.rhs).unwrap();
            write_pairs(&mut out, &r.terms);
            out.push_str(" |");
            write_pairs(&mut out, &r.x_terms);
            out.push('\n');
        }
        out.push_str("end\n");
    }
    out
}

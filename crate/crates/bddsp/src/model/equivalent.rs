use super::{
    rational_to_f64, LinkTarget, Mode, ModelError, Rational, Relation, Scenario,
    StochasticProgram,
};
use crate::solver::{LinearProgram, Sense, VarKind};

/// Monolithic model with one copy of the recourse variables per scenario.
#[derive(Clone, Debug)]
pub struct DeterministicEquivalent {
    pub lp: LinearProgram,
    /// Column of `x_j` is `j`.
    pub num_first_stage: usize,
    /// `y_cols[s][j]`: column of `y_j` in scenario `s`.
    pub y_cols: Vec<Vec<usize>>,
}

pub fn build_deterministic_equivalent(
    sp: &StochasticProgram,
) -> Result<DeterministicEquivalent, ModelError> {
    sp.validate()?;
    let mut lp = LinearProgram::new(Sense::Minimize);
    let nb = sp.num_first_stage();
    for c in &sp.first_stage_cost {
        lp.add_binary(rational_to_f64(*c));
    }
    for r in &sp.first_stage_rows {
        lp.add_row(
            r.terms.iter().map(|&(j, a)| (j, a as f64)).collect(),
            r.relation,
            r.rhs as f64,
        );
    }
    let mut y_cols = Vec::with_capacity(sp.scenarios.len());
    for s in &sp.scenarios {
        let p = rational_to_f64(s.probability);
        let cols: Vec<usize> = (0..s.num_vars())
            .map(|j| lp.add_binary(p * rational_to_f64(s.cost1[j] + s.cost2[j])))
            .collect();
        for r in &s.rows {
            lp.add_row(
                r.terms.iter().map(|&(j, a)| (cols[j], a as f64)).collect(),
                r.relation,
                r.rhs as f64,
            );
        }
        for l in &s.links {
            match &l.target {
                LinkTarget::Row(row) => {
                    let (lo, hi) = row.activity_range();
                    let y_part: Vec<(usize, f64)> =
                        row.terms.iter().map(|&(j, a)| (cols[j], a as f64)).collect();
                    let with_x = |m: i64| {
                        let mut c = y_part.clone();
                        c.extend(l.expr.terms.iter().map(|&(k, a)| (k, (m * a) as f64)));
                        c
                    };
                    if matches!(row.relation, Relation::Ge | Relation::Eq) {
                        let m = (row.rhs - lo).max(0);
                        lp.add_row(with_x(m), Relation::Ge, (row.rhs - m * l.expr.constant) as f64);
                    }
                    if matches!(row.relation, Relation::Le | Relation::Eq) {
                        let m = (hi - row.rhs).max(0);
                        lp.add_row(with_x(-m), Relation::Le, (row.rhs + m * l.expr.constant) as f64);
                    }
                }
                LinkTarget::Var(q) => {
                    // t = min(y_q, L(x)) earns back cost1 of y_q.
                    let t = lp.add_var(-p * rational_to_f64(s.cost1[*q]), 0.0, 1.0, VarKind::Continuous);
                    lp.add_row(vec![(t, 1.0), (cols[*q], -1.0)], Relation::Le, 0.0);
                    let mut c = vec![(t, 1.0)];
                    c.extend(l.expr.terms.iter().map(|&(k, a)| (k, -(a as f64))));
                    lp.add_row(c, Relation::Le, l.expr.constant as f64);
                }
            }
        }
        y_cols.push(cols);
    }
    Ok(DeterministicEquivalent {
        lp,
        num_first_stage: nb,
        y_cols,
    })
}

/// Recourse problem of `s` at the binary point `x`, as a binary program over `y`.
pub fn recourse_ip(s: &Scenario, mode: Mode, x: &[bool]) -> LinearProgram {
    let mut lp = LinearProgram::new(Sense::Minimize);
    for j in 0..s.num_vars() {
        lp.add_binary(rational_to_f64(s.arc_cost(j, mode, x)));
    }
    let add = |lp: &mut LinearProgram, r: &super::LinearRow| {
        lp.add_row(
            r.terms.iter().map(|&(j, a)| (j, a as f64)).collect(),
            r.relation,
            r.rhs as f64,
        );
    };
    for r in &s.rows {
        add(&mut lp, r);
    }
    for l in &s.links {
        if let LinkTarget::Row(row) = &l.target {
            if !l.expr.truth(x) {
                add(&mut lp, row);
            }
        }
    }
    lp
}

/// Recourse value by enumerating every `y`; `None` when no `y` is feasible.
pub fn brute_force_recourse(s: &Scenario, mode: Mode, x: &[bool]) -> Option<Rational> {
    let n = s.num_vars();
    assert!(n <= 24, "brute force over {n} recourse variables");
    let enforced: Vec<&super::LinearRow> = s
        .rows
        .iter()
        .chain(s.links.iter().filter_map(|l| match &l.target {
            LinkTarget::Row(r) if !l.expr.truth(x) => Some(r),
            _ => None,
        }))
        .collect();
    let costs: Vec<Rational> = (0..n).map(|j| s.arc_cost(j, mode, x)).collect();
    let mut best: Option<Rational> = None;
    let mut y = vec![false; n];
    for mask in 0u64..(1u64 << n) {
        for (j, b) in y.iter_mut().enumerate() {
            *b = (mask >> j) & 1 == 1;
        }
        if !enforced.iter().all(|r| r.satisfied(&y)) {
            continue;
        }
        let v: Rational = (0..n).filter(|&j| y[j]).map(|j| costs[j]).sum();
        if best.is_none_or(|b| v < b) {
            best = Some(v);
        }
    }
    best
}

/// Exhaustive check that every feasible first-stage point leaves each scenario
/// feasible. Only meant for tiny programs.
pub fn check_complete_recourse(sp: &StochasticProgram) -> Result<(), ModelError> {
    let nb = sp.num_first_stage();
    if nb > 12 || sp.scenarios.iter().any(|s| s.num_vars() > 12) {
        return Err(ModelError::Other(
            "exhaustive recourse check is limited to 12 variables per stage".into(),
        ));
    }
    let mut x = vec![false; nb];
    for mask in 0u32..(1u32 << nb) {
        for (j, b) in x.iter_mut().enumerate() {
            *b = (mask >> j) & 1 == 1;
        }
        if !sp.first_stage_feasible(&x) {
            continue;
        }
        for s in &sp.scenarios {
            if brute_force_recourse(s, sp.mode, &x).is_none() {
                return Err(ModelError::Other(format!(
                    "scenario {} has no feasible recourse at x = {:?}",
                    s.id,
                    x.iter().map(|&b| b as u8).collect::<Vec<_>>()
                )));
            }
        }
    }
    Ok(())
}

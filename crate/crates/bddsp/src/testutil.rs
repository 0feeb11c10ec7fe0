//! Random small programs shared by unit tests.

use crate::model::{
    check_complete_recourse, IndicatorExpr, LShapedVariant, LinearRow, Link, LinkTarget, Mode,
    Rational, Relation, Scenario, StochasticProgram,
};
use rand::Rng;

pub(crate) fn random_row(rng: &mut impl Rng, ny: usize) -> LinearRow {
    let mut terms = Vec::new();
    for j in 0..ny {
        if rng.gen_bool(0.6) {
            terms.push((j, rng.gen_range(-2..=3)));
        }
    }
    let relation = [Relation::Ge, Relation::Ge, Relation::Le, Relation::Eq][rng.gen_range(0..4)];
    LinearRow::new(terms, relation, rng.gen_range(-1..=2))
}

fn random_expr(rng: &mut impl Rng, nb: usize, mode: Mode) -> IndicatorExpr {
    match mode {
        Mode::CapacityLinked => {
            let mut terms = Vec::new();
            for k in 0..nb {
                if rng.gen_bool(0.5) {
                    terms.push((k, rng.gen_range(1..=2)));
                }
            }
            IndicatorExpr::new(0, terms)
        }
        Mode::CostLinked => {
            let k = rng.gen_range(0..nb);
            if rng.gen_bool(0.7) {
                IndicatorExpr::var(k)
            } else {
                IndicatorExpr::new(1, vec![(k, -1)])
            }
        }
    }
}

/// Random program with relatively complete recourse (rejection sampled).
pub(crate) fn random_program(
    rng: &mut impl Rng,
    mode: Mode,
    max_first: usize,
    max_recourse: usize,
) -> StochasticProgram {
    loop {
        let nb = rng.gen_range(1..=max_first);
        let ny = rng.gen_range(1..=max_recourse);
        let count = rng.gen_range(1..=3);
        let mut first_stage_rows = Vec::new();
        if rng.gen_bool(0.3) {
            let terms = (0..nb).map(|k| (k, 1)).collect();
            first_stage_rows.push(LinearRow::new(terms, Relation::Le, rng.gen_range(1..=nb as i64)));
        }
        let scenarios = (0..count)
            .map(|id| {
                let cost1: Vec<Rational> =
                    (0..ny).map(|_| Rational::from(rng.gen_range(0..=5))).collect();
                let cost2: Vec<Rational> =
                    (0..ny).map(|_| Rational::from(rng.gen_range(-2..=4))).collect();
                let rows: Vec<LinearRow> =
                    (0..rng.gen_range(0..=2)).map(|_| random_row(rng, ny)).collect();
                let links: Vec<Link> = match mode {
                    Mode::CapacityLinked => (0..rng.gen_range(0..=3))
                        .map(|_| Link {
                            expr: random_expr(rng, nb, mode),
                            target: LinkTarget::Row(random_row(rng, ny)),
                        })
                        .collect(),
                    Mode::CostLinked => (0..ny)
                        .filter(|_| rng.gen_bool(0.6))
                        .collect::<Vec<_>>()
                        .into_iter()
                        .map(|q| Link {
                            expr: random_expr(rng, nb, mode),
                            target: LinkTarget::Var(q),
                        })
                        .collect(),
                };
                Scenario::linear(id, Rational::new(1, count as i64), cost1, cost2, rows, links)
            })
            .collect();
        let sp = StochasticProgram {
            mode,
            first_stage_cost: (0..nb).map(|_| Rational::from(rng.gen_range(0..=4))).collect(),
            first_stage_rows,
            scenarios,
            lshaped: LShapedVariant::Standard,
        };
        if sp.validate().is_ok() && check_complete_recourse(&sp).is_ok() {
            return sp;
        }
    }
}

pub(crate) fn bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|j| (mask >> j) & 1 == 1).collect()
}

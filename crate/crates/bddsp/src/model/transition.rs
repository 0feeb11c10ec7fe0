use super::{LinearRow, Relation, State, Step, TransitionFunction};

/// Marks a row that every completion satisfies (or that was relaxed). Activities
/// are stored sign-flipped so that no activity collides with it.
const DONE: u64 = u64::MAX;
const FLIP: u64 = 1 << 63;

fn encode(act: i64) -> u64 {
    (act as u64) ^ FLIP
}

fn decode(v: u64) -> i64 {
    (v ^ FLIP) as i64
}

/// Transition for recourse sets given by integer rows, deciding `y_0, y_1, ...` in order.
///
/// The state stores one running activity per row. A row is closed as soon as every
/// completion satisfies it, so states differing only in closed rows coincide.
/// Hard rows come first, followed by the soft (link) rows in link order.
#[derive(Clone, Debug)]
pub struct LinearTransition {
    num_vars: usize,
    rows: Vec<LinearRow>,
    num_hard: usize,
    /// `dense[r][k]`: coefficient of `y_k` in row `r`.
    dense: Vec<Vec<i64>>,
    /// Smallest and largest contribution of `y_k..` to row `r`, indexed `[r][k]`.
    suffix_lo: Vec<Vec<i64>>,
    suffix_hi: Vec<Vec<i64>>,
}

enum RowStatus {
    Open,
    Closed,
    Violated,
}

impl LinearTransition {
    pub fn new(num_vars: usize, hard: Vec<LinearRow>, soft: Vec<LinearRow>) -> Self {
        let num_hard = hard.len();
        let rows: Vec<LinearRow> = hard.into_iter().chain(soft).collect();
        let mut dense = Vec::with_capacity(rows.len());
        let mut suffix_lo = Vec::with_capacity(rows.len());
        let mut suffix_hi = Vec::with_capacity(rows.len());
        for r in &rows {
            let mut d = vec![0i64; num_vars];
            for &(j, a) in &r.terms {
                d[j] += a;
            }
            let mut lo = vec![0i64; num_vars + 1];
            let mut hi = vec![0i64; num_vars + 1];
            for k in (0..num_vars).rev() {
                lo[k] = lo[k + 1] + d[k].min(0);
                hi[k] = hi[k + 1] + d[k].max(0);
            }
            dense.push(d);
            suffix_lo.push(lo);
            suffix_hi.push(hi);
        }
        LinearTransition {
            num_vars,
            rows,
            num_hard,
            dense,
            suffix_lo,
            suffix_hi,
        }
    }

    /// Status of row `r` with activity `act` once variables before `next` are fixed.
    fn status(&self, r: usize, act: i64, next: usize) -> RowStatus {
        let lo = act + self.suffix_lo[r][next];
        let hi = act + self.suffix_hi[r][next];
        let b = self.rows[r].rhs;
        let (sure, possible) = match self.rows[r].relation {
            Relation::Ge => (lo >= b, hi >= b),
            Relation::Le => (hi <= b, lo <= b),
            Relation::Eq => (lo == b && hi == b, lo <= b && b <= hi),
        };
        if !possible {
            RowStatus::Violated
        } else if sure {
            RowStatus::Closed
        } else {
            RowStatus::Open
        }
    }
}

impl TransitionFunction for LinearTransition {
    fn initial_state(&self) -> State {
        (0..self.rows.len())
            .map(|r| match self.status(r, 0, 0) {
                RowStatus::Closed => DONE,
                _ => encode(0),
            })
            .collect()
    }

    fn step(&self, state: &State, var: usize, bit: bool) -> Step {
        debug_assert!(var < self.num_vars);
        let mut next = state.clone();
        let mut soft = Vec::new();
        for (r, slot) in next.iter_mut().enumerate() {
            if *slot == DONE {
                continue;
            }
            let act = decode(*slot) + if bit { self.dense[r][var] } else { 0 };
            match self.status(r, act, var + 1) {
                RowStatus::Open => *slot = encode(act),
                RowStatus::Closed => *slot = DONE,
                RowStatus::Violated if r < self.num_hard => return Step::InfeasibleHard,
                RowStatus::Violated => {
                    soft.push(r - self.num_hard);
                    *slot = DONE;
                }
            }
        }
        if soft.is_empty() {
            Step::Feasible(next)
        } else {
            Step::InfeasibleSoft {
                links: soft,
                state: next,
            }
        }
    }

    fn is_accepting(&self, state: &State) -> bool {
        state.iter().all(|&s| s == DONE)
    }
}

//! Brute-force oracles over the deterministic equivalent of small dominating-set
//! programs. Everything here is exact and independent of the diagram code.

#![allow(dead_code)]

use bddsp::model::Rational;
use bddsp::smwds::{Graph, Instance, SmwdsScenario};

/// Recourse value of a scenario at every first-stage mask (bit v = vertex v chosen).
///
/// Enumerates every recourse set over the survivors once, then answers each
/// first-stage mask with a superset-minimum table over the survivors left
/// undominated.
pub fn recourse_table(g: &Graph, sc: &SmwdsScenario) -> Vec<i64> {
    let n = g.num_vertices();
    assert!(n <= 20);
    let surv = sc.survivors();
    let s = surv.len();
    let mut local = vec![usize::MAX; n];
    for (k, &v) in surv.iter().enumerate() {
        local[v] = k;
    }
    let closed = |v: usize| -> u32 {
        let mut m = 1u32 << local[v];
        for u in sc.neighbours(g, v) {
            m |= 1 << local[u];
        }
        m
    };
    let nb: Vec<u32> = surv.iter().map(|&v| closed(v)).collect();
    let full = 1usize << s;
    let mut dom = vec![0u32; full];
    let mut cost = vec![0i64; full];
    let mut best = vec![i64::MAX; full];
    best[0] = 0;
    for y in 1..full {
        let k = y.trailing_zeros() as usize;
        let prev = y & (y - 1);
        dom[y] = dom[prev] | nb[k];
        cost[y] = cost[prev] + sc.weights[surv[k]];
        let d = dom[y] as usize;
        best[d] = best[d].min(cost[y]);
    }
    for bit in 0..s {
        for m in 0..full {
            if m & (1 << bit) == 0 {
                best[m] = best[m].min(best[m | 1 << bit]);
            }
        }
    }
    let all = (full - 1) as u32;
    let mut covered = vec![0u32; 1 << n];
    (0..1usize << n)
        .map(|x| {
            if x > 0 {
                let v = x.trailing_zeros() as usize;
                let own = if sc.weights[v] != 0 { nb[local[v]] } else { 0 };
                covered[x] = covered[x & (x - 1)] | own;
            }
            best[(all & !covered[x]) as usize]
        })
        .collect()
}

pub fn mask_bits(m: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| m >> i & 1 == 1).collect()
}

pub fn first_stage_cost(inst: &Instance, x: usize) -> i64 {
    (0..inst.graph.num_vertices())
        .filter(|&v| x >> v & 1 == 1)
        .map(|v| inst.first_stage[v])
        .sum()
}

/// Per-scenario total cost `c x + Q_w(x)` for every mask, equally likely scenarios.
pub struct Oracle {
    pub n: usize,
    pub tables: Vec<Vec<i64>>,
    pub first: Vec<i64>,
}

impl Oracle {
    pub fn new(inst: &Instance, scenarios: &[SmwdsScenario]) -> Oracle {
        let n = inst.graph.num_vertices();
        Oracle {
            n,
            tables: scenarios.iter().map(|s| recourse_table(&inst.graph, s)).collect(),
            first: (0..1usize << n).map(|x| first_stage_cost(inst, x)).collect(),
        }
    }

    pub fn expected(&self, x: usize) -> Rational {
        let total: i64 = self.tables.iter().map(|t| t[x]).sum();
        Rational::from(self.first[x]) + Rational::new(total, self.tables.len() as i64)
    }

    pub fn risk_neutral(&self) -> Rational {
        (0..1usize << self.n).map(|x| self.expected(x)).min().unwrap()
    }

    /// `E f + lambda CVaR_alpha(f)` minimized over x, with `f_w = c x + Q_w(x)`.
    pub fn mean_cvar(&self, lambda: Rational, alpha: Rational) -> Rational {
        (0..1usize << self.n)
            .map(|x| {
                let f: Vec<Rational> = self
                    .tables
                    .iter()
                    .map(|t| Rational::from(self.first[x] + t[x]))
                    .collect();
                self.expected(x) + lambda * sorted_cvar(&f, alpha)
            })
            .min()
            .unwrap()
    }
}

/// CVaR of equally likely outcomes: the alpha-quantile plus the scaled mean excess.
pub fn sorted_cvar(values: &[Rational], alpha: Rational) -> Rational {
    let mut v = values.to_vec();
    v.sort();
    let p = Rational::new(1, v.len() as i64);
    let mut cum = Rational::from(0);
    let mut var = *v.last().unwrap();
    for &q in &v {
        cum += p;
        if cum >= alpha {
            var = q;
            break;
        }
    }
    let excess: Rational = v
        .iter()
        .map(|&q| if q > var { (q - var) * p } else { Rational::from(0) })
        .sum();
    var + excess / (Rational::from(1) - alpha)
}

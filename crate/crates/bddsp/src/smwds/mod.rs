//! Stochastic minimum-weight dominating set.
//!
//! First stage: pick vertices at known weights. Second stage: each scenario draws a
//! weight per vertex, weight zero meaning the vertex failed and left the graph.
//! The surviving vertices must be dominated by the union of both selections, where
//! only surviving vertices dominate.

mod format;
mod saa;
mod transition;

pub use format::{parse_instance, write_instance};
pub use saa::{saa_analysis, write_saa_table, SaaConfig, SaaError, SaaRow};
pub use transition::DominationTransition;

use crate::model::{
    AffineRow, IndicatorExpr, LShapedVariant, LinearRow, Link, LinkTarget, Mode, Rational,
    Relation, Relaxation, Scenario, StochasticProgram,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use std::sync::Arc;
use thiserror::Error;

pub const WEIGHT_RANGE: (i64, i64) = (20, 70);
const CONNECT_RETRIES: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmwdsError {
    #[error("need at least two vertices, got {0}")]
    TooFewVertices(usize),
    #[error("density must lie in (0, 1], got {0}")]
    Density(f64),
    #[error("no connected graph with {edges} edges after {tries} tries")]
    Disconnected { edges: usize, tries: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

/// Simple undirected graph; adjacency lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Graph, SmwdsError> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(SmwdsError::Invalid(format!("bad edge {u}-{v}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
            let len = a.len();
            a.dedup();
            if a.len() != len {
                return Err(SmwdsError::Invalid("repeated edge".into()));
            }
        }
        Ok(Graph { adj })
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    /// Edges with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, a) in self.adj.iter().enumerate() {
            out.extend(a.iter().filter(|&&v| u < v).map(|&v| (u, v)));
        }
        out
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        let n = self.adj.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }
}

/// Per-vertex weight law: `w1` with probability `p1`, `w2` with `p2`, failure with `p0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightDistribution {
    pub w1: i64,
    pub p1: f64,
    pub w2: i64,
    pub p2: f64,
    pub p0: f64,
}

impl WeightDistribution {
    pub fn fixed(w: i64) -> Self {
        WeightDistribution {
            w1: w,
            p1: 1.0,
            w2: w,
            p2: 0.0,
            p0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SmwdsError> {
        let ps = [self.p1, self.p2, self.p0];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) || (ps.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(SmwdsError::Invalid(format!("probabilities {ps:?} do not form a law")));
        }
        if self.w1 <= 0 || self.w2 <= 0 {
            return Err(SmwdsError::Invalid("surviving weights must be positive".into()));
        }
        Ok(())
    }

    pub fn draw(&self, rng: &mut impl Rng) -> i64 {
        let u: f64 = rng.gen();
        if u < self.p1 {
            self.w1
        } else if u < self.p1 + self.p2 {
            self.w2
        } else {
            0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub graph: Graph,
    pub first_stage: Vec<i64>,
    pub distribution: Vec<WeightDistribution>,
    /// Pre-drawn scenarios (a cache), used instead of sampling when present.
    pub scenarios: Vec<SmwdsScenario>,
}

impl Instance {
    pub fn validate(&self) -> Result<(), SmwdsError> {
        let n = self.graph.num_vertices();
        if self.first_stage.len() != n || self.distribution.len() != n {
            return Err(SmwdsError::Invalid("vertex data does not match the graph".into()));
        }
        if self.first_stage.iter().any(|&c| c < 0) {
            return Err(SmwdsError::Invalid("negative first-stage weight".into()));
        }
        for d in &self.distribution {
            d.validate()?;
        }
        for s in &self.scenarios {
            if s.weights.len() != n || s.weights.iter().any(|&w| w < 0) {
                return Err(SmwdsError::Invalid("bad cached scenario".into()));
            }
        }
        Ok(())
    }

    /// Cached scenarios when there are enough of them, otherwise fresh samples.
    pub fn scenarios(&self, count: usize, seed: u64) -> Vec<SmwdsScenario> {
        if self.scenarios.len() >= count {
            self.scenarios[..count].to_vec()
        } else {
            sample_scenarios(&self.distribution, count, seed)
        }
    }
}

/// Realized second-stage weights; zero marks a failed vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SmwdsScenario {
    pub weights: Vec<i64>,
}

impl SmwdsScenario {
    pub fn survivors(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&v| self.weights[v] != 0).collect()
    }

    /// Surviving neighbours of `v`.
    pub fn neighbours(&self, g: &Graph, v: usize) -> Vec<usize> {
        g.neighbours(v)
            .iter()
            .copied()
            .filter(|&u| self.weights[u] != 0)
            .collect()
    }
}

/// Connected `G(n, m)` graph with `m = round(density * n(n-1)/2)` and integer
/// first-stage weights and weight laws drawn from [`WEIGHT_RANGE`].
pub fn generate_instance(n: usize, density: f64, seed: u64) -> Result<Instance, SmwdsError> {
    if n < 2 {
        return Err(SmwdsError::TooFewVertices(n));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(SmwdsError::Density(density));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    let m = ((density * pairs.len() as f64).round() as usize).min(pairs.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = None;
    for _ in 0..CONNECT_RETRIES {
        let mut edges: Vec<(usize, usize)> = sample(&mut rng, pairs.len(), m)
            .into_iter()
            .map(|i| pairs[i])
            .collect();
        edges.sort_unstable();
        let g = Graph::new(n, &edges)?;
        if g.is_connected() {
            graph = Some(g);
            break;
        }
    }
    let graph = graph.ok_or(SmwdsError::Disconnected {
        edges: m,
        tries: CONNECT_RETRIES,
    })?;
    let (lo, hi) = WEIGHT_RANGE;
    let first_stage = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
    let distribution = (0..n)
        .map(|_| {
            let w1 = rng.gen_range(lo..=hi);
            let w2 = rng.gen_range(lo..=hi);
            let raw: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let total: f64 = raw.iter().sum();
            let p1 = raw[0] / total;
            let p2 = raw[1] / total;
            WeightDistribution {
                w1,
                p1,
                w2,
                p2,
                p0: 1.0 - p1 - p2,
            }
        })
        .collect();
    Ok(Instance {
        graph,
        first_stage,
        distribution,
        scenarios: Vec::new(),
    })
}

/// Independent per-vertex draws, reproducible from `seed`.
pub fn sample_scenarios(dist: &[WeightDistribution], count: usize, seed: u64) -> Vec<SmwdsScenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| SmwdsScenario {
            weights: dist.iter().map(|d| d.draw(&mut rng)).collect(),
        })
        .collect()
}

/// Link expression for survivor `v`: `x_v + sum of x_u over surviving neighbours`
/// in capacity mode, `x_v` in cost mode.
pub fn link_expr(g: &Graph, sc: &SmwdsScenario, v: usize, mode: Mode) -> IndicatorExpr {
    match mode {
        Mode::CapacityLinked => {
            IndicatorExpr::sum_of(std::iter::once(v).chain(sc.neighbours(g, v)))
        }
        Mode::CostLinked => IndicatorExpr::var(v),
    }
}

/// One link per survivor, in survivor order: the covering row of that survivor
/// (capacity mode) or the waiver of its second-stage weight (cost mode).
pub fn encode_links(g: &Graph, sc: &SmwdsScenario, mode: Mode) -> Vec<Link> {
    let survivors = sc.survivors();
    let covers = cover_rows(g, sc, &survivors);
    survivors
        .iter()
        .enumerate()
        .zip(covers)
        .map(|((k, &v), row)| Link {
            expr: link_expr(g, sc, v, mode),
            target: match mode {
                Mode::CapacityLinked => LinkTarget::Row(row),
                Mode::CostLinked => LinkTarget::Var(k),
            },
        })
        .collect()
}

fn local_index(survivors: &[usize], n: usize) -> Vec<usize> {
    let mut local = vec![usize::MAX; n];
    for (k, &v) in survivors.iter().enumerate() {
        local[v] = k;
    }
    local
}

fn cover_rows(g: &Graph, sc: &SmwdsScenario, survivors: &[usize]) -> Vec<LinearRow> {
    let local = local_index(survivors, g.num_vertices());
    survivors
        .iter()
        .map(|&v| {
            let terms = std::iter::once(v)
                .chain(sc.neighbours(g, v))
                .map(|u| (local[u], 1))
                .collect();
            LinearRow::new(terms, Relation::Ge, 1)
        })
        .collect()
}

/// Covering relaxation: `sum_{u in N'[v]} y_u >= 1 - x_v - sum_{u in N'(v)} x_u`,
/// `y >= 0`, for every survivor `v`.
fn cover_relaxation(g: &Graph, sc: &SmwdsScenario, survivors: &[usize]) -> Relaxation {
    let local = local_index(survivors, g.num_vertices());
    let rows = survivors
        .iter()
        .map(|&v| {
            let closed: Vec<usize> = std::iter::once(v).chain(sc.neighbours(g, v)).collect();
            AffineRow {
                terms: closed.iter().map(|&u| (local[u], 1.0)).collect(),
                relation: Relation::Ge,
                rhs: 1.0,
                x_terms: closed.iter().map(|&u| (u, 1.0)).collect(),
            }
        })
        .collect();
    Relaxation {
        costs: survivors.iter().map(|&v| sc.weights[v] as f64).collect(),
        rows,
    }
}

/// Recourse problem of one scenario. Recourse variable `k` is survivor `k` in
/// ascending id order, with its realized weight as `cost1`.
pub fn build_scenario(
    g: &Graph,
    sc: &SmwdsScenario,
    id: usize,
    probability: Rational,
    mode: Mode,
) -> Scenario {
    let survivors = sc.survivors();
    let local = local_index(&survivors, g.num_vertices());
    let neighbours: Vec<Vec<usize>> = survivors
        .iter()
        .map(|&v| sc.neighbours(g, v).into_iter().map(|u| local[u]).collect())
        .collect();
    let soft = mode == Mode::CapacityLinked;
    let rows = if soft {
        Vec::new()
    } else {
        cover_rows(g, sc, &survivors)
    };
    Scenario {
        id,
        probability,
        cost1: survivors.iter().map(|&v| Rational::from(sc.weights[v])).collect(),
        cost2: vec![Rational::from(0); survivors.len()],
        rows,
        links: encode_links(g, sc, mode),
        relaxation: cover_relaxation(g, sc, &survivors),
        transition: Arc::new(DominationTransition::new(&neighbours, soft)),
    }
}

/// Equally likely scenarios over the instance graph.
pub fn build_program(inst: &Instance, scenarios: &[SmwdsScenario], mode: Mode) -> StochasticProgram {
    let p = Rational::new(1, scenarios.len().max(1) as i64);
    StochasticProgram {
        mode,
        first_stage_cost: inst.first_stage.iter().map(|&c| Rational::from(c)).collect(),
        first_stage_rows: Vec::new(),
        scenarios: scenarios
            .iter()
            .enumerate()
            .map(|(id, sc)| build_scenario(&inst.graph, sc, id, p, mode))
            .collect(),
        lshaped: LShapedVariant::Monotone,
    }
}

/// Five-vertex example graph with unit weights everywhere and no failures; edges
/// 0-1, 0-3, 1-2, 2-3, 2-4, 3-4.
pub fn five_vertex_example() -> Instance {
    let graph = Graph::new(5, &[(0, 1), (0, 3), (1, 2), (2, 3), (2, 4), (3, 4)]).expect("valid graph");
    Instance {
        graph,
        first_stage: vec![1; 5],
        distribution: vec![WeightDistribution::fixed(1); 5],
        scenarios: vec![SmwdsScenario { weights: vec![1; 5] }],
    }
}

/// Whether `set` dominates every survivor, counting only surviving members.
pub fn dominates(g: &Graph, sc: &SmwdsScenario, set: &[bool]) -> bool {
    sc.survivors().into_iter().all(|v| {
        set[v] || sc.neighbours(g, v).into_iter().any(|u| set[u])
    })
}

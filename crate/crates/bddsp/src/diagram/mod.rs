//! Exact decision diagrams for scenario recourse problems.
//!
//! A diagram has `n + 1` node layers for `n` recourse variables, decided in natural
//! order. Layer `j` arcs fix `y_j`: zero-arcs cost nothing, one-arcs cost
//! `cost1 + cost2` (capacity diagrams) or `cost2 + cost1 * (1 - L_j(x))` (cost
//! diagrams). Arcs of a capacity diagram that violate link constraints carry the
//! links' capacity expressions and are open only when every one of them is at
//! least one.
//!
//! Arc costs are kept as integers scaled by a common denominator, so shortest
//! paths stay exact without rational arithmetic in the inner loops.

mod dump;

pub use dump::write_dump;

use crate::model::{IndicatorExpr, LinkTarget, Rational, Scenario, State, Step};
use num_integer::Integer;
use std::collections::HashMap;
use thiserror::Error;

pub const DEFAULT_NODE_BUDGET: usize = 5_000_000;
pub const DEFAULT_PATH_LIMIT: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("diagram exceeds the node budget of {0}")]
    NodeBudget(usize),
    #[error("more than {0} paths")]
    PathLimit(usize),
    #[error("no open path from root to terminal")]
    NoOpenPath,
    #[error("transition reported a soft violation without naming a link")]
    EmptySoftViolation,
    #[error("soft violation while building a cost diagram")]
    SoftInCostDiagram,
    #[error("cost scale overflows 64-bit integers")]
    Overflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagramKind {
    Capacity,
    Cost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArcKind {
    Zero = 0,
    One = 1,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub layer: usize,
    pub state: State,
    /// Set when reduction folded other nodes into this one.
    pub merged: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub kind: ArcKind,
    pub var: usize,
    /// Links whose capacity expressions bound this arc (sorted, capacity diagrams only).
    pub links: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub node_budget: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Bdd {
    pub kind: DiagramKind,
    pub num_vars: usize,
    pub nodes: Vec<Node>,
    pub arcs: Vec<Arc>,
    /// Arc indices leaving each node, by [`ArcKind`].
    pub out: Vec<[Option<usize>; 2]>,
    pub root: usize,
    pub terminal: usize,
    /// Node ids per layer; ids are numbered layer by layer.
    pub layers: Vec<Vec<usize>>,
    /// Capacity expression of every link (capacity diagrams).
    pub capacities: Vec<IndicatorExpr>,
    /// Waiver expression per variable (cost diagrams).
    pub waivers: Vec<Option<IndicatorExpr>>,
    /// Index of the link holding each waiver.
    pub waiver_links: Vec<Option<usize>>,
    /// Costs times `scale`.
    full_cost: Vec<i64>,
    waived_cost: Vec<i64>,
    scale: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathAssignment {
    pub bits: Vec<bool>,
    pub cost: Rational,
}

#[derive(Clone, Debug)]
pub struct ShortestPath {
    pub value: Rational,
    /// Node potentials times [`Bdd::scale`].
    pub pi: Vec<i64>,
    pub path: PathAssignment,
    /// Arc used at each layer along `path`.
    pub arcs: Vec<usize>,
}

fn common_scale(values: &[Rational]) -> Result<i64, DiagramError> {
    let mut scale = 1i64;
    for v in values {
        scale = scale.lcm(v.denom());
        if scale > 1 << 40 {
            return Err(DiagramError::Overflow);
        }
    }
    Ok(scale)
}

fn scaled(v: Rational, scale: i64) -> Result<i64, DiagramError> {
    v.numer()
        .checked_mul(scale / v.denom())
        .ok_or(DiagramError::Overflow)
}

impl Bdd {
    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn layer_profile(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    pub fn num_capacitated_arcs(&self) -> usize {
        self.arcs.iter().filter(|a| !a.links.is_empty()).count()
    }

    pub fn unscale(&self, v: i64) -> Rational {
        Rational::new(v, self.scale)
    }

    /// Whether arc `a` admits flow at `x`.
    pub fn arc_open(&self, a: usize, x: &[bool]) -> bool {
        self.arcs[a]
            .links
            .iter()
            .all(|&i| self.capacities[i].truth(x))
    }

    /// Cost of arc `a` at `x`, times the scale.
    pub fn arc_cost_scaled(&self, a: usize, x: &[bool]) -> i64 {
        let arc = &self.arcs[a];
        match arc.kind {
            ArcKind::Zero => 0,
            ArcKind::One => match &self.waivers[arc.var] {
                Some(e) if self.kind == DiagramKind::Cost && e.truth(x) => self.waived_cost[arc.var],
                _ => self.full_cost[arc.var],
            },
        }
    }

    /// `cost2` of variable `var`, times the scale.
    pub fn cost2_scaled(&self, var: usize) -> i64 {
        self.waived_cost[var]
    }

    /// `cost1 + cost2` of variable `var`, times the scale.
    pub fn full_cost_scaled(&self, var: usize) -> i64 {
        self.full_cost[var]
    }

    /// No arc can cost less than zero, whatever the first stage does.
    pub fn costs_nonnegative(&self) -> bool {
        self.full_cost.iter().chain(&self.waived_cost).all(|&c| c >= 0)
    }

    pub fn arc_cost(&self, a: usize, x: &[bool]) -> Rational {
        self.unscale(self.arc_cost_scaled(a, x))
    }
}

/// Capacity diagram: built with every link enforced; soft violations reroute to a
/// bypass node whose state treats the violated links as satisfied.
pub fn build_cap_bdd(s: &Scenario, opts: &BuildOptions) -> Result<Bdd, DiagramError> {
    build(s, DiagramKind::Capacity, opts)
}

/// Cost diagram: the plain exact diagram of the recourse set.
pub fn build_cost_bdd(s: &Scenario, opts: &BuildOptions) -> Result<Bdd, DiagramError> {
    build(s, DiagramKind::Cost, opts)
}

struct Raw {
    layer: usize,
    state: State,
    merged: bool,
    out: [Option<(usize, Vec<usize>)>; 2],
}

fn build(s: &Scenario, kind: DiagramKind, opts: &BuildOptions) -> Result<Bdd, DiagramError> {
    let n = s.num_vars();
    let t = &s.transition;
    let mut raw: Vec<Raw> = vec![Raw {
        layer: 0,
        state: t.initial_state(),
        merged: false,
        out: [None, None],
    }];
    let mut current = vec![0usize];
    let mut terminal: Option<usize> = None;
    for k in 0..n {
        let last = k + 1 == n;
        let mut index: HashMap<State, usize> = HashMap::new();
        let mut next = Vec::new();
        for &u in &current {
            for bit in [false, true] {
                let (state, links) = match t.step(&raw[u].state, k, bit) {
                    Step::Feasible(st) => (st, Vec::new()),
                    Step::InfeasibleHard => continue,
                    Step::InfeasibleSoft { mut links, state } => {
                        if kind == DiagramKind::Cost {
                            return Err(DiagramError::SoftInCostDiagram);
                        }
                        if links.is_empty() {
                            return Err(DiagramError::EmptySoftViolation);
                        }
                        links.sort_unstable();
                        links.dedup();
                        (state, links)
                    }
                };
                let head = if last {
                    if !t.is_accepting(&state) {
                        continue;
                    }
                    *terminal.get_or_insert_with(|| {
                        raw.push(Raw {
                            layer: n,
                            state: State::new(),
                            merged: false,
            out: [None, None],
                        });
                        raw.len() - 1
                    })
                } else {
                    match index.get(&state) {
                        Some(&h) => h,
                        None => {
                            raw.push(Raw {
                                layer: k + 1,
                                state: state.clone(),
                                merged: false,
            out: [None, None],
                            });
                            let h = raw.len() - 1;
                            index.insert(state, h);
                            next.push(h);
                            h
                        }
                    }
                };
                raw[u].out[bit as usize] = Some((head, links));
                if raw.len() > opts.node_budget {
                    return Err(DiagramError::NodeBudget(opts.node_budget));
                }
            }
        }
        current = next;
    }
    let terminal = match (n, terminal) {
        (0, _) if t.is_accepting(&raw[0].state) => 0,
        (_, Some(id)) => id,
        _ => return Err(DiagramError::NoOpenPath),
    };
    finish(s, kind, raw, terminal)
}

/// Drops nodes without a path to the terminal, merges equivalent nodes bottom-up and
/// renumbers layer by layer.
fn finish(s: &Scenario, kind: DiagramKind, raw: Vec<Raw>, terminal: usize) -> Result<Bdd, DiagramError> {
    let (nodes, arcs, out, layers, terminal) = reduce_raw(s.num_vars(), raw, terminal)?;
    assemble(s, kind, nodes, arcs, out, layers, terminal)
}

fn assemble(
    s: &Scenario,
    kind: DiagramKind,
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    out: Vec<[Option<usize>; 2]>,
    layers: Vec<Vec<usize>>,
    terminal: usize,
) -> Result<Bdd, DiagramError> {
    let n = s.num_vars();
    let all: Vec<Rational> = s.cost1.iter().chain(&s.cost2).copied().collect();
    let scale = common_scale(&all)?;
    let full_cost = (0..n)
        .map(|j| scaled(s.cost1[j] + s.cost2[j], scale))
        .collect::<Result<_, _>>()?;
    let waived_cost = (0..n)
        .map(|j| scaled(s.cost2[j], scale))
        .collect::<Result<_, _>>()?;
    let capacities = s
        .links
        .iter()
        .map(|l| match l.target {
            LinkTarget::Row(_) => l.expr.clone(),
            LinkTarget::Var(_) => IndicatorExpr::default(),
        })
        .collect();
    let waivers = (0..n).map(|j| s.cost_link(j).cloned()).collect();
    let mut waiver_links = vec![None; n];
    for (i, l) in s.links.iter().enumerate() {
        if let LinkTarget::Var(q) = l.target {
            waiver_links[q] = Some(i);
        }
    }
    Ok(Bdd {
        kind,
        num_vars: n,
        nodes,
        arcs,
        out,
        root: 0,
        terminal,
        layers,
        capacities,
        waivers,
        waiver_links,
        full_cost,
        waived_cost,
        scale,
    })
}

/// Merges equivalent nodes again. Built diagrams are already reduced, so this is
/// the identity on them; it is exposed for diagrams edited by hand.
pub fn reduce(bdd: &Bdd) -> Bdd {
    let mut raw: Vec<Raw> = bdd
        .nodes
        .iter()
        .map(|nd| Raw {
            layer: nd.layer,
            state: nd.state.clone(),
            merged: nd.merged,
            out: [None, None],
        })
        .collect();
    for a in &bdd.arcs {
        raw[a.tail].out[a.kind as usize] = Some((a.head, a.links.clone()));
    }
    let (nodes, arcs, out, layers, terminal) =
        reduce_raw(bdd.num_vars, raw, bdd.terminal).expect("diagram has a root-terminal path");
    Bdd {
        nodes,
        arcs,
        out,
        layers,
        terminal,
        ..bdd.clone()
    }
}

type Parts = (Vec<Node>, Vec<Arc>, Vec<[Option<usize>; 2]>, Vec<Vec<usize>>, usize);

/// Bottom-up merge of nodes with identical outgoing arcs; nodes that cannot reach
/// the terminal vanish. Raw node 0 is the root.
fn reduce_raw(n: usize, raw: Vec<Raw>, terminal: usize) -> Result<Parts, DiagramError> {
        let mut by_layer: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
        for (id, r) in raw.iter().enumerate() {
            by_layer[r.layer].push(id);
        }
        let mut rep: Vec<Option<usize>> = vec![None; raw.len()];
        let mut merged = vec![false; raw.len()];
        rep[terminal] = Some(terminal);
        type Sig = [Option<(usize, Vec<usize>)>; 2];
        for layer in (0..n).rev() {
            let mut seen: HashMap<Sig, usize> = HashMap::new();
            for &u in &by_layer[layer] {
                let sig: Sig = [0, 1].map(|b| {
                    raw[u].out[b]
                        .as_ref()
                        .and_then(|(h, links)| rep[*h].map(|rh| (rh, links.clone())))
                });
                if sig.iter().all(Option::is_none) {
                    continue;
                }
                match seen.get(&sig) {
                    Some(&r) => {
                        rep[u] = Some(r);
                        merged[r] = true;
                    }
                    None => {
                        seen.insert(sig, u);
                        rep[u] = Some(u);
                    }
                }
            }
        }
        if rep[0].is_none() {
            return Err(DiagramError::NoOpenPath);
        }
        let mut new_id = vec![usize::MAX; raw.len()];
        let mut reachable = vec![false; raw.len()];
        reachable[0] = true;
        let mut nodes = Vec::new();
        let mut layers: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
        for layer in 0..=n {
            for &u in &by_layer[layer] {
                if rep[u] != Some(u) || !reachable[u] {
                    continue;
                }
                new_id[u] = nodes.len();
                layers[layer].push(nodes.len());
                nodes.push(Node {
                    layer,
                    state: raw[u].state.clone(),
                    merged: merged[u] || raw[u].merged,
                });
                for b in 0..2 {
                    if let Some((h, _)) = &raw[u].out[b] {
                        if let Some(rh) = rep[*h] {
                            reachable[rh] = true;
                        }
                    }
                }
            }
        }
        let mut arcs = Vec::new();
        let mut out = vec![[None, None]; nodes.len()];
        for layer in 0..n {
            for &u in &by_layer[layer] {
                if new_id[u] == usize::MAX {
                    continue;
                }
                for (b, kind) in [(0, ArcKind::Zero), (1, ArcKind::One)] {
                    if let Some((h, links)) = &raw[u].out[b] {
                        if let Some(rh) = rep[*h] {
                            out[new_id[u]][b] = Some(arcs.len());
                            arcs.push(Arc {
                                tail: new_id[u],
                                head: new_id[rh],
                                kind,
                                var: layer,
                                links: links.clone(),
                            });
                        }
                    }
                }
            }
        }
    Ok((nodes, arcs, out, layers, new_id[terminal]))
}

/// Every root-terminal path open at `x`, with its cost at `x`.
pub fn enumerate_paths(bdd: &Bdd, x: &[bool], limit: usize) -> Result<Vec<PathAssignment>, DiagramError> {
    let mut out = Vec::new();
    let mut bits = vec![false; bdd.num_vars];
    fn walk(
        bdd: &Bdd,
        x: &[bool],
        u: usize,
        cost: i64,
        bits: &mut Vec<bool>,
        out: &mut Vec<PathAssignment>,
        limit: usize,
    ) -> Result<(), DiagramError> {
        if u == bdd.terminal {
            if out.len() >= limit {
                return Err(DiagramError::PathLimit(limit));
            }
            out.push(PathAssignment {
                bits: bits.clone(),
                cost: bdd.unscale(cost),
            });
            return Ok(());
        }
        for a in bdd.out[u].iter().flatten() {
            if !bdd.arc_open(*a, x) {
                continue;
            }
            let arc = &bdd.arcs[*a];
            bits[arc.var] = arc.kind == ArcKind::One;
            walk(bdd, x, arc.head, cost + bdd.arc_cost_scaled(*a, x), bits, out, limit)?;
        }
        Ok(())
    }
    walk(bdd, x, bdd.root, 0, &mut bits, &mut out, limit)?;
    Ok(out)
}

const UNSET: i64 = i64::MIN;

/// Bottom-up shortest paths at `x`.
///
/// Nodes without an open path to the terminal get the largest potential that keeps
/// every open arc dual feasible, `max (pi_tail - cost)` over open arcs entering them.
pub fn shortest_path(bdd: &Bdd, x: &[bool]) -> Result<ShortestPath, DiagramError> {
    let mut pi = Vec::new();
    let mut choice = Vec::new();
    shortest_path_into(bdd, x, &mut pi, &mut choice)?;
    let mut bits = vec![false; bdd.num_vars];
    let mut arcs = Vec::with_capacity(bdd.num_vars);
    let mut u = bdd.root;
    while u != bdd.terminal {
        let a = choice[u].expect("live node has a successor");
        let arc = &bdd.arcs[a];
        bits[arc.var] = arc.kind == ArcKind::One;
        arcs.push(a);
        u = arc.head;
    }
    let value = bdd.unscale(pi[bdd.root]);
    Ok(ShortestPath {
        value,
        path: PathAssignment { bits, cost: value },
        pi,
        arcs,
    })
}

/// Allocation-free core of [`shortest_path`]: fills scaled potentials and the chosen
/// arc per node, returns the scaled value.
pub fn shortest_path_into(
    bdd: &Bdd,
    x: &[bool],
    pi: &mut Vec<i64>,
    choice: &mut Vec<Option<usize>>,
) -> Result<i64, DiagramError> {
    let nn = bdd.nodes.len();
    pi.clear();
    pi.resize(nn, UNSET);
    choice.clear();
    choice.resize(nn, None);
    pi[bdd.terminal] = 0;
    let mut dead = false;
    for layer in (0..bdd.num_vars).rev() {
        for &u in &bdd.layers[layer] {
            let mut best: Option<(i64, usize)> = None;
            // Zero-arc first, so ties keep it.
            for a in bdd.out[u].iter().flatten() {
                let h = bdd.arcs[*a].head;
                if pi[h] == UNSET || choice[h].is_none() && h != bdd.terminal {
                    continue;
                }
                if !bdd.arc_open(*a, x) {
                    continue;
                }
                let v = bdd.arc_cost_scaled(*a, x) + pi[h];
                if best.is_none_or(|(bv, _)| v < bv) {
                    best = Some((v, *a));
                }
            }
            match best {
                Some((v, a)) => {
                    pi[u] = v;
                    choice[u] = Some(a);
                }
                None => dead = true,
            }
        }
    }
    if choice[bdd.root].is_none() && bdd.root != bdd.terminal {
        return Err(DiagramError::NoOpenPath);
    }
    if dead {
        // Arcs are stored in tail-layer order, so tails are final before heads.
        for (a, arc) in bdd.arcs.iter().enumerate() {
            let h = arc.head;
            if choice[h].is_some() || h == bdd.terminal || !bdd.arc_open(a, x) {
                continue;
            }
            if choice[arc.tail].is_none() && pi[arc.tail] == UNSET {
                pi[arc.tail] = 0;
            }
            let cand = pi[arc.tail] - bdd.arc_cost_scaled(a, x);
            if pi[h] == UNSET || cand > pi[h] {
                pi[h] = cand;
            }
        }
        for p in pi.iter_mut() {
            if *p == UNSET {
                *p = 0;
            }
        }
    }
    Ok(pi[bdd.root])
}

/// Mean node and arc counts, as reported in run summaries.
pub fn mean_size(bdds: &[Bdd]) -> (f64, f64) {
    if bdds.is_empty() {
        return (0.0, 0.0);
    }
    let n = bdds.len() as f64;
    let nodes = bdds.iter().map(|b| b.num_nodes()).sum::<usize>() as f64 / n;
    let arcs = bdds.iter().map(|b| b.num_arcs()).sum::<usize>() as f64 / n;
    (nodes, arcs)
}

//! Instance files.
//!
//! ```text
//! vertices 5
//! edge 0 1
//! first_stage 1 1 1 1 1
//! dist 0 31 0.25 60 0.5 0.25     # vertex w1 p1 w2 p2 p0
//! scenario 1 1 0 1 1             # optional cached draw, weight 0 = failed
//! ```
//! `#` starts a comment. Every vertex needs a `dist` line.

use super::{Graph, Instance, SmwdsError, SmwdsScenario, WeightDistribution};
use std::fmt::Write;

pub fn write_instance(inst: &Instance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "vertices {}", inst.graph.num_vertices());
    for (u, v) in inst.graph.edges() {
        let _ = writeln!(s, "edge {u} {v}");
    }
    let _ = writeln!(s, "first_stage {}", join(&inst.first_stage));
    for (v, d) in inst.distribution.iter().enumerate() {
        let _ = writeln!(s, "dist {v} {} {} {} {} {}", d.w1, d.p1, d.w2, d.p2, d.p0);
    }
    for sc in &inst.scenarios {
        let _ = writeln!(s, "scenario {}", join(&sc.weights));
    }
    s
}

fn join(v: &[i64]) -> String {
    v.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
}

pub fn parse_instance(text: &str) -> Result<Instance, SmwdsError> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut first_stage = None;
    let mut dist: Vec<Option<WeightDistribution>> = Vec::new();
    let mut scenarios = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |msg: String| SmwdsError::Parse { line, msg };
        let body = raw.split('#').next().unwrap_or("").trim();
        let mut tok = body.split_whitespace();
        let Some(head) = tok.next() else { continue };
        let rest: Vec<&str> = tok.collect();
        let ints = |xs: &[&str]| -> Result<Vec<i64>, SmwdsError> {
            xs.iter()
                .map(|t| t.parse::<i64>().map_err(|e| err(format!("{t}: {e}"))))
                .collect()
        };
        let need_n = || n.ok_or_else(|| err("`vertices` must come first".into()));
        match head {
            "vertices" => {
                let [v] = rest[..] else { return Err(err("expected one count".into())) };
                let v: usize = v.parse().map_err(|e| err(format!("{v}: {e}")))?;
                n = Some(v);
                dist = vec![None; v];
            }
            "edge" => {
                need_n()?;
                let e = ints(&rest)?;
                let [u, v] = e[..] else { return Err(err("expected two endpoints".into())) };
                if u < 0 || v < 0 {
                    return Err(err("negative vertex".into()));
                }
                edges.push((u as usize, v as usize));
            }
            "first_stage" => {
                let n = need_n()?;
                let c = ints(&rest)?;
                if c.len() != n {
                    return Err(err(format!("expected {n} weights, got {}", c.len())));
                }
                first_stage = Some(c);
            }
            "dist" => {
                let n = need_n()?;
                let [v, w1, p1, w2, p2, p0] = rest[..] else {
                    return Err(err("expected `dist v w1 p1 w2 p2 p0`".into()));
                };
                let f = |t: &str| t.parse::<f64>().map_err(|e| err(format!("{t}: {e}")));
                let i = |t: &str| t.parse::<i64>().map_err(|e| err(format!("{t}: {e}")));
                let v: usize = v.parse().map_err(|e| err(format!("{v}: {e}")))?;
                if v >= n {
                    return Err(err(format!("vertex {v} out of range")));
                }
                let d = WeightDistribution {
                    w1: i(w1)?,
                    p1: f(p1)?,
                    w2: i(w2)?,
                    p2: f(p2)?,
                    p0: f(p0)?,
                };
                d.validate().map_err(|e| err(e.to_string()))?;
                dist[v] = Some(d);
            }
            "scenario" => {
                let n = need_n()?;
                let w = ints(&rest)?;
                if w.len() != n {
                    return Err(err(format!("expected {n} weights, got {}", w.len())));
                }
                scenarios.push(SmwdsScenario { weights: w });
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    let n = n.ok_or(SmwdsError::Parse {
        line: 0,
        msg: "missing `vertices`".into(),
    })?;
    let graph = Graph::new(n, &edges)?;
    let first_stage = first_stage.ok_or(SmwdsError::Parse {
        line: 0,
        msg: "missing `first_stage`".into(),
    })?;
    let distribution = dist
        .into_iter()
        .enumerate()
        .map(|(v, d)| {
            d.ok_or(SmwdsError::Parse {
                line: 0,
                msg: format!("no `dist` line for vertex {v}"),
            })
        })
        .collect::<Result<_, _>>()?;
    let inst = Instance {
        graph,
        first_stage,
        distribution,
        scenarios,
    };
    inst.validate()?;
    Ok(inst)
}

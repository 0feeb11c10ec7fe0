//! Run reports and their CSV schema. The header is fixed; columns that do not
//! apply to a run are left empty.

use bddsp::cuts::CutKind;
use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::{self, Write as _};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Optimal,
    Limit,
    Infeasible,
    MemoryLimit,
    Error,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Optimal => "optimal",
            Outcome::Limit => "limit",
            Outcome::Infeasible => "infeasible",
            Outcome::MemoryLimit => "memory-limit",
            Outcome::Error => "error",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Optimal => 0,
            Outcome::Limit => 2,
            Outcome::Infeasible => 3,
            Outcome::MemoryLimit => 5,
            Outcome::Error => 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub instance: String,
    pub method: String,
    pub pure_benders: bool,
    pub scenarios: usize,
    pub cvar: Option<(f64, f64)>,
    pub outcome: Outcome,
    pub objective: Option<f64>,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub cvar_value: Option<f64>,
    pub wall_time: f64,
    pub build_time: f64,
    pub solve_time: f64,
    /// Mean nodes and arcs per capacity diagram.
    pub cap_size: Option<(f64, f64)>,
    /// Mean nodes and arcs per cost diagram.
    pub cost_size: Option<(f64, f64)>,
    pub cuts: Vec<(CutKind, usize)>,
    pub rounds: usize,
    pub nodes: usize,
    pub message: String,
}

impl RunReport {
    pub fn failed(instance: &str, method: &str, outcome: Outcome, message: String) -> RunReport {
        RunReport {
            instance: instance.to_string(),
            method: method.to_string(),
            pure_benders: false,
            scenarios: 0,
            cvar: None,
            outcome,
            objective: None,
            lower_bound: None,
            upper_bound: None,
            cvar_value: None,
            wall_time: 0.0,
            build_time: 0.0,
            solve_time: 0.0,
            cap_size: None,
            cost_size: None,
            cuts: Vec::new(),
            rounds: 0,
            nodes: 0,
            message,
        }
    }

    /// `(UB - LB) / max(|UB|, 1)`, clamped at zero.
    pub fn gap(&self) -> Option<f64> {
        let (lb, ub) = (self.lower_bound?, self.upper_bound?);
        if !ub.is_finite() {
            return Some(f64::INFINITY);
        }
        Some(((ub - lb) / ub.abs().max(1.0)).max(0.0))
    }
}

pub fn header() -> String {
    let mut h = String::from(
        "instance,method,pure_benders,scenarios,cvar_lambda,cvar_alpha,status,objective,\
         lower_bound,upper_bound,gap,cvar,wall_s,build_s,solve_s,\
         cap_nodes,cap_arcs,cost_nodes,cost_arcs",
    );
    for k in CutKind::ALL {
        let _ = write!(h, ",cuts_{}", k.name());
    }
    h.push_str(",rounds,bnb_nodes,message");
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn row(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{},{}",
        csv_field(&r.instance),
        r.method,
        r.pure_benders,
        r.scenarios,
        opt(r.cvar.map(|c| c.0)),
        opt(r.cvar.map(|c| c.1)),
        r.outcome.name(),
        opt(r.objective),
        opt(r.lower_bound),
        opt(r.upper_bound),
        opt(r.gap()),
        opt(r.cvar_value),
        r.wall_time,
        r.build_time,
        r.solve_time,
        opt(r.cap_size.map(|c| c.0)),
        opt(r.cap_size.map(|c| c.1)),
        opt(r.cost_size.map(|c| c.0)),
        opt(r.cost_size.map(|c| c.1)),
    );
    for k in CutKind::ALL {
        let n = r.cuts.iter().find(|c| c.0 == k).map_or(0, |c| c.1);
        let _ = write!(s, ",{n}");
    }
    let _ = write!(s, ",{},{},{}", r.rounds, r.nodes, csv_field(&r.message));
    s
}

/// Appends rows, writing the header first when the file is new or empty.
pub fn append(path: &Path, reports: &[RunReport]) -> io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut out = String::new();
    if f.metadata()?.len() == 0 {
        out.push_str(&header());
        out.push('\n');
    }
    for r in reports {
        out.push_str(&row(r));
        out.push('\n');
    }
    f.write_all(out.as_bytes())
}

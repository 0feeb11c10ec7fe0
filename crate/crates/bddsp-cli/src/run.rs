use crate::report::{Outcome, RunReport};
use bddsp::benders::{
    solve_prepared, write_solve_log, BendersError, BendersOptions, CvarConfig, Method, Prepared,
    SolveStatus,
};
use bddsp::diagram::{write_dump, Bdd, BuildOptions, DiagramError, DiagramKind};
use bddsp::model::{rational_to_f64, Mode};
use bddsp::smwds::{build_program, Instance};
use std::path::PathBuf;
use std::time::{Duration, Instant};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub method: Method,
    pub scenarios: usize,
    pub scenario_seed: u64,
    pub pure_benders: bool,
    pub cvar: Option<CvarConfig>,
    pub time_limit: Option<Duration>,
    pub node_budget: usize,
    pub memory_budget: u64,
    pub dump_dir: Option<PathBuf>,
    pub log_path: Option<PathBuf>,
}

pub fn program_mode(m: Method) -> Mode {
    m.required_mode().unwrap_or(Mode::CapacityLinked)
}

/// Rough resident size of the diagrams: node and arc records plus their heap parts.
pub fn estimate_bytes(diagrams: &[Bdd]) -> u64 {
    let node = std::mem::size_of::<bddsp::diagram::Node>() as u64;
    let arc = std::mem::size_of::<bddsp::diagram::Arc>() as u64;
    diagrams
        .iter()
        .map(|d| {
            let states: u64 = d.nodes.iter().map(|n| 8 * n.state.len() as u64).sum();
            let links: u64 = d.arcs.iter().map(|a| 8 * a.links.len() as u64).sum();
            d.nodes.len() as u64 * (node + 24) + d.arcs.len() as u64 * (arc + 16) + states + links
        })
        .sum()
}

fn classify(e: &BendersError) -> Outcome {
    match e {
        BendersError::Diagram(DiagramError::NodeBudget(_)) => Outcome::MemoryLimit,
        BendersError::Infeasible | BendersError::NoRecourse(_) => Outcome::Infeasible,
        _ => Outcome::Error,
    }
}

pub fn solve_instance(name: &str, inst: &Instance, cfg: &RunConfig) -> RunReport {
    let wall = Instant::now();
    let mut report = RunReport::failed(name, cfg.method.name(), Outcome::Error, String::new());
    report.pure_benders = cfg.pure_benders;
    report.scenarios = cfg.scenarios;
    report.cvar = cfg.cvar.map(|c| (c.lambda, c.alpha));
    let sample = inst.scenarios(cfg.scenarios, cfg.scenario_seed);
    let sp = build_program(inst, &sample, program_mode(cfg.method));
    let build = BuildOptions {
        node_budget: cfg.node_budget,
    };
    let prep = match Prepared::new(&sp, cfg.method, &build) {
        Ok(p) => p,
        Err(e) => {
            report.outcome = classify(&e);
            report.message = e.to_string();
            report.wall_time = wall.elapsed().as_secs_f64();
            return report;
        }
    };
    report.build_time = prep.build_time.as_secs_f64();
    let bytes = estimate_bytes(&prep.diagrams);
    if bytes > cfg.memory_budget {
        report.outcome = Outcome::MemoryLimit;
        report.message = format!("diagrams need about {bytes} bytes, budget {}", cfg.memory_budget);
        report.wall_time = wall.elapsed().as_secs_f64();
        return report;
    }
    if let Some(dir) = &cfg.dump_dir {
        if let Err(e) = dump(dir, name, &prep.diagrams) {
            report.message = format!("dump failed: {e}");
            report.wall_time = wall.elapsed().as_secs_f64();
            return report;
        }
    }
    let opts = BendersOptions {
        pure_benders: cfg.pure_benders,
        time_limit: cfg.time_limit,
        build,
        ..BendersOptions::default()
    };
    match solve_prepared(&prep, cfg.cvar, &opts) {
        Ok(sol) => {
            report.outcome = match sol.status {
                SolveStatus::Optimal => Outcome::Optimal,
                SolveStatus::Limit => Outcome::Limit,
            };
            if !sol.x.is_empty() {
                report.objective = Some(sol.objective);
            }
            report.lower_bound = Some(sol.lower_bound);
            report.upper_bound = Some(sol.upper_bound);
            report.cvar_value = sol.cvar.map(rational_to_f64);
            report.solve_time = sol.stats.solve_time.as_secs_f64();
            let size = Some((sol.stats.mean_nodes, sol.stats.mean_arcs));
            match prep.diagrams.first().map(|d| d.kind) {
                Some(DiagramKind::Capacity) => report.cap_size = size,
                Some(DiagramKind::Cost) => report.cost_size = size,
                None => {}
            }
            report.cuts = sol.stats.cuts.iter().map(|(k, n)| (*k, *n)).collect();
            report.rounds = sol.stats.rounds;
            report.nodes = sol.stats.nodes;
            report.message = selection(&sol.x);
            if let Some(path) = &cfg.log_path {
                if let Err(e) = std::fs::write(path, write_solve_log(&sol.log)) {
                    report.message = format!("log write failed: {e}");
                }
            }
        }
        Err(e) => {
            report.outcome = classify(&e);
            report.message = e.to_string();
        }
    }
    report.wall_time = wall.elapsed().as_secs_f64();
    report
}

/// First-stage selection as `x=` followed by the chosen vertex ids.
fn selection(x: &[bool]) -> String {
    let ids: Vec<String> = (0..x.len()).filter(|&i| x[i]).map(|i| i.to_string()).collect();
    format!("x={}", ids.join(" "))
}

fn dump(dir: &std::path::Path, name: &str, diagrams: &[Bdd]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (w, d) in diagrams.iter().enumerate() {
        std::fs::write(dir.join(format!("{name}_s{w}.bdd")), write_dump(d))?;
    }
    Ok(())
}

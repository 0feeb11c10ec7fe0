//! `bddsp` command line: instance generation, single solves, method comparison
//! and SAA studies. Reports are CSV with a fixed header.

mod report;
mod run;

use bddsp::benders::{BendersOptions, CvarConfig, Method};
use bddsp::diagram::DEFAULT_NODE_BUDGET;
use bddsp::smwds::{
    five_vertex_example, generate_instance, parse_instance, saa_analysis, write_instance,
    write_saa_table, Instance, SaaConfig, SaaError, SaaRow,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use report::{Outcome, RunReport};
use run::{solve_instance, RunConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;
const USAGE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "bddsp", version, about = "Decision-diagram Benders decomposition for two-stage stochastic programs")]
struct Cli {
    /// Worker threads for instances and scenario subproblems (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write a random dominating-set instance.
    Generate(GenerateArgs),
    /// Solve one instance and append a report row.
    Solve(SolveArgs),
    /// Solve every instance in a directory with several methods.
    Compare(CompareArgs),
    /// Sample average approximation study of one instance.
    Saa(SaaArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, required_unless_present = "example")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the five-vertex worked example instead of a random instance.
    #[arg(long)]
    example: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    BddCap,
    BddCost,
    Lshaped,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::BddCap => Method::BddCap,
            MethodArg::BddCost => Method::BddCost,
            MethodArg::Lshaped => Method::LShaped,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct Budgets {
    /// Node budget per diagram.
    #[arg(long, env = "BDDSP_NODE_BUDGET", default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: usize,
    /// Estimated memory budget for all diagrams of a run, in bytes.
    #[arg(long, env = "BDDSP_MEMORY_BUDGET", default_value_t = DEFAULT_MEMORY_BUDGET)]
    memory_budget: u64,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 1)]
    scenarios: usize,
    #[arg(long, default_value_t = 0)]
    scenario_seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::BddCost)]
    method: MethodArg,
    #[arg(long)]
    pure_benders: bool,
    #[arg(long, requires_all = ["lambda", "alpha"])]
    cvar: bool,
    #[arg(long, requires = "cvar")]
    lambda: Option<f64>,
    #[arg(long, requires = "cvar")]
    alpha: Option<f64>,
    /// Seconds for the solve phase; diagram construction is not counted.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Directory for text dumps of every scenario diagram.
    #[arg(long)]
    dump_bdd: Option<PathBuf>,
    /// Per-round bound and cut log (CSV).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Report CSV; the row is appended.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    budgets: Budgets,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    instances: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "bdd-cap,bdd-cost,lshaped")]
    methods: Vec<MethodArg>,
    #[arg(long, default_value_t = 1)]
    scenarios: usize,
    #[arg(long, default_value_t = 0)]
    scenario_seed: u64,
    #[arg(long)]
    pure_benders: bool,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    budgets: Budgets,
}

#[derive(Args, Debug)]
struct SaaArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "10,50,100")]
    counts: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Size of the independent evaluation sample.
    #[arg(long, default_value_t = 1000)]
    eval: usize,
    /// Evaluate on the first replication's sample instead (sanity check).
    #[arg(long)]
    eval_on_training: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::BddCost)]
    method: MethodArg,
    #[arg(long)]
    pure_benders: bool,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(USAGE);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let code = match cli.cmd {
        Cmd::Generate(a) => generate(a),
        Cmd::Solve(a) => solve(a),
        Cmd::Compare(a) => compare(a),
        Cmd::Saa(a) => saa(a),
    };
    ExitCode::from(code)
}

fn usage(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    USAGE
}

fn time_limit(s: Option<f64>) -> Result<Option<Duration>, String> {
    match s {
        None => Ok(None),
        Some(t) if t.is_finite() && t >= 0.0 => Ok(Some(Duration::from_secs_f64(t))),
        Some(t) => Err(format!("bad time limit {t}")),
    }
}

fn load(path: &Path) -> Result<Instance, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let inst = parse_instance(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    inst.validate().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(inst)
}

fn instance_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn generate(a: GenerateArgs) -> u8 {
    let inst = if a.example {
        five_vertex_example()
    } else {
        match generate_instance(a.n.unwrap_or(0), a.density, a.seed) {
            Ok(i) => i,
            Err(e) => return usage(e),
        }
    };
    if let Err(e) = std::fs::write(&a.out, write_instance(&inst)) {
        return usage(format!("{}: {e}", a.out.display()));
    }
    println!(
        "wrote {} vertices, {} edges to {}",
        inst.graph.num_vertices(),
        inst.graph.edges().len(),
        a.out.display()
    );
    0
}

fn solve(a: SolveArgs) -> u8 {
    let inst = match load(&a.instance) {
        Ok(i) => i,
        Err(e) => return usage(e),
    };
    if a.scenarios == 0 {
        return usage("--scenarios must be positive");
    }
    let cvar = if a.cvar {
        match CvarConfig::new(a.lambda.unwrap_or(0.0), a.alpha.unwrap_or(0.5)) {
            Ok(c) => Some(c),
            Err(e) => return usage(e),
        }
    } else {
        None
    };
    let limit = match time_limit(a.time_limit) {
        Ok(l) => l,
        Err(e) => return usage(e),
    };
    let cfg = RunConfig {
        method: a.method.into(),
        scenarios: a.scenarios,
        scenario_seed: a.scenario_seed,
        pure_benders: a.pure_benders,
        cvar,
        time_limit: limit,
        node_budget: a.budgets.node_budget,
        memory_budget: a.budgets.memory_budget,
        dump_dir: a.dump_bdd,
        log_path: a.log,
    };
    let r = solve_instance(&instance_name(&a.instance), &inst, &cfg);
    print_report(&r);
    if let Some(out) = &a.out {
        if let Err(e) = report::append(out, std::slice::from_ref(&r)) {
            return usage(format!("{}: {e}", out.display()));
        }
    }
    r.outcome.exit_code() as u8
}

fn print_report(r: &RunReport) {
    println!("status {}", r.outcome.name());
    if let Some(o) = r.objective {
        println!("objective {o}");
    }
    if let (Some(lb), Some(ub)) = (r.lower_bound, r.upper_bound) {
        println!("bounds {lb} {ub} gap {}", r.gap().unwrap_or(0.0));
    }
    if let Some(c) = r.cvar_value {
        println!("cvar {c}");
    }
    if !r.message.is_empty() {
        println!("{}", r.message);
    }
}

fn compare(a: CompareArgs) -> u8 {
    let limit = match time_limit(a.time_limit) {
        Ok(l) => l,
        Err(e) => return usage(e),
    };
    let mut paths: Vec<PathBuf> = match std::fs::read_dir(&a.instances) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect(),
        Err(e) => return usage(format!("{}: {e}", a.instances.display())),
    };
    paths.sort();
    let rows: Vec<RunReport> = paths
        .par_iter()
        .flat_map_iter(|p| {
            let name = instance_name(p);
            let loaded = load(p);
            a.methods.iter().map(move |&m| {
                let method: Method = m.into();
                match &loaded {
                    Ok(inst) => {
                        let cfg = RunConfig {
                            method,
                            scenarios: a.scenarios,
                            scenario_seed: a.scenario_seed,
                            pure_benders: a.pure_benders,
                            cvar: None,
                            time_limit: limit,
                            node_budget: a.budgets.node_budget,
                            memory_budget: a.budgets.memory_budget,
                            dump_dir: None,
                            log_path: None,
                        };
                        solve_instance(&name, inst, &cfg)
                    }
                    Err(e) => RunReport::failed(&name, method.name(), Outcome::Error, e.clone()),
                }
            }).collect::<Vec<_>>()
        })
        .collect();
    let _ = std::fs::remove_file(&a.out);
    if let Err(e) = report::append(&a.out, &rows) {
        return usage(format!("{}: {e}", a.out.display()));
    }
    let failed = rows.iter().filter(|r| r.outcome == Outcome::Error).count();
    println!("{} runs, {failed} failed", rows.len());
    0
}

fn saa_csv(rows: &[SaaRow]) -> String {
    let mut s = String::from(
        "scenarios,lb_lo,lb_hi,ub_lo,ub_hi,worst_gap_pct,lb_mean,ub_mean,point_gap_pct,all_optimal\n",
    );
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.scenarios,
            r.lb_ci.0,
            r.lb_ci.1,
            r.ub_ci.0,
            r.ub_ci.1,
            r.worst_gap_pct,
            r.lb_mean,
            r.ub_mean,
            r.point_gap_pct,
            r.all_optimal
        ));
    }
    s
}

fn saa(a: SaaArgs) -> u8 {
    let inst = match load(&a.instance) {
        Ok(i) => i,
        Err(e) => return usage(e),
    };
    let limit = match time_limit(a.time_limit) {
        Ok(l) => l,
        Err(e) => return usage(e),
    };
    let cfg = SaaConfig {
        scenario_counts: a.counts,
        replications: a.reps,
        eval_size: a.eval,
        seed: a.seed,
        method: a.method.into(),
        options: BendersOptions {
            pure_benders: a.pure_benders,
            time_limit: limit,
            ..BendersOptions::default()
        },
        confidence: 0.95,
        eval_on_training: a.eval_on_training,
    };
    let rows = match saa_analysis(&inst, &cfg) {
        Ok(r) => r,
        Err(SaaError::Parameter(e)) => return usage(e),
        Err(SaaError::Solve(e)) => {
            eprintln!("error: {e}");
            return match e {
                bddsp::benders::BendersError::Diagram(_) => 5,
                bddsp::benders::BendersError::Infeasible
                | bddsp::benders::BendersError::NoRecourse(_) => 3,
                _ => USAGE,
            };
        }
        Err(e) => return usage(e),
    };
    print!("{}", write_saa_table(&rows));
    if let Some(out) = &a.out {
        if let Err(e) = std::fs::write(out, saa_csv(&rows)) {
            return usage(format!("{}: {e}", out.display()));
        }
    }
    if rows.iter().all(|r| r.all_optimal) {
        0
    } else {
        2
    }
}

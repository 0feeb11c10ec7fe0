//! Sample average approximation study: confidence intervals on the optimal value
//! from repeated sampled solves and an out-of-sample evaluation of the candidate.

use super::{build_program, Instance, SmwdsError, SmwdsScenario};
use crate::benders::{solve_risk_neutral, BendersError, BendersOptions, Method, Prepared, SolveStatus};
use crate::model::{rational_to_f64, Mode};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SaaError {
    #[error(transparent)]
    Instance(#[from] SmwdsError),
    #[error(transparent)]
    Solve(#[from] BendersError),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Clone, Debug)]
pub struct SaaConfig {
    pub scenario_counts: Vec<usize>,
    pub replications: usize,
    pub eval_size: usize,
    pub seed: u64,
    pub method: Method,
    pub options: BendersOptions,
    /// Two-sided confidence level of the intervals.
    pub confidence: f64,
    /// Evaluate the candidate on the first replication's own sample instead of
    /// an independent one. Only useful as a sanity check.
    pub eval_on_training: bool,
}

impl Default for SaaConfig {
    fn default() -> Self {
        SaaConfig {
            scenario_counts: vec![10, 50, 100],
            replications: 10,
            eval_size: 1000,
            seed: 0,
            method: Method::BddCap,
            options: BendersOptions::default(),
            confidence: 0.95,
            eval_on_training: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaaRow {
    pub scenarios: usize,
    pub lb_mean: f64,
    pub lb_ci: (f64, f64),
    pub ub_mean: f64,
    pub ub_ci: (f64, f64),
    /// `(ub_hi - lb_lo) / lb_lo`, in percent.
    pub worst_gap_pct: f64,
    /// `(ub_mean - lb_mean) / lb_mean`, in percent.
    pub point_gap_pct: f64,
    /// Candidate evaluated for the upper bound.
    pub x: Vec<bool>,
    /// Whether every replication was solved to optimality.
    pub all_optimal: bool,
}

fn method_mode(m: Method) -> Mode {
    m.required_mode().unwrap_or(Mode::CapacityLinked)
}

/// Fastest exact evaluator for a mode.
fn eval_method(mode: Mode) -> Method {
    match mode {
        Mode::CapacityLinked => Method::BddCap,
        Mode::CostLinked => Method::BddCost,
    }
}

fn replication_seed(seed: u64, count: usize, rep: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((count as u64) << 24)
        .wrapping_add(rep as u64)
}

/// Mean and half-width of a t interval; zero width for fewer than two samples.
fn t_interval(values: &[f64], confidence: f64) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.5 + confidence / 2.0);
    (mean, t * (var / n as f64).sqrt())
}

/// Per-scenario total cost `c x + Q_w(x)` of each candidate over a sample.
fn evaluate(
    inst: &Instance,
    sample: &[SmwdsScenario],
    mode: Mode,
    candidates: &[Vec<bool>],
    options: &BendersOptions,
) -> Result<Vec<Vec<f64>>, SaaError> {
    let sp = build_program(inst, sample, mode);
    let prep = Prepared::new(&sp, eval_method(mode), &options.build)?;
    candidates
        .iter()
        .map(|x| {
            let first: f64 = (0..x.len())
                .filter(|&i| x[i])
                .map(|i| inst.first_stage[i] as f64)
                .sum();
            (0..sample.len())
                .into_par_iter()
                .map(|w| prep.recourse(w, x).map(|q| first + rational_to_f64(q)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(SaaError::from)
        })
        .collect()
}

fn check(cfg: &SaaConfig) -> Result<(), SaaError> {
    if cfg.scenario_counts.is_empty() || cfg.scenario_counts.contains(&0) {
        return Err(SaaError::Parameter("scenario counts must be positive".into()));
    }
    if cfg.replications == 0 {
        return Err(SaaError::Parameter("need at least one replication".into()));
    }
    if cfg.eval_size == 0 && !cfg.eval_on_training {
        return Err(SaaError::Parameter("evaluation sample is empty".into()));
    }
    if !(cfg.confidence > 0.0 && cfg.confidence < 1.0) {
        return Err(SaaError::Parameter(format!("confidence {} not in (0, 1)", cfg.confidence)));
    }
    Ok(())
}

/// One row per scenario count. The lower bound interval comes from the sampled
/// optima across replications. Each replication's solution is evaluated on one
/// independent sample; the best of them is the candidate and its interval is the
/// upper bound.
pub fn saa_analysis(inst: &Instance, cfg: &SaaConfig) -> Result<Vec<SaaRow>, SaaError> {
    inst.validate()?;
    check(cfg)?;
    let mode = method_mode(cfg.method);
    let eval_sample = if cfg.eval_on_training {
        Vec::new()
    } else {
        super::sample_scenarios(&inst.distribution, cfg.eval_size, cfg.seed ^ 0x5EED_E7A1)
    };
    let mut rows = Vec::with_capacity(cfg.scenario_counts.len());
    for &count in &cfg.scenario_counts {
        let reps = (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let sample = super::sample_scenarios(
                    &inst.distribution,
                    count,
                    replication_seed(cfg.seed, count, r),
                );
                let sp = build_program(inst, &sample, mode);
                let sol = solve_risk_neutral(&sp, cfg.method, &cfg.options)?;
                Ok((sample, sol))
            })
            .collect::<Result<Vec<_>, SaaError>>()?;
        let all_optimal = reps.iter().all(|(_, s)| s.status == SolveStatus::Optimal);
        let lbs: Vec<f64> = reps
            .iter()
            .map(|(_, s)| match s.status {
                SolveStatus::Optimal => s.objective,
                SolveStatus::Limit => s.lower_bound,
            })
            .collect();
        let mut candidates: Vec<Vec<bool>> = Vec::new();
        for (_, s) in &reps {
            if !s.x.is_empty() && !candidates.contains(&s.x) {
                candidates.push(s.x.clone());
            }
        }
        if candidates.is_empty() {
            return Err(SaaError::Parameter(format!(
                "no replication with {count} scenarios found a solution"
            )));
        }
        let sample = if cfg.eval_on_training {
            &reps[0].0
        } else {
            &eval_sample
        };
        let costs = evaluate(inst, sample, mode, &candidates, &cfg.options)?;
        let means: Vec<f64> = costs
            .iter()
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        let best = (0..candidates.len())
            .min_by(|&a, &b| means[a].total_cmp(&means[b]))
            .expect("nonempty");
        let (lb_mean, lb_half) = t_interval(&lbs, cfg.confidence);
        let (ub_mean, ub_half) = t_interval(&costs[best], cfg.confidence);
        let lb_ci = (lb_mean - lb_half, lb_mean + lb_half);
        let ub_ci = (ub_mean - ub_half, ub_mean + ub_half);
        rows.push(SaaRow {
            scenarios: count,
            lb_mean,
            lb_ci,
            ub_mean,
            ub_ci,
            worst_gap_pct: relative_pct(ub_ci.1 - lb_ci.0, lb_ci.0),
            point_gap_pct: relative_pct(ub_mean - lb_mean, lb_mean),
            x: candidates.swap_remove(best),
            all_optimal,
        });
    }
    Ok(rows)
}

fn relative_pct(diff: f64, base: f64) -> f64 {
    if diff.abs() < 1e-12 {
        0.0
    } else {
        100.0 * diff / base.abs().max(1e-12)
    }
}

/// Text table: scenario count, both intervals, and the worst-case gap.
pub fn write_saa_table(rows: &[SaaRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>7}  {:<24}  {:<24}  {}",
        "|Omega|", "95% CI on Lower Bound", "95% CI on Upper Bound", "Worst Case Optimality Gap (%)"
    );
    for r in rows {
        let lb = format!("[{:.3}, {:.3}]", r.lb_ci.0, r.lb_ci.1);
        let ub = format!("[{:.3}, {:.3}]", r.ub_ci.0, r.ub_ci.1);
        let _ = writeln!(out, "{:>7}  {:<24}  {:<24}  {:.2}", r.scenarios, lb, ub, r.worst_gap_pct);
    }
    out
}

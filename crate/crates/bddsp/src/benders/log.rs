use crate::cuts::CutKind;
use std::collections::BTreeMap;
use std::fmt::Write;
use std::time::Duration;

/// One separation round.
#[derive(Clone, Debug)]
pub struct LogEntry {
    pub round: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub cuts: BTreeMap<CutKind, usize>,
    pub callback_time: Duration,
    pub subproblem_time: Duration,
}

/// CSV with one column per cut kind.
pub fn write_solve_log(log: &[LogEntry]) -> String {
    let mut s = String::from("round,lower_bound,upper_bound");
    for k in CutKind::ALL {
        let _ = write!(s, ",{}", k.name());
    }
    s.push_str(",callback_ms,subproblem_ms\n");
    for e in log {
        let _ = write!(s, "{},{},{}", e.round, e.lower_bound, e.upper_bound);
        for k in CutKind::ALL {
            let _ = write!(s, ",{}", e.cuts.get(&k).copied().unwrap_or(0));
        }
        let _ = writeln!(
            s,
            ",{:.3},{:.3}",
            e.callback_time.as_secs_f64() * 1e3,
            e.subproblem_time.as_secs_f64() * 1e3
        );
    }
    s
}

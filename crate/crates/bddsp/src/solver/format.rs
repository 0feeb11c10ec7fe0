//! Plain-text LP dump.
//!
//! ```text
//! sense min
//! var <cost> <lower> <upper> cont|bin
//! row <= 3 : 0:1 2:-2.5
//! ```
//! Variables are numbered by order of appearance. Bounds accept `inf` and `-inf`.
//! Lines starting with `#` are comments.

use super::{LinearProgram, Relation, Row, Sense, VarKind};
use std::fmt::Write;

pub fn write_lp(lp: &LinearProgram) -> String {
    let mut out = String::new();
    let sense = match lp.sense {
        Sense::Minimize => "min",
        Sense::Maximize => "max",
    };
    writeln!(out, "sense {sense}").unwrap();
    for j in 0..lp.num_vars() {
        let kind = match lp.kinds[j] {
            VarKind::Continuous => "cont",
            VarKind::Binary => "bin",
        };
        writeln!(
            out,
            "var {} {} {} {}",
            lp.objective[j], lp.lower[j], lp.upper[j], kind
        )
        .unwrap();
    }
    for r in &lp.rows {
        write!(out, "row {} {} :", r.relation.symbol(), r.rhs).unwrap();
        for &(j, a) in &r.coeffs {
            write!(out, " {j}:{a}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn num(tok: &str, line: usize) -> Result<f64, String> {
    tok.parse::<f64>()
        .map_err(|_| format!("line {line}: bad number `{tok}`"))
}

pub fn parse_lp(text: &str) -> Result<LinearProgram, String> {
    let mut lp = LinearProgram::new(Sense::Minimize);
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = s.split_whitespace().collect();
        match toks[0] {
            "sense" => {
                lp.sense = match toks.get(1) {
                    Some(&"min") => Sense::Minimize,
                    Some(&"max") => Sense::Maximize,
                    _ => return Err(format!("line {line}: sense must be min or max")),
                }
            }
            "var" => {
                if toks.len() != 5 {
                    return Err(format!("line {line}: var needs cost, bounds and kind"));
                }
                let kind = match toks[4] {
                    "cont" => VarKind::Continuous,
                    "bin" => VarKind::Binary,
                    k => return Err(format!("line {line}: unknown kind `{k}`")),
                };
                lp.add_var(num(toks[1], line)?, num(toks[2], line)?, num(toks[3], line)?, kind);
            }
            "row" => {
                if toks.len() < 4 || toks[3] != ":" {
                    return Err(format!("line {line}: row needs `<rel> <rhs> :`"));
                }
                let rel = match toks[1] {
                    "<=" => Relation::Le,
                    ">=" => Relation::Ge,
                    "=" => Relation::Eq,
                    r => return Err(format!("line {line}: unknown relation `{r}`")),
                };
                let rhs = num(toks[2], line)?;
                let mut coeffs = Vec::new();
                for t in &toks[4..] {
                    let (j, a) = t
                        .split_once(':')
                        .ok_or_else(|| format!("line {line}: term `{t}` is not col:coef"))?;
                    let j: usize = j
                        .parse()
                        .map_err(|_| format!("line {line}: bad column `{j}`"))?;
                    if j >= lp.num_vars() {
                        return Err(format!("line {line}: column {j} not declared"));
                    }
                    coeffs.push((j, num(a, line)?));
                }
                lp.rows.push(Row::new(coeffs, rel, rhs));
            }
            other => return Err(format!("line {line}: unknown directive `{other}`")),
        }
    }
    Ok(lp)
}

use super::{ArcKind, Bdd, DiagramKind};
use std::fmt::Write;

/// Text dump: a header, one `node layer id state` line per node and one
/// `arc tail head kind var params` line per arc.
///
/// States print as hex words (`[]` for merged nodes and the terminal). Arc params
/// are `cost d1 d2 [waiver]` on cost diagrams and `cost c [cap e1; e2]` on capacity
/// diagrams.
pub fn write_dump(bdd: &Bdd) -> String {
    let mut s = String::new();
    let kind = match bdd.kind {
        DiagramKind::Capacity => "cap",
        DiagramKind::Cost => "cost",
    };
    let _ = writeln!(
        s,
        "bdd {kind} vars {} nodes {} arcs {}",
        bdd.num_vars,
        bdd.num_nodes(),
        bdd.num_arcs()
    );
    for (id, nd) in bdd.nodes.iter().enumerate() {
        let state = if nd.merged || id == bdd.terminal {
            "[]".to_string()
        } else {
            let words: Vec<String> = nd.state.iter().map(|w| format!("{w:x}")).collect();
            format!("[{}]", words.join(" "))
        };
        let _ = writeln!(s, "node {} {id} {state}", nd.layer);
    }
    for arc in &bdd.arcs {
        let kind = match arc.kind {
            ArcKind::Zero => "zero",
            ArcKind::One => "one",
        };
        let _ = write!(s, "arc {} {} {kind} {}", arc.tail, arc.head, arc.var);
        if arc.kind == ArcKind::One {
            let full = bdd.unscale(bdd.full_cost_scaled(arc.var));
            match bdd.kind {
                DiagramKind::Capacity => {
                    let _ = write!(s, " cost {full}");
                }
                DiagramKind::Cost => {
                    let d2 = bdd.unscale(bdd.cost2_scaled(arc.var));
                    let _ = write!(s, " cost {} {d2}", full - d2);
                    if let Some(e) = &bdd.waivers[arc.var] {
                        let _ = write!(s, " waiver {e}");
                    }
                }
            }
        }
        if !arc.links.is_empty() {
            let caps: Vec<String> = arc
                .links
                .iter()
                .map(|&i| format!("{i}:{}", bdd.capacities[i]))
                .collect();
            let _ = write!(s, " cap {}", caps.join("; "));
        }
        s.push('\n');
    }
    s
}

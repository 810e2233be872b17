//! Graphviz rendering of pre-traces and executions.
//!
//! Purely cosmetic debugging output. Conventions: program order is drawn
//! solid, reads-from green with an `rf` label, memory order dashed between
//! adjacent writes of the total order. Threads become clusters;
//! initialization events share a cluster of their own. Output is
//! deterministic: nodes in event-index order, edges sorted.

use crate::execution::Execution;
use crate::pretrace::{Event, PreTrace};
use crate::relations::Rel;
use std::collections::BTreeMap;
use std::fmt::Write as _;

fn node_label(ev: &Event) -> String {
    let mut s = format!("{}\\n{} {}", ev.label, ev.kind.code(), ev.loc);
    if let Some(v) = ev.wval {
        let _ = write!(s, "={v}");
    }
    s
}

/// Covering edges of a strict transitively closed order: keep (a, b) iff no
/// c has both (a, c) and (c, b). Uncluttered and loses no information.
fn reduction(r: &Rel) -> Vec<(u32, u32)> {
    let n = r.universe().len() as u32;
    let mut out = Vec::new();
    for (a, b) in r.pairs() {
        let covered = (0..n).any(|c| r.contains(a, c) && r.contains(c, b));
        if !covered {
            out.push((a, b));
        }
    }
    out.sort_unstable();
    out
}

fn clusters(pt: &PreTrace, out: &mut String) {
    let mut by_tid: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (i, ev) in pt.events().iter().enumerate() {
        by_tid.entry(ev.tid).or_default().push(i as u32);
    }
    for (tid, members) in by_tid {
        let name = if tid == crate::pretrace::INIT_TID {
            "init".to_string()
        } else {
            format!("thread {tid}")
        };
        let _ = writeln!(out, "  subgraph cluster_t{tid} {{");
        let _ = writeln!(out, "    label=\"{name}\";");
        let _ = writeln!(out, "    style=dotted;");
        for i in members {
            let ev = pt.event(i);
            let _ = writeln!(
                out,
                "    \"{}\" [label=\"{}\", shape=box];",
                ev.label,
                node_label(ev)
            );
        }
        let _ = writeln!(out, "  }}");
    }
}

fn po_edges(pt: &PreTrace, out: &mut String) {
    for (a, b) in reduction(pt.po()) {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\";",
            pt.event(a).label,
            pt.event(b).label
        );
    }
}

/// A pre-trace as a Graphviz digraph: thread clusters plus solid program
/// order (covering edges only).
pub fn pretrace_dot(pt: &PreTrace) -> String {
    let mut out = String::from("digraph pretrace {\n  rankdir=TB;\n");
    clusters(pt, &mut out);
    po_edges(pt, &mut out);
    out.push_str("}\n");
    out
}

/// An execution as a Graphviz digraph: the pre-trace rendering plus green
/// labeled reads-from edges and dashed memory-order edges (adjacent pairs
/// of the total order).
pub fn execution_dot(e: &Execution) -> String {
    let pt = e.pretrace();
    let mut out = String::from("digraph execution {\n  rankdir=TB;\n");
    clusters(pt, &mut out);
    po_edges(pt, &mut out);
    let mut rf: Vec<(u32, u32)> = e.rf().pairs().collect();
    rf.sort_unstable();
    for (w, r) in rf {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [color=green, fontcolor=green, label=\"rf\", constraint=false];",
            pt.event(w).label,
            pt.event(r).label
        );
    }
    for pair in e.mo_order().windows(2) {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [style=dashed, label=\"mo\", constraint=false];",
            pt.event(pair[0]).label,
            pt.event(pair[1]).label
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::enumerate_candidates;
    use crate::pretrace::pretrace_from_json;
    use std::sync::Arc;

    fn sb() -> Arc<crate::pretrace::PreTrace> {
        Arc::new(
            pretrace_from_json(
                r#"{
                  "events": [
                    {"label": "a", "tid": 1, "kind": "W", "loc": "x", "val": 1},
                    {"label": "b", "tid": 1, "kind": "R", "loc": "y"},
                    {"label": "c", "tid": 2, "kind": "W", "loc": "y", "val": 1},
                    {"label": "d", "tid": 2, "kind": "R", "loc": "x"}
                  ],
                  "po": [["a", "b"], ["c", "d"]]
                }"#,
            )
            .unwrap(),
        )
    }

    #[test]
    fn pretrace_dot_draws_clusters_and_covering_po() {
        let dot = pretrace_dot(&sb());
        assert!(dot.starts_with("digraph pretrace {"));
        assert!(dot.contains("subgraph cluster_t1"));
        assert!(dot.contains("label=\"init\""));
        assert!(dot.contains("\"a\" -> \"b\";"));
        // po is drawn reduced: no duplicated transitive edges in a chain.
        assert_eq!(dot.matches("\"a\" ->").count(), 1);
    }

    #[test]
    fn execution_dot_adds_rf_and_mo_styling() {
        let pt = sb();
        let e = enumerate_candidates(&pt, 12).unwrap().next().unwrap();
        let dot = execution_dot(&e);
        assert!(dot.contains("color=green"));
        assert!(dot.contains("label=\"rf\""));
        assert!(dot.contains("style=dashed"));
        // Adjacent mo pairs only: #writes - 1 dashed edges.
        let writes = pt.events().iter().filter(|ev| ev.is_write()).count();
        assert_eq!(dot.matches("style=dashed").count(), writes - 1);
        // Deterministic.
        assert_eq!(dot, execution_dot(&e));
    }
}

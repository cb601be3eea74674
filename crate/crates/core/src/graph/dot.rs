// SPDX-License-Identifier: Apache-2.0

//! Graphviz rendering.
//!
//! Style contract:
//! - one `cluster_<i>` subgraph per function, labelled with its name;
//! - node shapes: entry `invhouse` (transaction entries double-bordered),
//!   exit `house`, expr `box`, pred `diamond`, revert `octagon` in red,
//!   call-site `rarrow`, return-site `larrow`;
//! - node labels are `<id> <kind> L<line>` followed by the statement text;
//! - flow edges solid black, call and return edges dashed blue, revert
//!   edges solid red, cascading-revert edges dashed red; branch labels
//!   are printed on the edge.

use super::{EdgeKind, NodeKind, Tcfg};
use std::fmt::Write;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn export_dot(g: &Tcfg) -> String {
    let mut out = String::from("digraph tcfg {\n");
    if g.nodes.is_empty() {
        out.push_str("}\n");
        return out;
    }
    out.push_str("  node [fontname=\"monospace\", fontsize=10];\n");
    out.push_str("  edge [fontname=\"monospace\", fontsize=9];\n");
    for f in &g.functions {
        writeln!(out, "  subgraph cluster_{} {{", f.id).unwrap();
        writeln!(out, "    label=\"{}\";", escape(&f.name)).unwrap();
        for n in g.nodes.iter().filter(|n| n.func == f.id) {
            let (shape, extra) = match n.kind {
                NodeKind::Entry { transaction: true } => ("invhouse", ", peripheries=2"),
                NodeKind::Entry { transaction: false } => ("invhouse", ""),
                NodeKind::Exit => ("house", ""),
                NodeKind::Expr => ("box", ""),
                NodeKind::Pred => ("diamond", ""),
                NodeKind::Revert => ("octagon", ", color=red"),
                NodeKind::CallSite => ("rarrow", ""),
                NodeKind::ReturnSite => ("larrow", ""),
            };
            let line = n.span.map(|s| format!(" L{}", s.line)).unwrap_or_default();
            let label = format!("{} {}{}\\n{}", n.id, n.kind.tag(), line, escape(&n.label));
            writeln!(
                out,
                "    n{} [shape={shape}, label=\"{label}\"{extra}];",
                n.id
            )
            .unwrap();
        }
        out.push_str("  }\n");
    }
    for e in &g.edges {
        let style = match e.kind {
            EdgeKind::Flow => "color=black",
            EdgeKind::Call | EdgeKind::Return => "style=dashed, color=blue",
            EdgeKind::Revert => "color=red",
            EdgeKind::CascadingRevert => "style=dashed, color=red",
        };
        let label = e
            .label
            .as_deref()
            .map(|l| format!(", label=\"{}\"", escape(l)))
            .unwrap_or_default();
        writeln!(out, "  n{} -> n{} [{style}{label}];", e.from, e.to).unwrap();
    }
    out.push_str("}\n");
    out
}

//! Graphviz, plain-text and JSON views of a graph.

use std::fmt::Write as _;

use super::{Interval, Tlg};
use crate::time::Time;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn span(iv: &Interval, show: &dyn Fn(Time) -> String) -> String {
    format!("[{},{}]", show(iv.lo), show(iv.hi))
}

/// DOT digraph with exact times.
pub fn to_dot(g: &Tlg) -> String {
    to_dot_with(g, &|t| t.to_string())
}

/// DOT digraph. Nodes show the generation, validity and necessity
/// intervals; edges show their kind and distance, e.g. `n(10)`.
pub fn to_dot_with(g: &Tlg, show: &dyn Fn(Time) -> String) -> String {
    let mut out = String::from("digraph tlg {\n  rankdir=LR;\n  node [shape=box];\n");
    for (i, n) in g.nodes.iter().enumerate() {
        let mut label = format!(
            "{}\\ng {}\\nv {}\\nn {}",
            escape(&n.name()),
            span(&n.gen, show),
            span(&n.val, show),
            span(&n.nec, show)
        );
        if n.to_end {
            label.push_str("\\nuntil end");
        }
        let _ = writeln!(out, "  n{i} [label=\"{label}\"];");
    }
    for e in &g.edges {
        let style = if e.kind == super::EdgeKind::Constraint { ", style=dashed" } else { "" };
        let _ = writeln!(out, "  n{} -> n{} [label=\"{}({})\"{style}];", e.from, e.to, e.kind.letter(), show(e.dist));
    }
    for m in &g.mutexes {
        let _ = writeln!(
            out,
            "  n{} -> n{} [dir=none, style=dotted, color=red, label=\"{}/{}\"];",
            m.a,
            m.b,
            show(m.sep_ab),
            show(m.sep_ba)
        );
    }
    out.push_str("}\n");
    out
}

/// One line per landmark, edge and mutex pair.
pub fn to_text_with(g: &Tlg, show: &dyn Fn(Time) -> String) -> String {
    let mut out = String::new();
    for n in &g.nodes {
        let _ = writeln!(
            out,
            "{}  g {}  v {}  n {}{}",
            n.name(),
            span(&n.gen, show),
            span(&n.val, show),
            span(&n.nec, show),
            if n.to_end { "  until end" } else { "" }
        );
    }
    for e in &g.edges {
        let (a, b) = (g.nodes[e.from].name(), g.nodes[e.to].name());
        let _ = writeln!(out, "{a} <{}({})> {b}", e.kind.letter(), show(e.dist));
    }
    for m in &g.mutexes {
        let (a, b) = (g.nodes[m.a].name(), g.nodes[m.b].name());
        let _ = writeln!(out, "mutex {a} {b}  sep {} / {}", show(m.sep_ab), show(m.sep_ba));
    }
    out
}

pub fn to_json(g: &Tlg) -> String {
    serde_json::to_string_pretty(g).expect("graphs always serialise")
}

pub fn from_json(s: &str) -> Result<Tlg, serde_json::Error> {
    serde_json::from_str(s)
}

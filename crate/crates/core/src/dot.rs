//! Graphviz DOT emission. Latents render as ellipses, observed variables as
//! boxes; bi-directed edges carry arrowheads on both ends; unconfirmed edges
//! are dashed and labeled.

use crate::graph::{EdgeLabel, MeasurementPattern, NodeKind, TrueDag};

pub fn pattern_to_dot(p: &MeasurementPattern) -> String {
    let mut out = String::from("digraph pattern {\n");
    out.push_str("  rankdir=TB;\n");
    for l in p.latents() {
        out.push_str(&format!("  \"{l}\" [shape=ellipse];\n"));
    }
    for o in p.observed() {
        out.push_str(&format!("  \"{o}\" [shape=box];\n"));
    }
    for (l, o, label) in p.directed_edges() {
        out.push_str(&format!("  \"{l}\" -> \"{o}\"{};\n", style(label)));
    }
    for (a, b, label) in p.bidirected_edges() {
        let mut attrs = vec!["dir=both".to_string()];
        if label == EdgeLabel::Unconfirmed {
            attrs.push("style=dashed".into());
            attrs.push("label=\"unconfirmed\"".into());
        }
        out.push_str(&format!("  \"{a}\" -> \"{b}\" [{}];\n", attrs.join(", ")));
    }
    if p.latents_biconnected && p.latents().len() > 1 {
        let ls = p.latents();
        for i in 0..ls.len() {
            for j in (i + 1)..ls.len() {
                out.push_str(&format!(
                    "  \"{}\" -> \"{}\" [dir=both, constraint=false];\n",
                    ls[i], ls[j]
                ));
            }
        }
    }
    out.push_str("}\n");
    out
}

fn style(label: EdgeLabel) -> String {
    match label {
        EdgeLabel::Confirmed => String::new(),
        EdgeLabel::Unconfirmed => " [style=dashed, label=\"unconfirmed\"]".to_string(),
    }
}

pub fn dag_to_dot(g: &TrueDag) -> String {
    let mut out = String::from("digraph truth {\n");
    out.push_str("  rankdir=TB;\n");
    for n in g.nodes() {
        let shape = match g.kind(n) {
            NodeKind::Latent => "ellipse",
            NodeKind::Observed => "box",
        };
        out.push_str(&format!("  \"{}\" [shape={shape}];\n", g.name(n)));
    }
    for (p, c) in g.edges() {
        out.push_str(&format!("  \"{}\" -> \"{}\";\n", g.name(p), g.name(c)));
    }
    out.push_str("}\n");
    out
}

use std::fmt::Write;

use super::WorkflowDefinition;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Renders the workflow as Graphviz DOT: states left to right in definition
/// order, transitions as labeled edges, jump states as detached nodes in their
/// own cluster.
pub fn export_diagram(w: &WorkflowDefinition) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(&w.id));
    let _ = writeln!(out, "  label={};", quote(w.title()));
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=box];\n");
    for s in &w.states {
        let mut attrs = vec![format!("label={}", quote(s.label()))];
        if s.id == w.initial_state {
            attrs.push("style=bold".into());
        }
        if w.is_terminal(&s.id) {
            attrs.push("peripheries=2".into());
        }
        if s.requires_confirmation {
            attrs.push("color=orange".into());
        }
        let _ = writeln!(out, "  {} [{}];", quote(&s.id), attrs.join(", "));
    }
    for t in &w.transitions {
        let _ = writeln!(
            out,
            "  {} -> {} [label={}{}];",
            quote(&t.source),
            quote(&t.destination),
            quote(&t.trigger),
            if t.autopilot_default { ", style=bold" } else { "" }
        );
    }
    if !w.jump_states.is_empty() {
        out.push_str("  subgraph cluster_jump_states {\n");
        out.push_str("    label=\"jump states\";\n");
        out.push_str("    style=dashed;\n");
        for j in &w.jump_states {
            let _ = writeln!(
                out,
                "    {} [label={}, shape=octagon];",
                quote(&format!("jump:{}", j.trigger)),
                quote(&j.trigger)
            );
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workflow::load_workflow;

    #[test]
    fn quoting_escapes() {
        assert_eq!(quote("a\"b\\c"), "\"a\\\"b\\\\c\"");
    }

    #[test]
    fn terminal_state_has_no_outgoing_edges() {
        let w = load_workflow(include_str!("../../tests/fixtures/three_state.json")).unwrap();
        let dot = export_diagram(&w);
        assert!(dot.contains("\"Done\" [label=\"Done\", peripheries=2];"));
        assert!(!dot.contains("\"Done\" ->"));
        assert!(dot.contains("\"jump:KillAllStudios\""));
    }
}

//! Mermaid renderings: flowcharts for graphs and trees, sequence diagrams
//! for configurations and global protocols.

use std::fmt::Write;

use crate::estimation::{EstimationTree, SegNode, StateEstimationGraph};
use crate::protocol::GlobalProtocol;
use crate::session::{compose, LocalConfiguration};

const CLASS_DEFS: &str = "  classDef state fill:#dbeafe,stroke:#1e40af\n  \
                          classDef estimator fill:#fef3c7,stroke:#92400e\n  \
                          classDef sensing fill:#dcfce7,stroke:#166534\n";

/// A Mermaid-safe identifier. Node kinds get distinct prefixes so a state
/// and an estimator with the same qualified name never collide.
pub fn node_id(n: &SegNode) -> String {
    let prefix = match n {
        SegNode::State { .. } => "st",
        SegNode::Estimator { .. } => "es",
        SegNode::Sensing { .. } => "sn",
    };
    format!("{prefix}_{}", sanitize(&n.to_string()))
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn node_decl(n: &SegNode) -> String {
    let id = node_id(n);
    match n {
        SegNode::State { .. } => format!("  {id}{{{{\"{n}\"}}}}:::state"),
        SegNode::Estimator { .. } => format!("  {id}[\"{n}\"]:::estimator"),
        SegNode::Sensing { .. } => format!("  {id}[/\"{n}\"\\]:::sensing"),
    }
}

fn flowchart<'a>(
    nodes: impl Iterator<Item = &'a SegNode>,
    edges: impl Iterator<Item = (&'a SegNode, &'a SegNode)>,
) -> String {
    let mut out = String::from("flowchart LR\n");
    let nodes: Vec<&SegNode> = nodes.collect();
    if nodes.is_empty() {
        return out;
    }
    out.push_str(CLASS_DEFS);
    for n in nodes {
        out.push_str(&node_decl(n));
        out.push('\n');
    }
    for (a, b) in edges {
        let _ = writeln!(out, "  {} --> {}", node_id(a), node_id(b));
    }
    out
}

pub fn graph(g: &StateEstimationGraph) -> String {
    flowchart(g.nodes(), g.edges())
}

pub fn tree(t: &EstimationTree) -> String {
    let nodes = t.nodes();
    let mut out = flowchart(nodes.into_iter(), t.edges().into_iter());
    for (est, param) in &t.preconfigured {
        let _ = writeln!(
            out,
            "  {} -. preconfigured .-> {}",
            node_decl(param).trim(),
            node_id(est)
        );
    }
    out
}

fn participant_id(p: &str) -> String {
    sanitize(p)
}

/// A sequence diagram of the configuration's participants. When the
/// configuration composes, its interactions are drawn too.
pub fn configuration(c: &LocalConfiguration) -> String {
    let mut out = String::from("sequenceDiagram\n");
    for p in c.participants() {
        let _ = writeln!(out, "  participant {} as {}", participant_id(p.as_str()), p);
    }
    if let Ok(g) = compose(c) {
        interactions(&g, 1, &mut out);
    }
    out
}

pub fn global(g: &GlobalProtocol) -> String {
    let mut out = String::from("sequenceDiagram\n");
    for p in g.roles() {
        let _ = writeln!(out, "  participant {} as {}", participant_id(p.as_str()), p);
    }
    interactions(g, 1, &mut out);
    out
}

fn interactions(g: &GlobalProtocol, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match g {
        GlobalProtocol::End | GlobalProtocol::Var(_) => {}
        GlobalProtocol::Pass {
            sender,
            receiver,
            payload,
            cont,
        } => {
            let _ = writeln!(
                out,
                "{pad}{}->>{}: {payload}",
                participant_id(sender.as_str()),
                participant_id(receiver.as_str())
            );
            interactions(cont, indent, out);
        }
        GlobalProtocol::Choice {
            sender,
            receiver,
            sort,
            branches,
        } => {
            for (i, (label, k)) in branches.iter().enumerate() {
                let _ = writeln!(out, "{pad}{} {sort} = {label}", if i == 0 { "alt" } else { "else" });
                let _ = writeln!(
                    out,
                    "{pad}  {}->>{}: {sort}.{label}",
                    participant_id(sender.as_str()),
                    participant_id(receiver.as_str())
                );
                interactions(k, indent + 1, out);
            }
            let _ = writeln!(out, "{pad}end");
        }
        GlobalProtocol::Rec(label, body) => {
            let _ = writeln!(out, "{pad}loop {label}");
            interactions(body, indent + 1, out);
            let _ = writeln!(out, "{pad}end");
        }
    }
}

/// A timeline of `(step, description)` events.
pub fn timeline(title: &str, events: &[(usize, String)]) -> String {
    let mut out = format!("timeline\n  title {title}\n");
    for (step, what) in events {
        let _ = writeln!(out, "  step {step} : {}", what.replace(':', " "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::{parse_configuration, parse_global};

    #[test]
    fn empty_graph_is_header_only() {
        let g = StateEstimationGraph::default();
        assert_eq!(graph(&g), "flowchart LR\n");
    }

    #[test]
    fn ids_are_sanitized_and_kind_prefixed() {
        assert_eq!(node_id(&SegNode::state("t", "head")), "st_t_head");
        assert_eq!(node_id(&SegNode::estimator("t", "tank_mass")), "es_t_tank_mass");
        assert_eq!(node_id(&SegNode::sensing("s1")), "sn_s1");
    }

    #[test]
    fn configuration_lists_participants_and_messages() {
        let c = parse_configuration("local { a = b!x. end b = a?x. end }").unwrap();
        let m = configuration(&c);
        assert!(m.starts_with("sequenceDiagram\n"));
        assert!(m.contains("participant a as a"));
        assert!(m.contains("a->>b: x"));
    }

    #[test]
    fn global_loops_and_choices() {
        let g = parse_global("loop. a->b:sig { ON: loop } or { OFF: end }").unwrap();
        let m = global(&g);
        assert!(m.contains("loop loop"));
        assert!(m.contains("alt sig = OFF"));
        assert!(m.contains("else sig = ON"));
    }
}

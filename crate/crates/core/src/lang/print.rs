//! Surface syntax for domains and repositories. Output parses back to an
//! equal value.

use std::fmt;

use crate::domain::{IndustrialDomain, Repository};

impl fmt::Display for IndustrialDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "domain {{")?;
        if !self.properties.is_empty() {
            let props: Vec<String> = self
                .properties
                .iter()
                .map(|p| {
                    if p.labels.is_empty() {
                        p.name.clone()
                    } else {
                        format!("{} {{{}}}", p.name, p.labels.join(", "))
                    }
                })
                .collect();
            writeln!(f, "  property {}", props.join(", "))?;
        }
        if !self.model.is_empty() {
            let names: Vec<&str> = self.model.iter().map(|e| e.name.as_str()).collect();
            writeln!(f, "  model {}", names.join(", "))?;
        }
        for c in &self.classes {
            write!(f, "  {} {}({})", c.kind.keyword(), c.name, c.attributes.join(", "))?;
            if !c.intra_edges.is_empty() {
                let edges: Vec<String> = c.intra_edges.iter().map(|(a, b)| format!("{a} -> {b}")).collect();
                write!(f, ":\n    {}", edges.join(", "))?;
            }
            writeln!(f)?;
        }
        for r in &self.rules {
            write!(f, "  translation {} -> {}", r.source_class, r.target_class)?;
            if !r.edges.is_empty() {
                let edges: Vec<String> = r.edges.iter().map(|(a, b)| format!("{a} -> {b}")).collect();
                write!(f, ":\n    {}", edges.join(",\n    "))?;
            }
            writeln!(f)?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for Repository {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "repository {} {{", self.name)?;
        for t in &self.templates {
            writeln!(f, "  {} {} using {} = {}", t.kind, t.subject, t.name, t.protocol)?;
        }
        write!(f, "}}")
    }
}

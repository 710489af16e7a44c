use crate::diagnostic::Pos;
use crate::domain::{IndustrialDomain, Repository};
use crate::process::ProcessDecl;
use crate::protocol::GlobalProtocol;
use crate::session::LocalConfiguration;

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub kind: CommandKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandKind {
    /// `name := expr`
    Bind { name: String, expr: Expr },
    /// `show expr`
    Show(Expr),
    /// `mermaid expr "path"`; without a path the diagram is printed.
    EmitDiagram { expr: Expr, path: Option<String> },
    /// A bare expression, evaluated and printed.
    Eval(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Name(String),
    /// `name[k]`, 1-based.
    Index(String, usize),
    Translate(Box<Expr>),
    Traverse {
        root: String,
        graph: Box<Expr>,
    },
    Configure {
        tree: Box<Expr>,
        repository: Box<Expr>,
        controller: String,
        actuator: String,
    },
    Compose(Box<Expr>),
    Project(Box<Expr>),
    RemoveDevice {
        device: String,
        process: Box<Expr>,
    },
    Domain(IndustrialDomain),
    Repository(Repository),
    Process(ProcessDecl),
    Local(LocalConfiguration),
    Global(GlobalProtocol),
}

impl ExprKind {
    /// Names the expression reads from the environment.
    pub fn references(&self) -> Vec<&str> {
        match self {
            ExprKind::Name(n) | ExprKind::Index(n, _) => vec![n],
            ExprKind::Translate(e) | ExprKind::Compose(e) | ExprKind::Project(e) => e.kind.references(),
            ExprKind::Traverse { graph, .. } => graph.kind.references(),
            ExprKind::Configure { tree, repository, .. } => {
                let mut v = tree.kind.references();
                v.extend(repository.kind.references());
                v
            }
            ExprKind::RemoveDevice { process, .. } => process.kind.references(),
            ExprKind::Repository(r) => vec![r.name.as_str()],
            ExprKind::Process(p) => vec![p.domain.name.as_str()],
            ExprKind::Domain(_) | ExprKind::Local(_) | ExprKind::Global(_) => vec![],
        }
    }
}

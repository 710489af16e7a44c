//! The session environment and command evaluation.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::configurator::{configure, ControlLoopConfig};
use crate::diagnostic::{has_errors, Diagnostic, Pos};
use crate::domain::{validate_domain, validate_repository, IndustrialDomain, Repository};
use crate::estimation::{find_node, parse_state, translate, traverse, EstimationTree, StateEstimationGraph};
use crate::lang::ast::{Command, CommandKind, Expr, ExprKind};
use crate::lang::mermaid;
use crate::lang::parser::parse;
use crate::process::{build_process, ProcessGraph};
use crate::protocol::GlobalProtocol;
use crate::session::{compose, is_live, project_all, LocalConfiguration, Verdict, DEFAULT_STATE_BUDGET};

/// The process and domain a derived value was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub process: Arc<ProcessGraph>,
    pub domain: Arc<IndustrialDomain>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Domain(Arc<IndustrialDomain>),
    Repository(Arc<Repository>),
    Process(Context),
    Graph(Arc<StateEstimationGraph>, Context),
    Trees(Arc<Vec<EstimationTree>>, Context),
    Tree(Arc<EstimationTree>, Context),
    Local(Arc<LocalConfiguration>),
    Global(Arc<GlobalProtocol>),
    ControlLoop(Arc<ControlLoopConfig>),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Domain(_) => "domain",
            Value::Repository(_) => "repository",
            Value::Process(_) => "process",
            Value::Graph(..) => "state estimation graph",
            Value::Trees(..) => "list of estimation trees",
            Value::Tree(..) => "estimation tree",
            Value::Local(_) => "local configuration",
            Value::Global(_) => "global protocol",
            Value::ControlLoop(_) => "control loop configuration",
        }
    }

    /// One-line description printed when the value is bound.
    pub fn summary(&self) -> String {
        match self {
            Value::Domain(d) => format!(
                "domain ({} properties, {} estimators, {} classes, {} translation rules)",
                d.properties.len(),
                d.model.len(),
                d.classes.len(),
                d.rules.len()
            ),
            Value::Repository(r) => format!("repository for {} ({} templates)", r.name, r.templates.len()),
            Value::Process(c) => format!(
                "process over {} ({} devices, {} components, {} sensing points)",
                c.process.domain_name,
                c.process.devices.len(),
                c.process.components.len(),
                c.process.sensors.len()
            ),
            Value::Graph(g, _) => format!(
                "state estimation graph ({} nodes, {} edges)",
                g.node_count(),
                g.edge_count()
            ),
            Value::Trees(ts, _) => match ts.first() {
                Some(t) => format!("{} estimation trees rooted at {}", ts.len(), t.root.state),
                None => "0 estimation trees".to_string(),
            },
            Value::Tree(t, _) => format!("estimation tree {}", t),
            Value::Local(c) => format!("local configuration of {} participants", c.len()),
            Value::Global(g) => format!("global protocol over {} roles", g.roles().len()),
            Value::ControlLoop(c) => format!(
                "control loop of {} agents, certified by composition",
                c.configuration.len()
            ),
        }
    }

    /// Mermaid text for diagrammable values.
    pub fn mermaid(&self) -> Option<String> {
        match self {
            Value::Graph(g, _) => Some(mermaid::graph(g)),
            Value::Tree(t, _) => Some(mermaid::tree(t)),
            Value::Local(c) => Some(mermaid::configuration(c)),
            Value::ControlLoop(c) => Some(mermaid::configuration(&c.configuration)),
            Value::Global(g) => Some(mermaid::global(g)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Domain(d) => write!(f, "{d}"),
            Value::Repository(r) => write!(f, "{r}"),
            Value::Process(c) => write!(f, "{}", c.process),
            Value::Graph(g, _) => {
                writeln!(f, "# state estimation graph")?;
                for n in g.nodes() {
                    writeln!(f, "{} {}", n.kind_name(), n)?;
                }
                let edges: Vec<String> = g.edges().map(|(a, b)| format!("{a}->{b}")).collect();
                write!(f, "edges {}", edges.join(", "))
            }
            Value::Trees(ts, _) => {
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "[{}] {}", i + 1, t)?;
                }
                Ok(())
            }
            Value::Tree(t, _) => write!(f, "{t}"),
            Value::Local(c) => write!(f, "{c}"),
            Value::Global(g) => write!(f, "global {g}"),
            Value::ControlLoop(c) => write!(f, "{}", c.configuration),
        }
    }
}

type EResult<T> = Result<T, Vec<Diagnostic>>;

fn err<T>(pos: Pos, msg: impl Into<String>) -> EResult<T> {
    Err(vec![Diagnostic::error(Some(pos), msg)])
}

/// A REPL or script session: named values plus evaluation settings.
#[derive(Debug, Clone)]
pub struct Session {
    bindings: IndexMap<String, Value>,
    pub state_budget: usize,
    /// Where `mermaid` commands write their files.
    pub mermaid_dir: Option<PathBuf>,
    diagrams: usize,
}

impl Default for Session {
    fn default() -> Self {
        Session {
            bindings: IndexMap::new(),
            state_budget: DEFAULT_STATE_BUDGET,
            mermaid_dir: None,
            diagrams: 0,
        }
    }
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.get(name)
    }

    pub fn bind(&mut self, name: impl Into<String>, v: Value) {
        self.bindings.insert(name.into(), v);
    }

    pub fn bindings(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn lookup(&self, name: &str, pos: Pos) -> EResult<&Value> {
        self.bindings
            .get(name)
            .ok_or_else(|| vec![Diagnostic::error(Some(pos), format!("unbound name `{name}`"))])
    }

    fn domain_named(&self, name: &str, pos: Pos) -> EResult<Arc<IndustrialDomain>> {
        match self.lookup(name, pos)? {
            Value::Domain(d) => Ok(d.clone()),
            other => err(pos, format!("`{name}` is a {}, expected a domain", other.kind())),
        }
    }

    fn mismatch<T>(e: &Expr, v: &Value, expected: &str) -> EResult<T> {
        err(e.pos, format!("expected a {expected}, found a {}", v.kind()))
    }

    pub fn eval_expr(&self, e: &Expr) -> EResult<Value> {
        let pos = e.pos;
        match &e.kind {
            ExprKind::Name(n) => Ok(self.lookup(n, pos)?.clone()),
            ExprKind::Index(n, k) => match self.lookup(n, pos)? {
                Value::Trees(ts, ctx) => match ts.get(k - 1) {
                    Some(t) => Ok(Value::Tree(Arc::new(t.clone()), ctx.clone())),
                    None => err(
                        pos,
                        format!("index {k} is out of range: `{n}` holds {} trees", ts.len()),
                    ),
                },
                other => err(pos, format!("cannot index a {}", other.kind())),
            },
            ExprKind::Translate(inner) => match self.eval_expr(inner)? {
                Value::Process(ctx) => {
                    let g = translate(&ctx.process, &ctx.domain)
                        .map_err(|x| vec![Diagnostic::error(Some(pos), x.to_string())])?;
                    Ok(Value::Graph(Arc::new(g), ctx))
                }
                v => Self::mismatch(inner, &v, "process"),
            },
            ExprKind::Traverse { root, graph } => match self.eval_expr(graph)? {
                Value::Graph(g, ctx) => {
                    let node = match find_node(&g, root).or_else(|| parse_state(root)) {
                        Some(n) => n,
                        None => return err(pos, format!("expected a state `component.property`, found `{root}`")),
                    };
                    let trees = traverse(&node, &g).map_err(|x| vec![Diagnostic::error(Some(pos), x.to_string())])?;
                    Ok(Value::Trees(Arc::new(trees), ctx))
                }
                v => Self::mismatch(graph, &v, "state estimation graph"),
            },
            ExprKind::Configure {
                tree,
                repository,
                controller,
                actuator,
            } => {
                let (t, ctx) = match self.eval_expr(tree)? {
                    Value::Tree(t, ctx) => (t, ctx),
                    v => return Self::mismatch(tree, &v, "estimation tree"),
                };
                let repo = match self.eval_expr(repository)? {
                    Value::Repository(r) => r,
                    v => return Self::mismatch(repository, &v, "repository"),
                };
                let c = configure(&t, &repo, controller, actuator, &ctx.process)
                    .map_err(|x| vec![Diagnostic::error(Some(pos), x.to_string())])?;
                Ok(Value::ControlLoop(Arc::new(c)))
            }
            ExprKind::Compose(inner) => {
                let c = match self.eval_expr(inner)? {
                    Value::Local(c) => c,
                    Value::ControlLoop(c) => return Ok(Value::Global(Arc::new(c.certified.clone()))),
                    v => return Self::mismatch(inner, &v, "local configuration"),
                };
                match compose(&c) {
                    Ok(g) => Ok(Value::Global(Arc::new(g))),
                    Err(x) => {
                        let mut d = vec![Diagnostic::error(Some(pos), x.to_string())];
                        if let v @ Verdict::Violated { .. } = is_live(&c, self.state_budget) {
                            d.push(Diagnostic::warning(
                                Some(pos),
                                format!("the configuration is not live: {v}"),
                            ));
                        }
                        Err(d)
                    }
                }
            }
            ExprKind::Project(inner) => match self.eval_expr(inner)? {
                Value::Global(g) => {
                    let c = project_all(&g).map_err(|x| vec![Diagnostic::error(Some(pos), x.to_string())])?;
                    Ok(Value::Local(Arc::new(c)))
                }
                v => Self::mismatch(inner, &v, "global protocol"),
            },
            ExprKind::RemoveDevice { device, process } => match self.eval_expr(process)? {
                Value::Process(ctx) => {
                    let p = ctx
                        .process
                        .remove_device(device)
                        .map_err(|x| vec![Diagnostic::error(Some(pos), x.to_string())])?;
                    Ok(Value::Process(Context {
                        process: Arc::new(p),
                        domain: ctx.domain,
                    }))
                }
                v => Self::mismatch(process, &v, "process"),
            },
            ExprKind::Domain(d) => {
                let diags = validate_domain(d);
                if has_errors(&diags) {
                    return Err(diags);
                }
                Ok(Value::Domain(Arc::new(d.clone())))
            }
            ExprKind::Repository(r) => {
                let d = self.domain_named(&r.name, pos)?;
                let diags = validate_repository(r, &d);
                if has_errors(&diags) {
                    return Err(diags);
                }
                Ok(Value::Repository(Arc::new(r.clone())))
            }
            ExprKind::Process(decl) => {
                let d = self.domain_named(&decl.domain.name, decl.domain.span.0.unwrap_or(pos))?;
                let p = build_process(decl, &d)?;
                Ok(Value::Process(Context {
                    process: Arc::new(p),
                    domain: d,
                }))
            }
            ExprKind::Local(c) => Ok(Value::Local(Arc::new(c.clone()))),
            ExprKind::Global(g) => Ok(Value::Global(Arc::new(g.clone()))),
        }
    }

    /// Evaluates one command and returns the text it prints.
    pub fn eval(&mut self, c: &Command) -> EResult<String> {
        match &c.kind {
            CommandKind::Bind { name, expr } => {
                let v = self.eval_expr(expr)?;
                let out = format!("{name}: {}", v.summary());
                self.bindings.insert(name.clone(), v);
                Ok(out)
            }
            CommandKind::Show(e) | CommandKind::Eval(e) => Ok(self.eval_expr(e)?.to_string()),
            CommandKind::EmitDiagram { expr, path } => {
                let v = self.eval_expr(expr)?;
                let Some(text) = v.mermaid() else {
                    return err(expr.pos, format!("cannot draw a {}", v.kind()));
                };
                self.diagrams += 1;
                let target = match (path, &self.mermaid_dir) {
                    (Some(p), Some(dir)) => Some(dir.join(p)),
                    (Some(p), None) => Some(PathBuf::from(p)),
                    (None, Some(dir)) => Some(dir.join(format!("diagram{}.mmd", self.diagrams))),
                    (None, None) => None,
                };
                match target {
                    Some(file) => {
                        if let Some(parent) = file.parent().filter(|p| !p.as_os_str().is_empty()) {
                            std::fs::create_dir_all(parent).map_err(|x| {
                                vec![Diagnostic::error(
                                    Some(c.pos),
                                    format!("cannot create {}: {x}", parent.display()),
                                )]
                            })?;
                        }
                        std::fs::write(&file, &text).map_err(|x| {
                            vec![Diagnostic::error(
                                Some(c.pos),
                                format!("cannot write {}: {x}", file.display()),
                            )]
                        })?;
                        Ok(format!("wrote {}", file.display()))
                    }
                    None => Ok(text),
                }
            }
        }
    }

    /// Parses and evaluates a script, stopping at the first failing command.
    /// Returns the printed lines and the diagnostics.
    pub fn run(&mut self, src: &str) -> (Vec<String>, Vec<Diagnostic>) {
        let cmds = match parse(src) {
            Ok(c) => c,
            Err(d) => return (vec![], d),
        };
        let mut out = Vec::new();
        for c in &cmds {
            match self.eval(c) {
                Ok(s) => {
                    if !s.is_empty() {
                        out.push(s);
                    }
                }
                Err(d) => return (out, d),
            }
        }
        (out, vec![])
    }

    /// Parses a script and validates it without running the reasoning
    /// commands: declarations are built and checked, every other command only
    /// has its names resolved.
    pub fn check(&mut self, src: &str) -> Vec<Diagnostic> {
        let cmds = match parse(src) {
            Ok(c) => c,
            Err(d) => return d,
        };
        let mut diags = Vec::new();
        let mut declared: HashSet<String> = self.bindings.keys().cloned().collect();
        for c in &cmds {
            let expr = match &c.kind {
                CommandKind::Bind { expr, .. } | CommandKind::Show(expr) | CommandKind::Eval(expr) => expr,
                CommandKind::EmitDiagram { expr, .. } => expr,
            };
            let is_decl = matches!(
                expr.kind,
                ExprKind::Domain(_)
                    | ExprKind::Repository(_)
                    | ExprKind::Process(_)
                    | ExprKind::Local(_)
                    | ExprKind::Global(_)
            );
            let result = if is_decl {
                self.eval_expr(expr).map(Some)
            } else {
                let missing: Vec<Diagnostic> = expr
                    .kind
                    .references()
                    .into_iter()
                    .filter(|n| !declared.contains(*n))
                    .map(|n| Diagnostic::error(Some(expr.pos), format!("unbound name `{n}`")))
                    .collect();
                if missing.is_empty() {
                    Ok(None)
                } else {
                    Err(missing)
                }
            };
            match result {
                Ok(v) => {
                    if let CommandKind::Bind { name, .. } = &c.kind {
                        declared.insert(name.clone());
                        if let Some(v) = v {
                            self.bindings.insert(name.clone(), v);
                        }
                    }
                }
                Err(d) => diags.extend(d),
            }
        }
        diags
    }
}

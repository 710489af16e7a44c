//! State estimation graphs and estimation-tree enumeration.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use indexmap::IndexSet;
use thiserror::Error;

use crate::domain::{AttrKind, IndustrialDomain};
use crate::process::ProcessGraph;

/// Default bound on estimator nesting during traversal.
pub const DEFAULT_DEPTH_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SegNode {
    State { component: String, property: String },
    Estimator { component: String, estimator: String },
    Sensing { sensor: String },
}

impl SegNode {
    pub fn state(component: &str, property: &str) -> Self {
        SegNode::State {
            component: component.into(),
            property: property.into(),
        }
    }

    pub fn estimator(component: &str, estimator: &str) -> Self {
        SegNode::Estimator {
            component: component.into(),
            estimator: estimator.into(),
        }
    }

    pub fn sensing(sensor: &str) -> Self {
        SegNode::Sensing { sensor: sensor.into() }
    }

    pub fn is_state(&self) -> bool {
        matches!(self, SegNode::State { .. })
    }

    pub fn is_estimator(&self) -> bool {
        matches!(self, SegNode::Estimator { .. })
    }

    pub fn is_sensing(&self) -> bool {
        matches!(self, SegNode::Sensing { .. })
    }

    pub fn component(&self) -> Option<&str> {
        match self {
            SegNode::State { component, .. } | SegNode::Estimator { component, .. } => Some(component),
            SegNode::Sensing { .. } => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SegNode::State { .. } => "state",
            SegNode::Estimator { .. } => "estimator",
            SegNode::Sensing { .. } => "sensing",
        }
    }
}

impl fmt::Display for SegNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegNode::State { component, property } => write!(f, "{component}.{property}"),
            SegNode::Estimator { component, estimator } => write!(f, "{component}.{estimator}"),
            SegNode::Sensing { sensor } => f.write_str(sensor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StateEstimationGraph {
    nodes: IndexSet<SegNode>,
    edges: IndexSet<(usize, usize)>,
    /// Property names treated as preconfigured constants.
    parameters: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("no translation rule between classes `{0}` and `{1}` (needed for connection {2}->{3})")]
    MissingRule(String, String, String, String),
    #[error("component `{0}` has unknown class `{1}`")]
    UnknownClass(String, String),
    #[error("sensing point `{0}` is not attached to a component")]
    DetachedSensor(String),
}

impl StateEstimationGraph {
    pub fn nodes(&self) -> impl Iterator<Item = &SegNode> {
        self.nodes.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&SegNode, &SegNode)> {
        self.edges.iter().map(|&(a, b)| (&self.nodes[a], &self.nodes[b]))
    }

    pub fn contains(&self, n: &SegNode) -> bool {
        self.nodes.contains(n)
    }

    pub fn has_edge(&self, a: &SegNode, b: &SegNode) -> bool {
        match (self.nodes.get_index_of(a), self.nodes.get_index_of(b)) {
            (Some(i), Some(j)) => self.edges.contains(&(i, j)),
            _ => false,
        }
    }

    pub fn is_parameter(&self, n: &SegNode) -> bool {
        matches!(n, SegNode::State { property, .. } if self.parameters.contains(property))
    }

    /// Sources of edges into `n`, in edge declaration order.
    pub fn predecessors(&self, n: &SegNode) -> Vec<&SegNode> {
        let Some(j) = self.nodes.get_index_of(n) else {
            return Vec::new();
        };
        self.edges
            .iter()
            .filter(|&&(_, b)| b == j)
            .map(|&(a, _)| &self.nodes[a])
            .collect()
    }

    /// Targets of edges out of `n`, in edge declaration order.
    pub fn successors(&self, n: &SegNode) -> Vec<&SegNode> {
        let Some(i) = self.nodes.get_index_of(n) else {
            return Vec::new();
        };
        self.edges
            .iter()
            .filter(|&&(a, _)| a == i)
            .map(|&(_, b)| &self.nodes[b])
            .collect()
    }

    /// Dynamic inputs of estimator `e` when it outputs `output`.
    pub fn estimator_inputs(&self, e: &SegNode, output: &SegNode) -> Vec<&SegNode> {
        self.predecessors(e)
            .into_iter()
            .filter(|x| x.is_state() && *x != output && !self.is_parameter(x))
            .collect()
    }

    /// Parameter states an estimator reads.
    pub fn estimator_parameters(&self, e: &SegNode) -> Vec<&SegNode> {
        self.predecessors(e)
            .into_iter()
            .filter(|x| self.is_parameter(x))
            .collect()
    }

    fn add_node(&mut self, n: SegNode) -> usize {
        self.nodes.insert_full(n).0
    }

    fn add_edge(&mut self, a: SegNode, b: SegNode) {
        let i = self.add_node(a);
        let j = self.add_node(b);
        self.edges.insert((i, j));
    }
}

fn attr_node(domain: &IndustrialDomain, component: &str, attr: &str) -> SegNode {
    match domain.attr_kind(attr) {
        Some(AttrKind::Estimator) => SegNode::estimator(component, attr),
        _ => SegNode::state(component, attr),
    }
}

/// Translates a process into its state estimation graph.
pub fn translate(p: &ProcessGraph, d: &IndustrialDomain) -> Result<StateEstimationGraph, TranslateError> {
    let mut g = StateEstimationGraph {
        nodes: IndexSet::new(),
        edges: IndexSet::new(),
        parameters: d.parameter_properties(),
    };
    for c in p.components.values() {
        let class = d
            .class(&c.class_name)
            .ok_or_else(|| TranslateError::UnknownClass(c.name.clone(), c.class_name.clone()))?;
        for a in &class.attributes {
            g.add_node(attr_node(d, &c.name, a));
        }
    }
    for s in p.sensors.keys() {
        g.add_node(SegNode::sensing(s));
    }
    for c in p.components.values() {
        let class = d.class(&c.class_name).expect("checked above");
        for (a, b) in &class.intra_edges {
            g.add_edge(attr_node(d, &c.name, a), attr_node(d, &c.name, b));
        }
    }
    for (x, y) in p.component_links() {
        let cx = &p.components[x].class_name;
        let cy = &p.components[y].class_name;
        let (rule, src, dst) = match d.rule(cx, cy) {
            Some(r) => (r, x, y),
            None => match d.rule(cy, cx) {
                Some(r) => (r, y, x),
                None => {
                    return Err(TranslateError::MissingRule(
                        cx.clone(),
                        cy.clone(),
                        x.to_string(),
                        y.to_string(),
                    ))
                }
            },
        };
        let instance = |class: &str| if class == rule.source_class { src } else { dst };
        for (a, b) in &rule.edges {
            g.add_edge(
                attr_node(d, instance(&a.class), &a.attribute),
                attr_node(d, instance(&b.class), &b.attribute),
            );
        }
    }
    for s in p.sensors.values() {
        let host = p
            .sensor_host(&s.name)
            .ok_or_else(|| TranslateError::DetachedSensor(s.name.clone()))?;
        g.add_edge(SegNode::sensing(&s.name), SegNode::state(host, &s.property));
    }
    Ok(g)
}

/// How a state in a tree obtains its value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Provider {
    Sensor(SegNode),
    Estimator { node: SegNode, inputs: Vec<TreeNode> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeNode {
    pub state: SegNode,
    pub provider: Provider,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EstimationTree {
    pub root: TreeNode,
    /// Parameter states consumed by estimators, supplied by preconfiguring
    /// the agents (shapes, and with them the initial level of storage).
    pub preconfigured: Vec<(SegNode, SegNode)>,
}

impl TreeNode {
    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TreeNode)) {
        if let Provider::Estimator { inputs, .. } = &self.provider {
            for i in inputs {
                i.visit(f);
            }
        }
        f(self);
    }

    pub fn provider_node(&self) -> &SegNode {
        match &self.provider {
            Provider::Sensor(s) => s,
            Provider::Estimator { node, .. } => node,
        }
    }
}

impl EstimationTree {
    /// Resolved states in post-order (inputs before the states they feed).
    pub fn post_order(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        self.root.visit(&mut |n| out.push(n));
        out
    }

    pub fn nodes(&self) -> Vec<&SegNode> {
        let mut out = Vec::new();
        for n in self.post_order() {
            out.push(n.provider_node());
            out.push(&n.state);
        }
        out
    }

    /// Edges oriented toward the root.
    pub fn edges(&self) -> Vec<(&SegNode, &SegNode)> {
        let mut out = Vec::new();
        for n in self.post_order() {
            if let Provider::Estimator { node, inputs } = &n.provider {
                for i in inputs {
                    out.push((&i.state, node));
                }
            }
            out.push((n.provider_node(), &n.state));
        }
        out
    }

    pub fn leaves(&self) -> Vec<&SegNode> {
        self.post_order()
            .into_iter()
            .filter_map(|n| match &n.provider {
                Provider::Sensor(s) => Some(s),
                _ => None,
            })
            .collect()
    }

    pub fn estimators(&self) -> Vec<&SegNode> {
        self.post_order()
            .into_iter()
            .filter_map(|n| match &n.provider {
                Provider::Estimator { node, .. } => Some(node),
                _ => None,
            })
            .collect()
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &TreeNode) -> usize {
            match &n.provider {
                Provider::Sensor(_) => 1,
                Provider::Estimator { inputs, .. } => 1 + inputs.iter().map(depth).max().unwrap_or(0),
            }
        }
        depth(&self.root)
    }

    /// Checks the tree against the graph it was drawn from. Returns a
    /// description of the first violation.
    pub fn check(&self, g: &StateEstimationGraph) -> Result<(), String> {
        let mut seen = HashSet::new();
        for n in self.nodes() {
            if !seen.insert(n) {
                return Err(format!("node {n} appears twice"));
            }
        }
        for n in self.post_order() {
            match &n.provider {
                Provider::Sensor(s) => {
                    if !s.is_sensing() || !g.has_edge(s, &n.state) {
                        return Err(format!("{s} does not measure {}", n.state));
                    }
                }
                Provider::Estimator { node, inputs } => {
                    if !g.has_edge(node, &n.state) {
                        return Err(format!("{node} does not output {}", n.state));
                    }
                    let want = g.estimator_inputs(node, &n.state);
                    let got: Vec<&SegNode> = inputs.iter().map(|i| &i.state).collect();
                    if want != got {
                        return Err(format!("{node} has inputs {got:?}, expected {want:?}"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.provider {
            Provider::Sensor(s) => write!(f, "{} <- {}", self.state, s),
            Provider::Estimator { node, inputs } => {
                write!(f, "{} <- {}(", self.state, node)?;
                for (i, n) in inputs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for EstimationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraverseError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("`{0}` is a {1} node; estimation trees are rooted at states")]
    NotAState(String, &'static str),
}

/// Enumerates the estimation trees rooted at `root`.
pub fn traverse(root: &SegNode, g: &StateEstimationGraph) -> Result<Vec<EstimationTree>, TraverseError> {
    traverse_capped(root, g, DEFAULT_DEPTH_CAP)
}

pub fn traverse_capped(
    root: &SegNode,
    g: &StateEstimationGraph,
    depth_cap: usize,
) -> Result<Vec<EstimationTree>, TraverseError> {
    if !g.contains(root) {
        return Err(TraverseError::UnknownNode(root.to_string()));
    }
    if !root.is_state() {
        return Err(TraverseError::NotAState(root.to_string(), root.kind_name()));
    }
    let mut used = HashSet::new();
    used.insert(root.clone());
    let trees = resolve(g, root, &used, depth_cap)
        .into_iter()
        .map(|(node, _)| {
            let mut preconfigured = Vec::new();
            node.visit(&mut |n| {
                if let Provider::Estimator { node: e, .. } = &n.provider {
                    for p in g.estimator_parameters(e) {
                        preconfigured.push((e.clone(), p.clone()));
                    }
                }
            });
            EstimationTree {
                root: node,
                preconfigured,
            }
        })
        .collect();
    Ok(trees)
}

/// Every way to resolve `state`, each with the set of nodes it consumed.
/// `used` already contains `state`.
fn resolve(
    g: &StateEstimationGraph,
    state: &SegNode,
    used: &HashSet<SegNode>,
    budget: usize,
) -> Vec<(TreeNode, HashSet<SegNode>)> {
    let mut out = Vec::new();
    let preds = g.predecessors(state);
    for s in preds.iter().filter(|n| n.is_sensing()) {
        if used.contains(*s) {
            continue;
        }
        let mut u = used.clone();
        u.insert((*s).clone());
        out.push((
            TreeNode {
                state: state.clone(),
                provider: Provider::Sensor((*s).clone()),
            },
            u,
        ));
    }
    if budget == 0 {
        return out;
    }
    for e in preds.iter().filter(|n| n.is_estimator()) {
        if used.contains(*e) {
            continue;
        }
        let inputs = g.estimator_inputs(e, state);
        if inputs.iter().any(|i| used.contains(*i)) {
            continue;
        }
        let mut u = used.clone();
        u.insert((*e).clone());
        u.extend(inputs.iter().map(|i| (*i).clone()));
        // cartesian product over inputs, first input outermost
        let mut partial: Vec<(Vec<TreeNode>, HashSet<SegNode>)> = vec![(Vec::new(), u)];
        for input in &inputs {
            let mut next = Vec::new();
            for (done, u) in partial {
                for (sub, u2) in resolve(g, input, &u, budget - 1) {
                    let mut d = done.clone();
                    d.push(sub);
                    next.push((d, u2));
                }
            }
            partial = next;
        }
        for (children, u) in partial {
            out.push((
                TreeNode {
                    state: state.clone(),
                    provider: Provider::Estimator {
                        node: (*e).clone(),
                        inputs: children,
                    },
                },
                u,
            ));
        }
    }
    out
}

/// Parses `component.property` into a state node.
pub fn parse_state(s: &str) -> Option<SegNode> {
    let (c, p) = s.rsplit_once('.')?;
    if c.is_empty() || p.is_empty() {
        return None;
    }
    Some(SegNode::state(c, p))
}

/// Finds the node a qualified name refers to.
pub fn find_node(g: &StateEstimationGraph, name: &str) -> Option<SegNode> {
    g.nodes().find(|n| n.to_string() == name).cloned()
}

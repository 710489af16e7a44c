//! Shared fixtures, random protocol generators and test oracles.
#![allow(dead_code)]

use std::collections::HashSet;

use icpsdl::estimation::{EstimationTree, Provider, SegNode, StateEstimationGraph, TreeNode};
use icpsdl::lang::{Session, Value};
use icpsdl::protocol::{Direction, GlobalProtocol, Label, LocalProtocol, MessageType, Participant};
use icpsdl::session::{project_all, LocalConfiguration};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WDN_DOMAIN: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/wdn_domain.icps"));
pub const WDN_REPOSITORY: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/wdn_repository.icps"));
pub const WDN_REPOSITORY_SHORT: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/tests/golden/wdn_repository_short.icps"
));
pub const SIMPLE_PROCESS: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/simple_process.icps"));
pub const TANK_LOOP: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/tank_loop.icps"));
pub const REASONING: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/reasoning.icps"));
pub const RUNNING_EXAMPLE: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../scripts/running_example.icps"
));
pub const RUNNING_SCENARIO: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../scripts/running_example.scenario"
));

pub fn p(s: &str) -> Participant {
    Participant::new(s).unwrap()
}

pub fn m(s: &str) -> MessageType {
    MessageType::new(s).unwrap()
}

pub fn l(s: &str) -> Label {
    Label::new(s).unwrap()
}

/// Runs the bundled running example and returns the session.
pub fn running_example() -> Session {
    let mut s = Session::new();
    let (_, diags) = s.run(RUNNING_EXAMPLE);
    assert!(diags.is_empty(), "{diags:?}");
    s
}

pub fn trees_of(s: &Session, name: &str) -> Vec<EstimationTree> {
    match s.get(name) {
        Some(Value::Trees(ts, _)) => ts.to_vec(),
        other => panic!("`{name}` is not a tree list: {other:?}"),
    }
}

pub fn graph_of(s: &Session, name: &str) -> StateEstimationGraph {
    match s.get(name) {
        Some(Value::Graph(g, _)) => (**g).clone(),
        other => panic!("`{name}` is not a graph: {other:?}"),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Tree oracle

/// A canonical text for a tree node, independent of the library's Display.
pub fn canon(n: &TreeNode) -> String {
    match &n.provider {
        Provider::Sensor(s) => format!("{}<{}", n.state, s),
        Provider::Estimator { node, inputs } => {
            let ins: Vec<String> = inputs.iter().map(canon).collect();
            format!("{}<{}[{}]", n.state, node, ins.join(","))
        }
    }
}

#[derive(Clone, Debug)]
pub enum BruteTree {
    Sensor(String, String),
    Estimator(String, String, Vec<BruteTree>),
}

impl BruteTree {
    fn canon(&self) -> String {
        match self {
            BruteTree::Sensor(state, s) => format!("{state}<{s}"),
            BruteTree::Estimator(state, e, ins) => {
                let ins: Vec<String> = ins.iter().map(|i| i.canon()).collect();
                format!("{state}<{e}[{}]", ins.join(","))
            }
        }
    }

    fn collect(&self, out: &mut Vec<String>) {
        match self {
            BruteTree::Sensor(state, s) => {
                out.push(state.clone());
                out.push(s.clone());
            }
            BruteTree::Estimator(state, e, ins) => {
                out.push(state.clone());
                out.push(e.clone());
                for i in ins {
                    i.collect(out);
                }
            }
        }
    }
}

/// Enumerates every tree for `state` without any sharing constraint other
/// than "no state twice on one root path" (so the search terminates), then
/// keeps the trees whose nodes are pairwise distinct. Parameter states
/// (`params`) are never inputs.
pub fn brute_force_trees(g: &StateEstimationGraph, root: &SegNode, params: &[&str], cap: usize) -> Vec<String> {
    fn is_param(n: &SegNode, params: &[&str]) -> bool {
        matches!(n, SegNode::State { property, .. } if params.contains(&property.as_str()))
    }
    fn all(
        g: &StateEstimationGraph,
        s: &SegNode,
        path: &mut Vec<SegNode>,
        params: &[&str],
        cap: usize,
    ) -> Vec<BruteTree> {
        let mut out = Vec::new();
        if path.len() > cap {
            return out;
        }
        let preds: Vec<SegNode> = g.nodes().filter(|a| g.has_edge(a, s)).cloned().collect();
        for a in &preds {
            if a.is_sensing() {
                out.push(BruteTree::Sensor(s.to_string(), a.to_string()));
            }
        }
        for e in preds.iter().filter(|a| a.is_estimator()) {
            let inputs: Vec<SegNode> = g
                .nodes()
                .filter(|x| x.is_state() && *x != s && !is_param(x, params) && g.has_edge(x, e))
                .cloned()
                .collect();
            if inputs.iter().any(|i| path.contains(i)) {
                continue;
            }
            path.push(s.clone());
            let options: Vec<Vec<BruteTree>> = inputs.iter().map(|i| all(g, i, path, params, cap)).collect();
            path.pop();
            // Cartesian product over the inputs.
            let mut combos: Vec<Vec<BruteTree>> = vec![vec![]];
            for opts in &options {
                let mut next = Vec::new();
                for c in &combos {
                    for o in opts {
                        let mut c2 = c.clone();
                        c2.push(o.clone());
                        next.push(c2);
                    }
                }
                combos = next;
            }
            for c in combos {
                out.push(BruteTree::Estimator(s.to_string(), e.to_string(), c));
            }
        }
        out
    }
    let mut path = Vec::new();
    all(g, root, &mut path, params, cap)
        .into_iter()
        .filter(|t| {
            let mut nodes = Vec::new();
            t.collect(&mut nodes);
            let set: HashSet<&String> = nodes.iter().collect();
            set.len() == nodes.len()
        })
        .map(|t| t.canon())
        .collect()
}

// ---------------------------------------------------------------------------
// Random protocols

const ROLES: [&str; 5] = ["a", "b", "c", "d", "e"];
const PAYLOADS: [&str; 3] = ["x", "y", "z"];
const LABELS: [&str; 3] = ["L1", "L2", "L3"];

fn two_roles(r: &mut ChaCha8Rng, n: usize) -> (Participant, Participant) {
    let picked: Vec<&&str> = ROLES[..n].choose_multiple(r, 2).collect();
    (p(picked[0]), p(picked[1]))
}

struct GlobalGen<'a> {
    rng: &'a mut ChaCha8Rng,
    roles: usize,
    fresh: usize,
}

impl GlobalGen<'_> {
    fn term(&mut self, depth: usize, scope: &[Label], must_act: bool) -> GlobalProtocol {
        let stop = depth <= 1;
        let choice = self.rng.gen_range(0..10);
        if !must_act && (stop || choice < 2) {
            if !scope.is_empty() && self.rng.gen_bool(0.6) {
                return GlobalProtocol::Var(scope.choose(self.rng).unwrap().clone());
            }
            return GlobalProtocol::End;
        }
        let depth = depth.max(2);
        if choice < 3 && depth >= 3 && scope.len() < 2 {
            let t = l(&format!("t{}", self.fresh));
            self.fresh += 1;
            let mut inner = scope.to_vec();
            inner.push(t.clone());
            let body = self.term(depth - 1, &inner, true);
            if body.has_free(&t) {
                return GlobalProtocol::rec(t, body);
            }
            return body;
        }
        let (s, q) = two_roles(self.rng, self.roles);
        if choice < 5 && depth >= 3 {
            // Branches differ only in a prefix between the two choosers, so
            // everyone else sees the same continuation.
            let suffix = self.term(depth - 2, scope, false);
            let n = self.rng.gen_range(1..=LABELS.len());
            let mut branches = Vec::new();
            for label in &LABELS[..n] {
                let k = if self.rng.gen_bool(0.5) {
                    let (from, to) = if self.rng.gen_bool(0.5) {
                        (s.clone(), q.clone())
                    } else {
                        (q.clone(), s.clone())
                    };
                    GlobalProtocol::pass(from, to, m(PAYLOADS.choose(self.rng).unwrap()), suffix.clone()).unwrap()
                } else {
                    suffix.clone()
                };
                branches.push((m(label), k));
            }
            return GlobalProtocol::choice(s, q, m("sig"), branches).unwrap();
        }
        let cont = self.term(depth - 1, scope, false);
        GlobalProtocol::pass(s, q, m(PAYLOADS.choose(self.rng).unwrap()), cont).unwrap()
    }
}

/// A random closed, guarded global protocol with depth at most `max_depth`
/// over at most five roles. Not necessarily projectable.
pub fn random_global(r: &mut ChaCha8Rng, max_depth: usize) -> GlobalProtocol {
    loop {
        let roles = r.gen_range(2..=ROLES.len());
        let mut gen = GlobalGen {
            rng: r,
            roles,
            fresh: 0,
        };
        let g = gen.term(max_depth, &[], true);
        if g.depth() <= max_depth && g.validate().is_ok() {
            return g;
        }
    }
}

/// A random global protocol that projects onto all its roles.
pub fn random_projectable_global(r: &mut ChaCha8Rng, max_depth: usize) -> (GlobalProtocol, LocalConfiguration) {
    loop {
        let g = random_global(r, max_depth);
        if let Ok(c) = project_all(&g) {
            return (g, c);
        }
    }
}

/// A random local protocol for `me` over `roles`.
pub fn random_local(
    r: &mut ChaCha8Rng,
    me: &str,
    roles: &[&str],
    depth: usize,
    scope: &mut Vec<Label>,
) -> LocalProtocol {
    let others: Vec<&str> = roles.iter().copied().filter(|x| *x != me).collect();
    let k = r.gen_range(0..10);
    if depth == 0 || k < 2 {
        if !scope.is_empty() && r.gen_bool(0.7) {
            return LocalProtocol::Var(scope.choose(r).unwrap().clone());
        }
        return LocalProtocol::End;
    }
    let peer = p(others.choose(r).unwrap());
    let dir = if r.gen_bool(0.5) {
        Direction::Send
    } else {
        Direction::Receive
    };
    if k < 4 && scope.len() < 2 {
        let t = l(&format!("r{}", scope.len()));
        scope.push(t.clone());
        let first = LocalProtocol::prefix(
            icpsdl::protocol::Action {
                direction: dir,
                peer,
                payload: m(PAYLOADS[..2].choose(r).unwrap()),
            },
            random_local(r, me, roles, depth - 1, scope),
        );
        scope.pop();
        return LocalProtocol::rec(t, first);
    }
    if k < 5 {
        let n = r.gen_range(1..=2);
        let branches = LABELS[..n]
            .iter()
            .map(|lab| (m(lab), random_local(r, me, roles, depth - 1, scope)))
            .collect();
        return LocalProtocol::choice(peer, dir, m("sig"), branches).unwrap();
    }
    LocalProtocol::prefix(
        icpsdl::protocol::Action {
            direction: dir,
            peer,
            payload: m(PAYLOADS[..2].choose(r).unwrap()),
        },
        random_local(r, me, roles, depth - 1, scope),
    )
}

/// A mixed population: projections of random globals (live), projections
/// with one role perturbed, and configurations of independent random roles.
pub fn random_configuration(r: &mut ChaCha8Rng) -> LocalConfiguration {
    match r.gen_range(0..3) {
        0 => random_projectable_global(r, 6).1,
        1 => {
            let (_, c) = random_projectable_global(r, 6);
            let names: Vec<String> = c.participants().map(|x| x.to_string()).collect();
            let victim = names.choose(r).unwrap().clone();
            let roles: Vec<&str> = names.iter().map(String::as_str).collect();
            let mut out = LocalConfiguration::new();
            for (q, t) in c.iter() {
                let t = if q.as_str() == victim {
                    random_local(r, &victim, &roles, 3, &mut Vec::new())
                } else {
                    t.clone()
                };
                out.bind(q.clone(), t).unwrap();
            }
            out
        }
        _ => {
            let n = r.gen_range(2..=3);
            let roles = &ROLES[..n];
            let mut out = LocalConfiguration::new();
            for me in roles {
                out.bind(p(me), random_local(r, me, roles, 4, &mut Vec::new())).unwrap();
            }
            out
        }
    }
}

/// A chain of `n` passes from `a` to `b` under one loop: size grows with n.
pub fn chain(n: usize) -> LocalConfiguration {
    let mut ta = LocalProtocol::Var(l("t"));
    let mut tb = LocalProtocol::Var(l("t"));
    for i in 0..n {
        let payload = m(PAYLOADS[i % PAYLOADS.len()]);
        ta = LocalProtocol::send(p("b"), payload.clone(), ta);
        tb = LocalProtocol::receive(p("a"), payload, tb);
    }
    let mut c = LocalConfiguration::new();
    c.bind(p("a"), LocalProtocol::rec(l("t"), ta)).unwrap();
    c.bind(p("b"), LocalProtocol::rec(l("t"), tb)).unwrap();
    c
}

//! Configurations of interacting agents: communication, deadlock-freedom and
//! liveness checking, and the composition/projection relation.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use indexmap::{IndexMap, IndexSet};
use thiserror::Error;

use crate::protocol::{
    Action, Direction, GlobalProtocol, Label, LocalChoice, LocalProtocol, MessageType, Participant, ProtocolError,
};

/// Default number of configurations explored by the liveness oracles.
pub const DEFAULT_STATE_BUDGET: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigurationError {
    #[error("participant `{0}` is bound twice")]
    DuplicateParticipant(Participant),
    #[error("protocol of `{participant}`: {source}")]
    Protocol {
        participant: Participant,
        source: ProtocolError,
    },
}

/// A finite map from participants to local protocols. Iteration follows
/// declaration order; equality ignores it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LocalConfiguration {
    roles: IndexMap<Participant, LocalProtocol>,
}

impl LocalConfiguration {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_roles(
        roles: impl IntoIterator<Item = (Participant, LocalProtocol)>,
    ) -> Result<Self, ConfigurationError> {
        let mut c = LocalConfiguration::new();
        for (p, t) in roles {
            c.bind(p, t)?;
        }
        Ok(c)
    }

    pub fn bind(&mut self, p: Participant, t: LocalProtocol) -> Result<(), ConfigurationError> {
        if self.roles.contains_key(&p) {
            return Err(ConfigurationError::DuplicateParticipant(p));
        }
        self.roles.insert(p, t);
        Ok(())
    }

    /// Union of two configurations with disjoint domains.
    pub fn union(&self, other: &LocalConfiguration) -> Result<Self, ConfigurationError> {
        let mut c = self.clone();
        for (p, t) in &other.roles {
            c.bind(p.clone(), t.clone())?;
        }
        Ok(c)
    }

    pub fn get(&self, p: &Participant) -> Option<&LocalProtocol> {
        self.roles.get(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Participant, &LocalProtocol)> {
        self.roles.iter()
    }

    pub fn participants(&self) -> impl Iterator<Item = &Participant> {
        self.roles.keys()
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn size(&self) -> usize {
        self.roles.values().map(LocalProtocol::size).sum()
    }

    pub fn validate(&self) -> Result<(), ConfigurationError> {
        for (p, t) in &self.roles {
            t.validate().map_err(|source| ConfigurationError::Protocol {
                participant: p.clone(),
                source,
            })?;
        }
        Ok(())
    }

    pub fn active_participants(&self) -> BTreeSet<Participant> {
        self.roles
            .iter()
            .filter(|(_, t)| !t.is_end())
            .map(|(p, _)| p.clone())
            .collect()
    }

    pub fn comm_step(&self, a: &CommAction) -> Option<LocalConfiguration> {
        let si = self.roles.get_index_of(&a.sender)?;
        let ri = self.roles.get_index_of(&a.receiver)?;
        let states: Vec<LocalProtocol> = self.roles.values().cloned().collect();
        let next = step_states(&states, si, ri, a)?;
        Some(LocalConfiguration {
            roles: self.roles.keys().cloned().zip(next).collect(),
        })
    }

    pub fn enabled(&self) -> Vec<CommAction> {
        let names: Vec<&Participant> = self.roles.keys().collect();
        let states: Vec<&LocalProtocol> = self.roles.values().collect();
        enabled_in(&names, &states, &self.roles)
            .into_iter()
            .map(|(_, _, a)| a)
            .collect()
    }

    /// Renames participants, both as keys and as peers inside protocols.
    pub fn rename(&self, f: &impl Fn(&Participant) -> Participant) -> LocalConfiguration {
        LocalConfiguration {
            roles: self.roles.iter().map(|(p, t)| (f(p), t.rename(f))).collect(),
        }
    }
}

impl fmt::Display for LocalConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.roles.keys().map(|p| p.as_str().len()).max().unwrap_or(0);
        writeln!(f, "local {{")?;
        for (p, t) in &self.roles {
            writeln!(f, "  {:width$} = {}", p.as_str(), t, width = width)?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CommAction {
    pub sender: Participant,
    pub receiver: Participant,
    pub payload: MessageType,
}

impl CommAction {
    pub fn new(sender: Participant, receiver: Participant, payload: MessageType) -> Self {
        CommAction {
            sender,
            receiver,
            payload,
        }
    }

    pub fn involves(&self, p: &Participant) -> bool {
        &self.sender == p || &self.receiver == p
    }
}

impl fmt::Display for CommAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}:{}", self.sender, self.receiver, self.payload)
    }
}

fn step_states(states: &[LocalProtocol], si: usize, ri: usize, a: &CommAction) -> Option<Vec<LocalProtocol>> {
    if si == ri {
        return None;
    }
    let send = Action::send(a.receiver.clone(), a.payload.clone());
    let recv = Action::receive(a.sender.clone(), a.payload.clone());
    let s_next = states[si].local_step(&send).into_iter().next()?;
    let r_next = states[ri].local_step(&recv).into_iter().next()?;
    let mut next = states.to_vec();
    next[si] = s_next;
    next[ri] = r_next;
    Some(next)
}

fn enabled_in<T>(
    names: &[&Participant],
    states: &[&LocalProtocol],
    index: &IndexMap<Participant, T>,
) -> Vec<(usize, usize, CommAction)> {
    let mut out = Vec::new();
    for (si, t) in states.iter().enumerate() {
        for a in t.initial_actions() {
            if a.direction != Direction::Send {
                continue;
            }
            let Some(ri) = index.get_index_of(&a.peer) else {
                continue;
            };
            let dual = Action::receive(names[si].clone(), a.payload.clone());
            if ri != si && states[ri].initial_actions().contains(&dual) {
                out.push((si, ri, CommAction::new(names[si].clone(), a.peer.clone(), a.payload)));
            }
        }
    }
    out
}

/// Result of a budgeted state-space check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    /// A path of communications from the initial configuration to a witness
    /// state, plus the participants at fault there.
    Violated {
        path: Vec<CommAction>,
        culprits: Vec<Participant>,
    },
    BudgetExceeded {
        explored: usize,
    },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds => f.write_str("true"),
            Verdict::Violated { path, culprits } => {
                let names: Vec<_> = culprits.iter().map(|p| p.to_string()).collect();
                write!(f, "false (participants {} stuck", names.join(", "))?;
                if path.is_empty() {
                    f.write_str(" initially)")
                } else {
                    let steps: Vec<_> = path.iter().map(|a| a.to_string()).collect();
                    write!(f, " after {})", steps.join(". "))
                }
            }
            Verdict::BudgetExceeded { explored } => {
                write!(f, "budget exceeded after {explored} states")
            }
        }
    }
}

/// The reachable configuration graph. States are keyed by the structural
/// value of every bound protocol; loops are only unfolded inside a step, so
/// a loop state is revisited rather than expanded forever.
struct StateSpace {
    names: Vec<Participant>,
    states: IndexSet<Vec<LocalProtocol>>,
    edges: Vec<Vec<(CommAction, usize)>>,
    parent: Vec<Option<(usize, CommAction)>>,
}

impl StateSpace {
    fn explore(c: &LocalConfiguration, budget: usize) -> Result<StateSpace, usize> {
        let names: Vec<Participant> = c.roles.keys().cloned().collect();
        let name_refs: Vec<&Participant> = names.iter().collect();
        let mut states = IndexSet::new();
        states.insert(c.roles.values().cloned().collect::<Vec<_>>());
        let mut edges = Vec::new();
        let mut parent = vec![None];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let current = states[i].clone();
            let refs: Vec<&LocalProtocol> = current.iter().collect();
            let mut out = Vec::new();
            for (si, ri, a) in enabled_in(&name_refs, &refs, &c.roles) {
                let next = step_states(&current, si, ri, &a).expect("enabled action must step");
                let (j, fresh) = states.insert_full(next);
                if fresh {
                    if states.len() > budget {
                        return Err(states.len());
                    }
                    parent.push(Some((i, a.clone())));
                    queue.push_back(j);
                }
                out.push((a, j));
            }
            if edges.len() <= i {
                edges.resize_with(i + 1, Vec::new);
            }
            edges[i] = out;
        }
        edges.resize_with(states.len(), Vec::new);
        Ok(StateSpace {
            names,
            states,
            edges,
            parent,
        })
    }

    fn path_to(&self, mut i: usize) -> Vec<CommAction> {
        let mut path = Vec::new();
        while let Some((p, a)) = &self.parent[i] {
            path.push(a.clone());
            i = *p;
        }
        path.reverse();
        path
    }

    fn active(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.states[i]
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.is_end())
            .map(|(k, _)| k)
    }
}

pub fn is_deadlock_free(c: &LocalConfiguration, state_budget: usize) -> Verdict {
    let space = match StateSpace::explore(c, state_budget) {
        Ok(s) => s,
        Err(explored) => return Verdict::BudgetExceeded { explored },
    };
    for i in 0..space.states.len() {
        if space.edges[i].is_empty() {
            let culprits: Vec<Participant> = space.active(i).map(|k| space.names[k].clone()).collect();
            if !culprits.is_empty() {
                return Verdict::Violated {
                    path: space.path_to(i),
                    culprits,
                };
            }
        }
    }
    Verdict::Holds
}

pub fn is_live(c: &LocalConfiguration, state_budget: usize) -> Verdict {
    let space = match StateSpace::explore(c, state_budget) {
        Ok(s) => s,
        Err(explored) => return Verdict::BudgetExceeded { explored },
    };
    let n = space.states.len();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, out) in space.edges.iter().enumerate() {
        for (_, j) in out {
            reverse[*j].push(i);
        }
    }
    for (k, name) in space.names.iter().enumerate() {
        // states from which `name` can eventually take part in a communication
        let mut good = vec![false; n];
        let mut queue = VecDeque::new();
        for (i, edges) in space.edges.iter().enumerate() {
            if edges.iter().any(|(a, _)| a.involves(name)) {
                good[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(j) = queue.pop_front() {
            for &i in &reverse[j] {
                if !good[i] {
                    good[i] = true;
                    queue.push_back(i);
                }
            }
        }
        for (i, ok) in good.iter().enumerate() {
            if !ok && !space.states[i][k].is_end() {
                return Verdict::Violated {
                    path: space.path_to(i),
                    culprits: vec![name.clone()],
                };
            }
        }
    }
    Verdict::Holds
}

/// The composition rule that could not be applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    End,
    Var,
    Pass,
    Choice,
    Rec,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::End => "end",
            Rule::Var => "var",
            Rule::Pass => "message-pass",
            Rule::Choice => "choice",
            Rule::Rec => "recursion",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot compose ({rule} rule): {reason}; stuck at {stuck}{}", trace_suffix(.trace))]
pub struct CompositionError {
    pub rule: Rule,
    pub reason: String,
    pub participants: Vec<Participant>,
    /// The residual configuration no rule applies to.
    pub stuck: String,
    /// Communications composed before getting stuck.
    pub trace: Vec<String>,
}

fn trace_suffix(trace: &[String]) -> String {
    if trace.is_empty() {
        String::new()
    } else {
        format!(" after {}", trace.join(". "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot project onto `{role}`: its behaviour differs between the branches of the {sender}->{receiver} choice")]
pub struct ProjectionError {
    pub role: Participant,
    pub sender: Participant,
    pub receiver: Participant,
}

/// A role's residual protocol during composition. `Jump` stands for the
/// variable an `end` role takes under a loop binder.
#[derive(Clone, Copy)]
enum Slot<'a> {
    Term(&'a LocalProtocol),
    Jump(&'a Label),
}

impl Slot<'_> {
    fn render(&self) -> String {
        match self {
            Slot::Term(t) => t.to_string(),
            Slot::Jump(t) => t.to_string(),
        }
    }
}

struct Composer<'a> {
    names: Vec<&'a Participant>,
    index: &'a IndexMap<Participant, LocalProtocol>,
    steps: usize,
    trace: Vec<String>,
}

impl<'a> Composer<'a> {
    fn stuck(&self, slots: &[Slot<'a>], rule: Rule, reason: String, who: Vec<usize>) -> CompositionError {
        let stuck: Vec<String> = self
            .names
            .iter()
            .zip(slots)
            .map(|(p, s)| format!("{p} = {}", s.render()))
            .collect();
        CompositionError {
            rule,
            reason,
            participants: who.into_iter().map(|i| self.names[i].clone()).collect(),
            stuck: format!("{{ {} }}", stuck.join(", ")),
            trace: self.trace.clone(),
        }
    }

    fn compose(&mut self, slots: Vec<Slot<'a>>) -> Result<GlobalProtocol, CompositionError> {
        self.steps += 1;
        let mut first_failure: Option<CompositionError> = None;
        for i in 0..slots.len() {
            self.steps += 1;
            let Slot::Term(t) = slots[i] else { continue };
            let peer = match t {
                LocalProtocol::Prefix(a, _) if a.direction == Direction::Send => &a.peer,
                LocalProtocol::Choice(c) if c.direction == Direction::Send => &c.peer,
                _ => continue,
            };
            self.steps += 1;
            let j = match self.index.get_index_of(peer) {
                Some(j) if j != i => j,
                _ => {
                    first_failure.get_or_insert_with(|| {
                        self.stuck(
                            &slots,
                            Rule::Pass,
                            format!("`{}` sends to unknown participant `{peer}`", self.names[i]),
                            vec![i],
                        )
                    });
                    continue;
                }
            };
            match (t, slots[j]) {
                (LocalProtocol::Prefix(a, k), Slot::Term(LocalProtocol::Prefix(b, kr)))
                    if b.direction == Direction::Receive && &b.peer == self.names[i] && b.payload == a.payload =>
                {
                    let mut next = slots.clone();
                    next[i] = Slot::Term(k);
                    next[j] = Slot::Term(kr);
                    let step = format!("{}->{}:{}", self.names[i], self.names[j], a.payload);
                    self.trace.push(step);
                    let cont = self.compose(next)?;
                    self.trace.pop();
                    return Ok(GlobalProtocol::Pass {
                        sender: self.names[i].clone(),
                        receiver: self.names[j].clone(),
                        payload: a.payload.clone(),
                        cont: Box::new(cont),
                    });
                }
                (LocalProtocol::Choice(cs), Slot::Term(LocalProtocol::Choice(cr)))
                    if cr.direction == Direction::Receive && &cr.peer == self.names[i] =>
                {
                    if !same_branching(cs, cr) {
                        first_failure.get_or_insert_with(|| {
                            self.stuck(
                                &slots,
                                Rule::Choice,
                                format!(
                                    "`{}` offers {} but `{}` expects {}",
                                    self.names[i],
                                    branching(cs),
                                    self.names[j],
                                    branching(cr)
                                ),
                                vec![i, j],
                            )
                        });
                        continue;
                    }
                    let mut branches = Vec::with_capacity(cs.branches().len());
                    for ((label, ks), (_, kr)) in cs.branches().iter().zip(cr.branches()) {
                        let mut next = slots.clone();
                        next[i] = Slot::Term(ks);
                        next[j] = Slot::Term(kr);
                        let step = format!("{}->{}:{}", self.names[i], self.names[j], label);
                        self.trace.push(step);
                        let g = self.compose(next)?;
                        self.trace.pop();
                        branches.push((label.clone(), g));
                    }
                    return Ok(GlobalProtocol::Choice {
                        sender: self.names[i].clone(),
                        receiver: self.names[j].clone(),
                        sort: cs.sort.clone(),
                        branches,
                    });
                }
                _ => {
                    first_failure.get_or_insert_with(|| {
                        self.stuck(
                            &slots,
                            Rule::Pass,
                            format!(
                                "no dual action for `{}` at `{}` (found `{}`)",
                                t_head(t),
                                self.names[j],
                                slots[j].render()
                            ),
                            vec![i, j],
                        )
                    });
                }
            }
        }
        if let Some(err) = first_failure {
            return Err(err);
        }
        self.compose_structural(slots)
    }

    // The recursion, end and variable rules.
    fn compose_structural(&mut self, slots: Vec<Slot<'a>>) -> Result<GlobalProtocol, CompositionError> {
        let mut label: Option<&'a Label> = None;
        let mut has_rec = false;
        let mut var: Option<&'a Label> = None;
        let mut ends = 0;
        for (i, s) in slots.iter().copied().enumerate() {
            self.steps += 1;
            match s {
                Slot::Term(LocalProtocol::End) => ends += 1,
                Slot::Term(LocalProtocol::Rec(t, _)) => {
                    has_rec = true;
                    match label {
                        None => label = Some(t),
                        Some(l) if l == t => {}
                        Some(l) => {
                            return Err(self.stuck(
                                &slots,
                                Rule::Rec,
                                format!("mixed loop labels `{l}` and `{t}`"),
                                vec![i],
                            ))
                        }
                    }
                }
                Slot::Term(LocalProtocol::Var(t)) | Slot::Jump(t) => match var {
                    None => var = Some(t),
                    Some(v) if v == t => {}
                    Some(v) => {
                        return Err(self.stuck(
                            &slots,
                            Rule::Var,
                            format!("roles jump to different loops `{v}` and `{t}`"),
                            vec![i],
                        ))
                    }
                },
                Slot::Term(_) => {
                    let blocked: Vec<usize> = (0..slots.len())
                        .filter(|&k| {
                            matches!(
                                slots[k],
                                Slot::Term(LocalProtocol::Prefix(..) | LocalProtocol::Choice(..))
                            )
                        })
                        .collect();
                    return Err(self.stuck(
                        &slots,
                        Rule::Pass,
                        "no participant can send to a matching receiver".to_string(),
                        blocked,
                    ));
                }
            }
        }
        if has_rec {
            let t = label.expect("loop label recorded");
            if var.is_some() {
                return Err(self.stuck(
                    &slots,
                    Rule::Rec,
                    format!("loop `{t}` mixed with pending jumps"),
                    vec![],
                ));
            }
            let mut next = Vec::with_capacity(slots.len());
            for s in &slots {
                next.push(match s {
                    Slot::Term(LocalProtocol::Rec(_, body)) => {
                        if matches!(&**body, LocalProtocol::Var(b) if b == t) {
                            return Err(self.stuck(&slots, Rule::Rec, format!("loop `{t}` has an empty body"), vec![]));
                        }
                        Slot::Term(body)
                    }
                    _ => Slot::Jump(t),
                });
            }
            let body = self.compose(next)?;
            return Ok(GlobalProtocol::rec(t.clone(), body));
        }
        match (var, ends) {
            (None, _) => Ok(GlobalProtocol::End),
            (Some(t), 0) => Ok(GlobalProtocol::Var(t.clone())),
            (Some(t), _) => {
                let finished: Vec<usize> = (0..slots.len())
                    .filter(|&k| matches!(slots[k], Slot::Term(LocalProtocol::End)))
                    .collect();
                Err(self.stuck(
                    &slots,
                    Rule::Var,
                    format!("some roles jump to `{t}` while others have ended"),
                    finished,
                ))
            }
        }
    }
}

fn t_head(t: &LocalProtocol) -> String {
    match t {
        LocalProtocol::Prefix(a, _) => a.to_string(),
        LocalProtocol::Choice(c) => format!("{}{}{}", c.peer, c.direction.symbol(), c.sort),
        other => other.to_string(),
    }
}

fn same_branching(a: &LocalChoice, b: &LocalChoice) -> bool {
    a.sort == b.sort && a.labels().eq(b.labels())
}

fn branching(c: &LocalChoice) -> String {
    let labels: Vec<_> = c.labels().map(|l| l.to_string()).collect();
    format!("{} {{{}}}", c.sort, labels.join(", "))
}

/// Composes a configuration into a global protocol, scanning senders in
/// declaration order.
pub fn compose(c: &LocalConfiguration) -> Result<GlobalProtocol, CompositionError> {
    compose_counted(c).map(|(g, _)| g)
}

/// Like [`compose`], also returning the number of elementary steps taken
/// (rule attempts plus role inspections).
pub fn compose_counted(c: &LocalConfiguration) -> Result<(GlobalProtocol, usize), CompositionError> {
    let mut composer = Composer {
        names: c.roles.keys().collect(),
        index: &c.roles,
        steps: 0,
        trace: Vec::new(),
    };
    let slots = c.roles.values().map(Slot::Term).collect();
    let g = composer.compose(slots)?;
    Ok((g, composer.steps))
}

/// Projects `g` onto `roles`, in the given order. Roles that do not take part
/// in `g` are bound to `end`.
pub fn project(g: &GlobalProtocol, roles: &[Participant]) -> Result<LocalConfiguration, ProjectionError> {
    let involved = g.participants();
    let mut out = LocalConfiguration::new();
    for r in roles {
        let t = if involved.contains(r) {
            project_role(g, r)?
        } else {
            LocalProtocol::End
        };
        // duplicates in `roles` are ignored
        let _ = out.bind(r.clone(), t);
    }
    Ok(out)
}

/// Projects onto the participants of `g` in order of first appearance.
pub fn project_all(g: &GlobalProtocol) -> Result<LocalConfiguration, ProjectionError> {
    project(g, &g.roles())
}

pub fn project_role(g: &GlobalProtocol, r: &Participant) -> Result<LocalProtocol, ProjectionError> {
    Ok(match g {
        GlobalProtocol::End => LocalProtocol::End,
        GlobalProtocol::Var(t) => LocalProtocol::Var(t.clone()),
        GlobalProtocol::Pass {
            sender,
            receiver,
            payload,
            cont,
        } => {
            let k = project_role(cont, r)?;
            if r == sender {
                LocalProtocol::send(receiver.clone(), payload.clone(), k)
            } else if r == receiver {
                LocalProtocol::receive(sender.clone(), payload.clone(), k)
            } else {
                k
            }
        }
        GlobalProtocol::Choice {
            sender,
            receiver,
            sort,
            branches,
        } => {
            let projected = branches
                .iter()
                .map(|(l, k)| Ok((l.clone(), project_role(k, r)?)))
                .collect::<Result<Vec<_>, ProjectionError>>()?;
            let (peer, dir) = if r == sender {
                (receiver, Direction::Send)
            } else if r == receiver {
                (sender, Direction::Receive)
            } else {
                let first = &projected[0].1;
                if projected.iter().any(|(_, k)| k != first) {
                    return Err(ProjectionError {
                        role: r.clone(),
                        sender: sender.clone(),
                        receiver: receiver.clone(),
                    });
                }
                return Ok(first.clone());
            };
            LocalProtocol::choice(peer.clone(), dir, sort.clone(), projected)
                .expect("global choice branches are non-empty and distinct")
        }
        GlobalProtocol::Rec(t, body) => {
            let b = project_role(body, r)?;
            if matches!(&b, LocalProtocol::Var(v) if v == t) {
                LocalProtocol::End
            } else {
                LocalProtocol::rec(t.clone(), b)
            }
        }
    })
}

//! Local and global protocol terms and their syntactic operations.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Words that can never be used as a participant, message type or label.
pub const RESERVED: &[&str] = &["end", "or"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("`{0}` is not a valid identifier")]
    InvalidIdentifier(String),
    #[error("choice with peer `{peer}` has no branches")]
    EmptyChoice { peer: String },
    #[error("choice with peer `{peer}` repeats label `{label}`")]
    DuplicateBranch { peer: String, label: String },
    #[error("participant `{0}` communicates with itself")]
    SelfCommunication(String),
    #[error("recursion variable `{0}` is not guarded by an action")]
    Unguarded(String),
    #[error("recursion variable `{0}` is not bound by an enclosing loop")]
    Unbound(String),
}

/// Checks the identifier grammar: letters, digits and underscores, in
/// non-empty segments joined by `.`, each segment starting with a letter or `_`.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && !RESERVED.contains(&s)
        && s.split('.').all(|seg| {
            let mut chars = seg.chars();
            matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
                && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        })
}

macro_rules! name_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(name: &str) -> Result<Self, ProtocolError> {
                if is_identifier(name) {
                    Ok($name(Arc::from(name)))
                } else {
                    Err(ProtocolError::InvalidIdentifier(name.to_string()))
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl std::str::FromStr for $name {
            type Err = ProtocolError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $name::new(s)
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

name_type!(
    /// An agent role, possibly dot-qualified (`t.tank_mass`).
    Participant
);
name_type!(
    /// A message payload type: a property name or an enumeration label.
    MessageType
);
name_type!(
    /// A recursion label.
    Label
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Send,
    Receive,
}

impl Direction {
    pub fn dual(self) -> Direction {
        match self {
            Direction::Send => Direction::Receive,
            Direction::Receive => Direction::Send,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Direction::Send => '!',
            Direction::Receive => '?',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub direction: Direction,
    pub peer: Participant,
    pub payload: MessageType,
}

impl Action {
    pub fn send(peer: Participant, payload: MessageType) -> Self {
        Action {
            direction: Direction::Send,
            peer,
            payload,
        }
    }

    pub fn receive(peer: Participant, payload: MessageType) -> Self {
        Action {
            direction: Direction::Receive,
            peer,
            payload,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.peer, self.direction.symbol(), self.payload)
    }
}

/// A labelled choice over one peer and direction. `sort` is the enumeration
/// the labels belong to (`signal` in `u!signal { ON: .. } or { OFF: .. }`);
/// each branch behaves as the prefix `peer!label`. Branches are kept sorted by
/// label, so two choices listing the same branches in different orders are
/// equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocalChoice {
    pub peer: Participant,
    pub direction: Direction,
    pub sort: MessageType,
    branches: Vec<(MessageType, LocalProtocol)>,
}

impl LocalChoice {
    pub fn branches(&self) -> &[(MessageType, LocalProtocol)] {
        &self.branches
    }

    pub fn labels(&self) -> impl Iterator<Item = &MessageType> {
        self.branches.iter().map(|(l, _)| l)
    }

    pub fn branch_action(&self, label: &MessageType) -> Action {
        Action {
            direction: self.direction,
            peer: self.peer.clone(),
            payload: label.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LocalProtocol {
    End,
    Prefix(Action, Box<LocalProtocol>),
    Choice(LocalChoice),
    Rec(Label, Box<LocalProtocol>),
    Var(Label),
}

fn sorted_branches<T>(
    peer: &Participant,
    mut branches: Vec<(MessageType, T)>,
) -> Result<Vec<(MessageType, T)>, ProtocolError> {
    if branches.is_empty() {
        return Err(ProtocolError::EmptyChoice { peer: peer.to_string() });
    }
    branches.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(w) = branches.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(ProtocolError::DuplicateBranch {
            peer: peer.to_string(),
            label: w[0].0.to_string(),
        });
    }
    Ok(branches)
}

impl LocalProtocol {
    pub fn prefix(action: Action, cont: LocalProtocol) -> Self {
        LocalProtocol::Prefix(action, Box::new(cont))
    }

    pub fn send(peer: Participant, payload: MessageType, cont: LocalProtocol) -> Self {
        LocalProtocol::prefix(Action::send(peer, payload), cont)
    }

    pub fn receive(peer: Participant, payload: MessageType, cont: LocalProtocol) -> Self {
        LocalProtocol::prefix(Action::receive(peer, payload), cont)
    }

    pub fn choice(
        peer: Participant,
        direction: Direction,
        sort: MessageType,
        branches: Vec<(MessageType, LocalProtocol)>,
    ) -> Result<Self, ProtocolError> {
        let branches = sorted_branches(&peer, branches)?;
        Ok(LocalProtocol::Choice(LocalChoice {
            peer,
            direction,
            sort,
            branches,
        }))
    }

    pub fn rec(label: Label, body: LocalProtocol) -> Self {
        LocalProtocol::Rec(label, Box::new(body))
    }

    pub fn is_end(&self) -> bool {
        matches!(self, LocalProtocol::End)
    }

    /// Peers of every action in the term.
    pub fn participants(&self) -> BTreeSet<Participant> {
        let mut out = BTreeSet::new();
        self.collect_participants(&mut out);
        out
    }

    fn collect_participants(&self, out: &mut BTreeSet<Participant>) {
        match self {
            LocalProtocol::End | LocalProtocol::Var(_) => {}
            LocalProtocol::Prefix(a, k) => {
                out.insert(a.peer.clone());
                k.collect_participants(out);
            }
            LocalProtocol::Choice(c) => {
                out.insert(c.peer.clone());
                for (_, k) in &c.branches {
                    k.collect_participants(out);
                }
            }
            LocalProtocol::Rec(_, b) => b.collect_participants(out),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            LocalProtocol::End | LocalProtocol::Var(_) => 1,
            LocalProtocol::Prefix(_, k) => 1 + k.size(),
            LocalProtocol::Choice(c) => c.branches.iter().map(|(_, k)| 1 + k.size()).sum(),
            LocalProtocol::Rec(_, b) => b.size(),
        }
    }

    /// Replaces the free occurrences of `label` by `replacement`.
    pub fn substitute(&self, replacement: &LocalProtocol, label: &Label) -> LocalProtocol {
        match self {
            LocalProtocol::End => LocalProtocol::End,
            LocalProtocol::Var(t) if t == label => replacement.clone(),
            LocalProtocol::Var(t) => LocalProtocol::Var(t.clone()),
            LocalProtocol::Prefix(a, k) => LocalProtocol::prefix(a.clone(), k.substitute(replacement, label)),
            LocalProtocol::Choice(c) => LocalProtocol::Choice(LocalChoice {
                peer: c.peer.clone(),
                direction: c.direction,
                sort: c.sort.clone(),
                branches: c
                    .branches
                    .iter()
                    .map(|(l, k)| (l.clone(), k.substitute(replacement, label)))
                    .collect(),
            }),
            LocalProtocol::Rec(t, _) if t == label => self.clone(),
            LocalProtocol::Rec(t, b) => LocalProtocol::rec(t.clone(), b.substitute(replacement, label)),
        }
    }

    /// One-step unfolding of a top-level loop; other terms are returned as is.
    pub fn unfold(&self) -> LocalProtocol {
        match self {
            LocalProtocol::Rec(t, b) => b.substitute(self, t),
            _ => self.clone(),
        }
    }

    /// Continuations reachable by observing `action`.
    pub fn local_step(&self, action: &Action) -> Vec<LocalProtocol> {
        match self {
            LocalProtocol::End | LocalProtocol::Var(_) => Vec::new(),
            LocalProtocol::Prefix(a, k) if a == action => vec![(**k).clone()],
            LocalProtocol::Prefix(..) => Vec::new(),
            LocalProtocol::Choice(c) => {
                if c.peer != action.peer || c.direction != action.direction {
                    return Vec::new();
                }
                c.branches
                    .iter()
                    .filter(|(l, _)| *l == action.payload)
                    .map(|(_, k)| k.clone())
                    .collect()
            }
            LocalProtocol::Rec(..) => self.unfold().local_step(action),
        }
    }

    /// Actions the term can observe next, in branch order.
    pub fn initial_actions(&self) -> Vec<Action> {
        match self {
            LocalProtocol::End | LocalProtocol::Var(_) => Vec::new(),
            LocalProtocol::Prefix(a, _) => vec![a.clone()],
            LocalProtocol::Choice(c) => c.labels().map(|l| c.branch_action(l)).collect(),
            LocalProtocol::Rec(_, b) => b.initial_actions(),
        }
    }

    /// Checks guardedness and label binding, i.e. that the term is closed
    /// and every loop variable sits beneath an action.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        self.check_scoped(&mut Vec::new())
    }

    // `scope` holds bound labels with a flag telling whether an action has
    // been crossed since the binder.
    fn check_scoped(&self, scope: &mut Vec<(Label, bool)>) -> Result<(), ProtocolError> {
        match self {
            LocalProtocol::End => Ok(()),
            LocalProtocol::Var(t) => check_var(t, scope),
            LocalProtocol::Prefix(_, k) => guarded(scope, |s| k.check_scoped(s)),
            LocalProtocol::Choice(c) => guarded(scope, |s| c.branches.iter().try_for_each(|(_, k)| k.check_scoped(s))),
            LocalProtocol::Rec(t, b) => {
                scope.push((t.clone(), false));
                let r = b.check_scoped(scope);
                scope.pop();
                r
            }
        }
    }

    /// Renames every peer through `f`.
    pub fn rename(&self, f: &impl Fn(&Participant) -> Participant) -> LocalProtocol {
        match self {
            LocalProtocol::End => LocalProtocol::End,
            LocalProtocol::Var(t) => LocalProtocol::Var(t.clone()),
            LocalProtocol::Prefix(a, k) => LocalProtocol::prefix(
                Action {
                    direction: a.direction,
                    peer: f(&a.peer),
                    payload: a.payload.clone(),
                },
                k.rename(f),
            ),
            LocalProtocol::Choice(c) => LocalProtocol::Choice(LocalChoice {
                peer: f(&c.peer),
                direction: c.direction,
                sort: c.sort.clone(),
                branches: c.branches.iter().map(|(l, k)| (l.clone(), k.rename(f))).collect(),
            }),
            LocalProtocol::Rec(t, b) => LocalProtocol::rec(t.clone(), b.rename(f)),
        }
    }

    /// Every choice in the term, outermost first.
    pub fn choices(&self) -> Vec<&LocalChoice> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(p) = stack.pop() {
            match p {
                LocalProtocol::End | LocalProtocol::Var(_) => {}
                LocalProtocol::Prefix(_, k) | LocalProtocol::Rec(_, k) => stack.push(k),
                LocalProtocol::Choice(c) => {
                    out.push(c);
                    stack.extend(c.branches.iter().rev().map(|(_, k)| k));
                }
            }
        }
        out
    }

    /// Whether `label` occurs free in the term.
    pub fn has_free(&self, label: &Label) -> bool {
        match self {
            LocalProtocol::End => false,
            LocalProtocol::Var(t) => t == label,
            LocalProtocol::Prefix(_, k) => k.has_free(label),
            LocalProtocol::Choice(c) => c.branches.iter().any(|(_, k)| k.has_free(label)),
            LocalProtocol::Rec(t, b) => t != label && b.has_free(label),
        }
    }
}

fn check_var(t: &Label, scope: &[(Label, bool)]) -> Result<(), ProtocolError> {
    match scope.iter().rev().find(|(l, _)| l == t) {
        None => Err(ProtocolError::Unbound(t.to_string())),
        Some((_, false)) => Err(ProtocolError::Unguarded(t.to_string())),
        Some(_) => Ok(()),
    }
}

fn guarded<R>(scope: &mut Vec<(Label, bool)>, f: impl FnOnce(&mut Vec<(Label, bool)>) -> R) -> R {
    let saved: Vec<bool> = scope.iter().map(|(_, g)| *g).collect();
    for entry in scope.iter_mut() {
        entry.1 = true;
    }
    let r = f(scope);
    for (entry, g) in scope.iter_mut().zip(saved) {
        entry.1 = g;
    }
    r
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GlobalProtocol {
    End,
    Pass {
        sender: Participant,
        receiver: Participant,
        payload: MessageType,
        cont: Box<GlobalProtocol>,
    },
    Choice {
        sender: Participant,
        receiver: Participant,
        sort: MessageType,
        branches: Vec<(MessageType, GlobalProtocol)>,
    },
    Rec(Label, Box<GlobalProtocol>),
    Var(Label),
}

impl GlobalProtocol {
    pub fn pass(
        sender: Participant,
        receiver: Participant,
        payload: MessageType,
        cont: GlobalProtocol,
    ) -> Result<Self, ProtocolError> {
        if sender == receiver {
            return Err(ProtocolError::SelfCommunication(sender.to_string()));
        }
        Ok(GlobalProtocol::Pass {
            sender,
            receiver,
            payload,
            cont: Box::new(cont),
        })
    }

    pub fn choice(
        sender: Participant,
        receiver: Participant,
        sort: MessageType,
        branches: Vec<(MessageType, GlobalProtocol)>,
    ) -> Result<Self, ProtocolError> {
        if sender == receiver {
            return Err(ProtocolError::SelfCommunication(sender.to_string()));
        }
        let branches = sorted_branches(&sender, branches)?;
        Ok(GlobalProtocol::Choice {
            sender,
            receiver,
            sort,
            branches,
        })
    }

    pub fn rec(label: Label, body: GlobalProtocol) -> Self {
        GlobalProtocol::Rec(label, Box::new(body))
    }

    /// Senders and receivers in order of first appearance.
    pub fn roles(&self) -> Vec<Participant> {
        let mut out: Vec<Participant> = Vec::new();
        let mut push = |p: &Participant| {
            if !out.contains(p) {
                out.push(p.clone());
            }
        };
        let mut stack = vec![self];
        while let Some(g) = stack.pop() {
            match g {
                GlobalProtocol::End | GlobalProtocol::Var(_) => {}
                GlobalProtocol::Pass {
                    sender, receiver, cont, ..
                } => {
                    push(sender);
                    push(receiver);
                    stack.push(cont);
                }
                GlobalProtocol::Choice {
                    sender,
                    receiver,
                    branches,
                    ..
                } => {
                    push(sender);
                    push(receiver);
                    stack.extend(branches.iter().rev().map(|(_, k)| k));
                }
                GlobalProtocol::Rec(_, b) => stack.push(b),
            }
        }
        out
    }

    pub fn participants(&self) -> BTreeSet<Participant> {
        self.roles().into_iter().collect()
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        self.check_scoped(&mut Vec::new())
    }

    fn check_scoped(&self, scope: &mut Vec<(Label, bool)>) -> Result<(), ProtocolError> {
        match self {
            GlobalProtocol::End => Ok(()),
            GlobalProtocol::Var(t) => check_var(t, scope),
            GlobalProtocol::Pass {
                sender, receiver, cont, ..
            } => {
                if sender == receiver {
                    return Err(ProtocolError::SelfCommunication(sender.to_string()));
                }
                guarded(scope, |s| cont.check_scoped(s))
            }
            GlobalProtocol::Choice {
                sender,
                receiver,
                branches,
                ..
            } => {
                if sender == receiver {
                    return Err(ProtocolError::SelfCommunication(sender.to_string()));
                }
                guarded(scope, |s| branches.iter().try_for_each(|(_, k)| k.check_scoped(s)))
            }
            GlobalProtocol::Rec(t, b) => {
                scope.push((t.clone(), false));
                let r = b.check_scoped(scope);
                scope.pop();
                r
            }
        }
    }

    pub fn has_free(&self, label: &Label) -> bool {
        match self {
            GlobalProtocol::End => false,
            GlobalProtocol::Var(t) => t == label,
            GlobalProtocol::Pass { cont, .. } => cont.has_free(label),
            GlobalProtocol::Choice { branches, .. } => branches.iter().any(|(_, k)| k.has_free(label)),
            GlobalProtocol::Rec(t, b) => t != label && b.has_free(label),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            GlobalProtocol::End | GlobalProtocol::Var(_) => 0,
            GlobalProtocol::Pass { cont, .. } => 1 + cont.depth(),
            GlobalProtocol::Choice { branches, .. } => 1 + branches.iter().map(|(_, k)| k.depth()).max().unwrap_or(0),
            GlobalProtocol::Rec(_, b) => b.depth(),
        }
    }

    pub fn rename(&self, f: &impl Fn(&Participant) -> Participant) -> GlobalProtocol {
        match self {
            GlobalProtocol::End => GlobalProtocol::End,
            GlobalProtocol::Var(t) => GlobalProtocol::Var(t.clone()),
            GlobalProtocol::Pass {
                sender,
                receiver,
                payload,
                cont,
            } => GlobalProtocol::Pass {
                sender: f(sender),
                receiver: f(receiver),
                payload: payload.clone(),
                cont: Box::new(cont.rename(f)),
            },
            GlobalProtocol::Choice {
                sender,
                receiver,
                sort,
                branches,
            } => GlobalProtocol::Choice {
                sender: f(sender),
                receiver: f(receiver),
                sort: sort.clone(),
                branches: branches.iter().map(|(l, k)| (l.clone(), k.rename(f))).collect(),
            },
            GlobalProtocol::Rec(t, b) => GlobalProtocol::rec(t.clone(), b.rename(f)),
        }
    }
}

impl fmt::Display for LocalProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalProtocol::End => f.write_str("end"),
            LocalProtocol::Var(t) => write!(f, "{t}"),
            LocalProtocol::Prefix(a, k) => write!(f, "{a}. {k}"),
            LocalProtocol::Choice(c) => {
                write!(f, "{}{}{}", c.peer, c.direction.symbol(), c.sort)?;
                for (i, (l, k)) in c.branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" or")?;
                    }
                    write!(f, " {{ {l}: {k} }}")?;
                }
                Ok(())
            }
            LocalProtocol::Rec(t, b) => write!(f, "{t}. {b}"),
        }
    }
}

impl fmt::Display for GlobalProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlobalProtocol::End => f.write_str("end"),
            GlobalProtocol::Var(t) => write!(f, "{t}"),
            GlobalProtocol::Pass {
                sender,
                receiver,
                payload,
                cont,
            } => write!(f, "{sender}->{receiver}:{payload}. {cont}"),
            GlobalProtocol::Choice {
                sender,
                receiver,
                sort,
                branches,
            } => {
                write!(f, "{sender}->{receiver}:{sort}")?;
                for (i, (l, k)) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" or")?;
                    }
                    write!(f, " {{ {l}: {k} }}")?;
                }
                Ok(())
            }
            GlobalProtocol::Rec(t, b) => write!(f, "{t}. {b}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Participant {
        s.parse().unwrap()
    }
    fn m(s: &str) -> MessageType {
        s.parse().unwrap()
    }
    fn l(s: &str) -> Label {
        s.parse().unwrap()
    }
    fn var(s: &str) -> LocalProtocol {
        LocalProtocol::Var(l(s))
    }

    fn est_loop() -> LocalProtocol {
        // loop t. est!flow. t
        LocalProtocol::rec(l("t"), LocalProtocol::send(p("est"), m("flow"), var("t")))
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("t.tank_mass"));
        assert!(is_identifier("_x1"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("1x"));
        assert!(!is_identifier("t..x"));
        assert!(!is_identifier("t."));
        assert!(!is_identifier("end"));
        assert!(Participant::new("a-b").is_err());
    }

    #[test]
    fn participants_of_estimator_loop() {
        // loop t. s1?flow. s2?flow. controller!head. t
        let body = LocalProtocol::receive(
            p("s1"),
            m("flow"),
            LocalProtocol::receive(
                p("s2"),
                m("flow"),
                LocalProtocol::send(p("controller"), m("head"), var("t")),
            ),
        );
        let t = LocalProtocol::rec(l("t"), body);
        let expected: BTreeSet<_> = ["s1", "s2", "controller"].iter().map(|s| p(s)).collect();
        assert_eq!(t.participants(), expected);
        assert!(LocalProtocol::End.participants().is_empty());
        let pq = LocalProtocol::send(
            p("p"),
            m("nat"),
            LocalProtocol::receive(p("q"), m("bool"), LocalProtocol::End),
        );
        assert_eq!(pq.participants(), [p("p"), p("q")].into_iter().collect());
    }

    #[test]
    fn sizes() {
        assert_eq!(LocalProtocol::End.size(), 1);
        assert_eq!(LocalProtocol::send(p("p"), m("nat"), LocalProtocol::End).size(), 2);
        let c = LocalProtocol::choice(
            p("p"),
            Direction::Send,
            m("signal"),
            vec![(m("ON"), var("t")), (m("OFF"), var("t"))],
        )
        .unwrap();
        assert_eq!(LocalProtocol::rec(l("t"), c).size(), 4);
    }

    #[test]
    fn substitution_unfolds_and_respects_shadowing() {
        let body = LocalProtocol::send(p("est"), m("flow"), var("t"));
        let unfolded = body.substitute(&est_loop(), &l("t"));
        assert_eq!(unfolded, LocalProtocol::send(p("est"), m("flow"), est_loop()));
        assert_eq!(LocalProtocol::End.substitute(&est_loop(), &l("t")), LocalProtocol::End);
        let shadow = LocalProtocol::rec(l("t"), LocalProtocol::receive(p("q"), m("flow"), var("t")));
        assert_eq!(shadow.substitute(&LocalProtocol::End, &l("t")), shadow);
    }

    #[test]
    fn local_steps() {
        let a = Action::send(p("est"), m("flow"));
        assert_eq!(est_loop().local_step(&a), vec![est_loop()]);
        assert!(LocalProtocol::End.local_step(&a).is_empty());
        let c = LocalProtocol::choice(
            p("p"),
            Direction::Send,
            m("signal"),
            vec![(m("ON"), LocalProtocol::End), (m("OFF"), LocalProtocol::End)],
        )
        .unwrap();
        assert_eq!(c.local_step(&Action::send(p("p"), m("OFF"))), vec![LocalProtocol::End]);
        assert!(c.local_step(&Action::receive(p("p"), m("OFF"))).is_empty());
    }

    #[test]
    fn choice_branches_are_canonically_ordered() {
        let a = LocalProtocol::choice(
            p("u"),
            Direction::Send,
            m("signal"),
            vec![(m("ON"), LocalProtocol::End), (m("OFF"), LocalProtocol::End)],
        )
        .unwrap();
        let b = LocalProtocol::choice(
            p("u"),
            Direction::Send,
            m("signal"),
            vec![(m("OFF"), LocalProtocol::End), (m("ON"), LocalProtocol::End)],
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "u!signal { OFF: end } or { ON: end }");
    }

    #[test]
    fn choice_rejects_duplicates_and_empty() {
        let dup = LocalProtocol::choice(
            p("u"),
            Direction::Send,
            m("signal"),
            vec![(m("ON"), LocalProtocol::End), (m("ON"), LocalProtocol::End)],
        );
        assert!(matches!(dup, Err(ProtocolError::DuplicateBranch { .. })));
        let empty = LocalProtocol::choice(p("u"), Direction::Send, m("signal"), vec![]);
        assert!(matches!(empty, Err(ProtocolError::EmptyChoice { .. })));
    }

    #[test]
    fn validation_rejects_unguarded_and_unbound() {
        assert!(est_loop().validate().is_ok());
        assert_eq!(
            LocalProtocol::rec(l("t"), var("t")).validate(),
            Err(ProtocolError::Unguarded("t".into()))
        );
        assert_eq!(
            LocalProtocol::rec(l("t"), LocalProtocol::rec(l("s"), var("t"))).validate(),
            Err(ProtocolError::Unguarded("t".into()))
        );
        assert_eq!(
            LocalProtocol::send(p("a"), m("x"), var("t")).validate(),
            Err(ProtocolError::Unbound("t".into()))
        );
        // an outer label stays guarded once an action was crossed
        let nested = LocalProtocol::rec(
            l("t"),
            LocalProtocol::send(p("a"), m("x"), LocalProtocol::rec(l("s"), var("t"))),
        );
        assert!(nested.validate().is_ok());
    }

    #[test]
    fn global_roles_in_first_appearance_order() {
        let g = GlobalProtocol::pass(
            p("s1"),
            p("t"),
            m("flow"),
            GlobalProtocol::pass(p("s2"), p("t"), m("flow"), GlobalProtocol::End).unwrap(),
        )
        .unwrap();
        assert_eq!(g.roles(), vec![p("s1"), p("t"), p("s2")]);
        assert!(GlobalProtocol::pass(p("a"), p("a"), m("x"), GlobalProtocol::End).is_err());
    }

    #[test]
    fn display_forms() {
        assert_eq!(est_loop().to_string(), "t. est!flow. t");
        let g = GlobalProtocol::rec(
            l("loop"),
            GlobalProtocol::pass(p("s1"), p("t.tank_mass"), m("flow"), GlobalProtocol::Var(l("loop"))).unwrap(),
        );
        assert_eq!(g.to_string(), "loop. s1->t.tank_mass:flow. loop");
    }
}

use crate::diagnostic::{Diagnostic, Pos, Span};
use crate::domain::{
    AgentKind, AgentTemplate, ClassKind, ComponentClass, EstimatorDef, IndustrialDomain, PropertyDef, QualifiedAttr,
    Repository, TranslationRule,
};
use crate::lang::ast::{Command, CommandKind, Expr, ExprKind};
use crate::lang::lexer::{tokenize, Tok, Token};
use crate::process::{Named, ProcessDecl, ProcessItem};
use crate::protocol::{Direction, GlobalProtocol, Label, LocalProtocol, MessageType, Participant, ProtocolError};
use crate::session::LocalConfiguration;

/// Words that start an expression and so cannot name a binding.
pub const KEYWORDS: &[&str] = &[
    "end",
    "or",
    "local",
    "global",
    "domain",
    "repository",
    "process",
    "translate",
    "traverse",
    "configure",
    "compose",
    "project",
    "show",
    "mermaid",
    "remove",
    "from",
    "using",
];

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            i: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> Diagnostic {
        let found = self.peek().to_string();
        let msg = match expected {
            [one] => format!("expected {one}, found {found}"),
            many => format!("expected one of {}, found {found}", many.join(", ")),
        };
        Diagnostic::error(Some(self.pos()), msg)
    }

    fn expect(&mut self, t: Tok) -> PResult<Pos> {
        if self.peek() == &t {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&[&t.to_string()]))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<Pos> {
        if self.at_word(w) {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&[&format!("`{w}`")]))
        }
    }

    /// Any identifier, qualified or not.
    fn ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.bump().pos;
                Ok((s, pos))
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    /// An identifier inside an expression. One followed by `:=` starts the
    /// next command instead.
    fn arg_ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        if self.peek_at(1) == &Tok::Assign {
            return Err(self.unexpected(&[what]));
        }
        self.ident(what)
    }

    fn arg_simple(&mut self, what: &str) -> PResult<(String, Pos)> {
        if self.peek_at(1) == &Tok::Assign {
            return Err(self.unexpected(&[what]));
        }
        self.simple_ident(what)
    }

    /// An identifier without dots.
    fn simple_ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        let pos = self.pos();
        let (s, p) = self.ident(what)?;
        if s.contains('.') {
            return Err(Diagnostic::error(
                Some(pos),
                format!("expected {what}, found qualified name `{s}`"),
            ));
        }
        Ok((s, p))
    }

    fn named(&mut self, what: &str) -> PResult<Named> {
        let (s, p) = self.simple_ident(what)?;
        Ok(Named::at(s, p))
    }

    fn participant(&mut self) -> PResult<Participant> {
        let pos = self.pos();
        let (s, _) = self.ident("a participant")?;
        Participant::new(&s).map_err(|e| Diagnostic::error(Some(pos), e.to_string()))
    }

    fn message(&mut self, what: &str) -> PResult<MessageType> {
        let pos = self.pos();
        let (s, _) = self.simple_ident(what)?;
        MessageType::new(&s).map_err(|e| Diagnostic::error(Some(pos), e.to_string()))
    }

    fn label(&mut self, s: &str, pos: Pos) -> PResult<Label> {
        if s.contains('.') {
            return Err(Diagnostic::error(
                Some(pos),
                format!("loop label `{s}` cannot be qualified"),
            ));
        }
        Label::new(s).map_err(|e| Diagnostic::error(Some(pos), e.to_string()))
    }

    fn protocol_error(pos: Pos, e: ProtocolError) -> Diagnostic {
        Diagnostic::error(Some(pos), e.to_string())
    }

    // local : 'end' | ID ('!'|'?') ID ('.' local | branches) | ID '.' local | ID
    fn local(&mut self) -> PResult<LocalProtocol> {
        let pos = self.pos();
        let (head, _) = self.ident("a local protocol")?;
        if head == "end" {
            return Ok(LocalProtocol::End);
        }
        match self.peek() {
            Tok::Bang | Tok::Question => {
                let dir = if self.bump().tok == Tok::Bang {
                    Direction::Send
                } else {
                    Direction::Receive
                };
                let peer = Participant::new(&head).map_err(|e| Self::protocol_error(pos, e))?;
                let payload = self.message("a message type")?;
                if self.peek() == &Tok::LBrace {
                    let branches = self.branches(|p| p.local())?;
                    LocalProtocol::choice(peer, dir, payload, branches).map_err(|e| Self::protocol_error(pos, e))
                } else {
                    self.expect(Tok::Dot)?;
                    let cont = self.local()?;
                    Ok(LocalProtocol::prefix(
                        crate::protocol::Action {
                            direction: dir,
                            peer,
                            payload,
                        },
                        cont,
                    ))
                }
            }
            Tok::Dot => {
                self.bump();
                let label = self.label(&head, pos)?;
                Ok(LocalProtocol::rec(label, self.local()?))
            }
            _ => Ok(LocalProtocol::Var(self.label(&head, pos)?)),
        }
    }

    // '{' ID ':' body '}' ('or' '{' ID ':' body '}')*
    fn branches<T>(&mut self, mut body: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<(MessageType, T)>> {
        let mut out = Vec::new();
        loop {
            self.expect(Tok::LBrace)?;
            let label = self.message("a branch label")?;
            self.expect(Tok::Colon)?;
            let k = body(self)?;
            self.expect(Tok::RBrace)?;
            out.push((label, k));
            if self.at_word("or") {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }

    // global : 'end' | ID '->' ID ':' ID ('.' global | branches) | ID '.' global | ID
    fn global(&mut self) -> PResult<GlobalProtocol> {
        let pos = self.pos();
        let (head, _) = self.ident("a global protocol")?;
        if head == "end" {
            return Ok(GlobalProtocol::End);
        }
        match self.peek() {
            Tok::Arrow => {
                self.bump();
                let sender = Participant::new(&head).map_err(|e| Self::protocol_error(pos, e))?;
                let receiver = self.participant()?;
                self.expect(Tok::Colon)?;
                let payload = self.message("a message type")?;
                if self.peek() == &Tok::LBrace {
                    let branches = self.branches(|p| p.global())?;
                    GlobalProtocol::choice(sender, receiver, payload, branches)
                        .map_err(|e| Self::protocol_error(pos, e))
                } else {
                    self.expect(Tok::Dot)?;
                    let cont = self.global()?;
                    GlobalProtocol::pass(sender, receiver, payload, cont).map_err(|e| Self::protocol_error(pos, e))
                }
            }
            Tok::Dot => {
                self.bump();
                let label = self.label(&head, pos)?;
                Ok(GlobalProtocol::rec(label, self.global()?))
            }
            _ => Ok(GlobalProtocol::Var(self.label(&head, pos)?)),
        }
    }

    fn closed_local(&mut self) -> PResult<LocalProtocol> {
        let pos = self.pos();
        let t = self.local()?;
        t.validate().map_err(|e| Self::protocol_error(pos, e))?;
        Ok(t)
    }

    fn closed_global(&mut self) -> PResult<GlobalProtocol> {
        let pos = self.pos();
        let g = self.global()?;
        g.validate().map_err(|e| Self::protocol_error(pos, e))?;
        Ok(g)
    }

    // 'local' '{' (ID '=' local)* '}'
    fn configuration(&mut self) -> PResult<LocalConfiguration> {
        self.expect_word("local")?;
        self.expect(Tok::LBrace)?;
        let mut c = LocalConfiguration::new();
        while self.peek() != &Tok::RBrace {
            let pos = self.pos();
            let p = self.participant()?;
            self.expect(Tok::Eq)?;
            let t = self.closed_local()?;
            c.bind(p, t).map_err(|e| Diagnostic::error(Some(pos), e.to_string()))?;
        }
        self.bump();
        Ok(c)
    }

    fn domain(&mut self) -> PResult<IndustrialDomain> {
        self.expect_word("domain")?;
        self.expect(Tok::LBrace)?;
        let mut d = IndustrialDomain::default();
        loop {
            let pos = self.pos();
            match self.peek().clone() {
                Tok::RBrace => {
                    self.bump();
                    return Ok(d);
                }
                Tok::Ident(w) if w == "property" => {
                    self.bump();
                    loop {
                        let (name, p) = self.simple_ident("a property name")?;
                        let mut labels = Vec::new();
                        if self.eat(&Tok::LBrace) {
                            loop {
                                labels.push(self.simple_ident("an enumeration label")?.0);
                                if !self.eat(&Tok::Comma) {
                                    break;
                                }
                            }
                            self.expect(Tok::RBrace)?;
                        }
                        d.properties.push(PropertyDef {
                            name,
                            labels,
                            span: Span::at(p),
                        });
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                Tok::Ident(w) if w == "model" => {
                    self.bump();
                    loop {
                        let (name, p) = self.simple_ident("an estimator name")?;
                        d.model.push(EstimatorDef {
                            name,
                            span: Span::at(p),
                        });
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                Tok::Ident(w) if w == "physical" || w == "actuator" => {
                    self.bump();
                    let kind = if w == "physical" {
                        ClassKind::Physical
                    } else {
                        ClassKind::Actuator
                    };
                    let (name, p) = self.simple_ident("a class name")?;
                    self.expect(Tok::LParen)?;
                    let mut attributes = Vec::new();
                    if self.peek() != &Tok::RParen {
                        loop {
                            attributes.push(self.simple_ident("an attribute")?.0);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    let mut intra_edges = Vec::new();
                    if self.eat(&Tok::Colon) {
                        loop {
                            let a = self.simple_ident("an attribute")?.0;
                            self.expect(Tok::Arrow)?;
                            let b = self.simple_ident("an attribute")?.0;
                            intra_edges.push((a, b));
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    d.classes.push(ComponentClass {
                        name,
                        kind,
                        attributes,
                        intra_edges,
                        span: Span::at(p),
                    });
                }
                Tok::Ident(w) if w == "translation" => {
                    self.bump();
                    let (source_class, _) = self.simple_ident("a class name")?;
                    self.expect(Tok::Arrow)?;
                    let (target_class, _) = self.simple_ident("a class name")?;
                    let mut edges = Vec::new();
                    if self.eat(&Tok::Colon) {
                        loop {
                            let a = self.qualified_attr()?;
                            self.expect(Tok::Arrow)?;
                            let b = self.qualified_attr()?;
                            edges.push((a, b));
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    d.rules.push(TranslationRule {
                        source_class,
                        target_class,
                        edges,
                        span: Span::at(pos),
                    });
                }
                _ => {
                    return Err(self.unexpected(&[
                        "`property`",
                        "`model`",
                        "`physical`",
                        "`actuator`",
                        "`translation`",
                        "`}`",
                    ]))
                }
            }
        }
    }

    fn qualified_attr(&mut self) -> PResult<QualifiedAttr> {
        let pos = self.pos();
        let (s, _) = self.ident("a qualified attribute `class.attribute`")?;
        match s.split_once('.') {
            Some((class, attribute)) if !attribute.contains('.') => Ok(QualifiedAttr {
                class: class.to_string(),
                attribute: attribute.to_string(),
            }),
            _ => Err(Diagnostic::error(
                Some(pos),
                format!("expected a qualified attribute `class.attribute`, found `{s}`"),
            )),
        }
    }

    // 'repository' ID '{' (kind ID 'using' ID '=' local)* '}'
    fn repository(&mut self) -> PResult<Repository> {
        self.expect_word("repository")?;
        let (name, _) = self.simple_ident("a domain name")?;
        self.expect(Tok::LBrace)?;
        let mut templates = Vec::new();
        loop {
            let pos = self.pos();
            let kind = match self.peek() {
                Tok::RBrace => {
                    self.bump();
                    return Ok(Repository { name, templates });
                }
                Tok::Ident(w) if w == "estimate" => AgentKind::Estimate,
                Tok::Ident(w) if w == "sense" => AgentKind::Sense,
                Tok::Ident(w) if w == "control" => AgentKind::Control,
                Tok::Ident(w) if w == "actuate" => AgentKind::Actuate,
                _ => return Err(self.unexpected(&["`estimate`", "`sense`", "`control`", "`actuate`", "`}`"])),
            };
            self.bump();
            let (subject, _) = self.simple_ident("a template subject")?;
            self.expect_word("using")?;
            let (tname, _) = self.simple_ident("a template name")?;
            self.expect(Tok::Eq)?;
            let protocol = self.closed_local()?;
            templates.push(AgentTemplate {
                kind,
                subject,
                name: tname,
                protocol,
                span: Span::at(pos),
            });
        }
    }

    fn instance(&mut self, device_required: bool) -> PResult<(Named, Option<Named>)> {
        let n = self.named("a node name")?;
        let dev = if self.eat(&Tok::At) {
            Some(self.named("a device name")?)
        } else if device_required {
            return Err(self.unexpected(&["`@`"]));
        } else {
            None
        };
        Ok((n, dev))
    }

    // 'process' ID '{' process_decl* '}'
    fn process(&mut self) -> PResult<ProcessDecl> {
        self.expect_word("process")?;
        let domain = self.named("a domain name")?;
        self.expect(Tok::LBrace)?;
        let mut items = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::RBrace => {
                    self.bump();
                    return Ok(ProcessDecl { domain, items });
                }
                Tok::Ident(w) if w == "device" => {
                    self.bump();
                    let mut ds = vec![self.named("a device name")?];
                    while self.eat(&Tok::Comma) {
                        ds.push(self.named("a device name")?);
                    }
                    items.push(ProcessItem::Devices(ds));
                }
                Tok::Ident(w) if w == "physical" || w == "actuator" => {
                    self.bump();
                    let kind = if w == "physical" {
                        ClassKind::Physical
                    } else {
                        ClassKind::Actuator
                    };
                    let mut instances = vec![self.instance(false)?];
                    while self.eat(&Tok::Comma) {
                        instances.push(self.instance(false)?);
                    }
                    let class = self.named("a class name")?;
                    items.push(ProcessItem::Components { kind, instances, class });
                }
                Tok::Ident(w) if w == "sensor" => {
                    self.bump();
                    let mut points = Vec::new();
                    loop {
                        let (n, d) = self.instance(true)?;
                        points.push((n, d.expect("device required")));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    let property = self.named("a property name")?;
                    items.push(ProcessItem::Sensors { points, property });
                }
                Tok::Ident(w) if w == "conn" => {
                    self.bump();
                    let mut cs = Vec::new();
                    loop {
                        let a = self.named("a node name")?;
                        self.expect(Tok::Arrow)?;
                        let b = self.named("a node name")?;
                        cs.push((a, b));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    items.push(ProcessItem::Connections(cs));
                }
                _ => {
                    return Err(self.unexpected(&["`device`", "`physical`", "`actuator`", "`sensor`", "`conn`", "`}`"]))
                }
            }
        }
    }

    fn binding_name(&mut self, what: &str) -> PResult<(String, Pos)> {
        let pos = self.pos();
        let (s, p) = self.simple_ident(what)?;
        if KEYWORDS.contains(&s.as_str()) {
            return Err(Diagnostic::error(
                Some(pos),
                format!("`{s}` is a keyword and cannot name a value"),
            ));
        }
        Ok((s, p))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let word = match self.peek() {
            Tok::Ident(w) if self.peek_at(1) != &Tok::Assign => w.clone(),
            _ => return Err(self.unexpected(&["an expression"])),
        };
        let kind = match word.as_str() {
            "translate" => {
                self.bump();
                ExprKind::Translate(Box::new(self.expr()?))
            }
            "traverse" => {
                self.bump();
                let (root, _) = self.arg_ident("a state `component.property`")?;
                ExprKind::Traverse {
                    root,
                    graph: Box::new(self.expr()?),
                }
            }
            "configure" => {
                self.bump();
                let tree = Box::new(self.expr()?);
                let repository = Box::new(self.expr()?);
                let (controller, _) = self.arg_simple("a controller template name")?;
                let (actuator, _) = self.arg_simple("an actuator name")?;
                ExprKind::Configure {
                    tree,
                    repository,
                    controller,
                    actuator,
                }
            }
            "compose" => {
                self.bump();
                ExprKind::Compose(Box::new(self.expr()?))
            }
            "project" => {
                self.bump();
                ExprKind::Project(Box::new(self.expr()?))
            }
            "remove" => {
                self.bump();
                let (device, _) = self.arg_simple("a device name")?;
                self.expect_word("from")?;
                ExprKind::RemoveDevice {
                    device,
                    process: Box::new(self.expr()?),
                }
            }
            "domain" => ExprKind::Domain(self.domain()?),
            "repository" => ExprKind::Repository(self.repository()?),
            "process" => ExprKind::Process(self.process()?),
            "local" => ExprKind::Local(self.configuration()?),
            "global" => {
                self.bump();
                ExprKind::Global(self.closed_global()?)
            }
            _ => {
                let (name, _) = self.binding_name("a name")?;
                if self.eat(&Tok::LBracket) {
                    let ipos = self.pos();
                    let k = match self.bump().tok {
                        Tok::Int(k) => k as usize,
                        _ => return Err(Diagnostic::error(Some(ipos), "expected an index")),
                    };
                    self.expect(Tok::RBracket)?;
                    if k == 0 {
                        return Err(Diagnostic::error(Some(ipos), "indices start at 1"));
                    }
                    ExprKind::Index(name, k)
                } else {
                    ExprKind::Name(name)
                }
            }
        };
        Ok(Expr { kind, pos })
    }

    fn command(&mut self) -> PResult<Command> {
        let pos = self.pos();
        if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Assign {
            let (name, _) = self.binding_name("a name")?;
            self.bump();
            let expr = self.expr()?;
            return Ok(Command {
                kind: CommandKind::Bind { name, expr },
                pos,
            });
        }
        if self.at_word("show") {
            self.bump();
            return Ok(Command {
                kind: CommandKind::Show(self.expr()?),
                pos,
            });
        }
        if self.at_word("mermaid") {
            self.bump();
            let expr = self.expr()?;
            let path = match self.peek().clone() {
                Tok::Str(s) => {
                    self.bump();
                    Some(s)
                }
                _ => None,
            };
            return Ok(Command {
                kind: CommandKind::EmitDiagram { expr, path },
                pos,
            });
        }
        Ok(Command {
            kind: CommandKind::Eval(self.expr()?),
            pos,
        })
    }

    /// Skips to the next token that plausibly starts a command on a later line.
    fn recover(&mut self, from_line: u32) {
        while self.peek() != &Tok::Eof {
            let t = &self.toks[self.i];
            if t.pos.line > from_line {
                let starts = matches!(&t.tok, Tok::Ident(w) if w == "show" || w == "mermaid")
                    || (matches!(t.tok, Tok::Ident(_)) && self.peek_at(1) == &Tok::Assign);
                if starts {
                    return;
                }
            }
            self.bump();
        }
    }

    fn finish(&mut self) -> PResult<()> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected(&["end of input"]))
        }
    }
}

/// Parses a script into commands. Syntax errors are collected; parsing
/// resumes at the next line that starts a command.
pub fn parse(src: &str) -> Result<Vec<Command>, Vec<Diagnostic>> {
    let mut p = Parser::new(src).map_err(|d| vec![d])?;
    let mut cmds = Vec::new();
    let mut diags = Vec::new();
    while p.peek() != &Tok::Eof {
        let line = p.pos().line;
        match p.command() {
            Ok(c) => cmds.push(c),
            Err(d) => {
                diags.push(d);
                p.recover(line);
            }
        }
    }
    if diags.is_empty() {
        Ok(cmds)
    } else {
        Err(diags)
    }
}

fn whole<T>(src: &str, f: impl FnOnce(&mut Parser) -> PResult<T>) -> Result<T, Diagnostic> {
    let mut p = Parser::new(src)?;
    let v = f(&mut p)?;
    p.finish()?;
    Ok(v)
}

pub fn parse_local(src: &str) -> Result<LocalProtocol, Diagnostic> {
    whole(src, |p| p.closed_local())
}

pub fn parse_global(src: &str) -> Result<GlobalProtocol, Diagnostic> {
    whole(src, |p| p.closed_global())
}

/// Parses `local { ... }`.
pub fn parse_configuration(src: &str) -> Result<LocalConfiguration, Diagnostic> {
    whole(src, |p| p.configuration())
}

/// Parses `domain { ... }`.
pub fn parse_domain(src: &str) -> Result<IndustrialDomain, Diagnostic> {
    whole(src, |p| p.domain())
}

/// Parses `repository NAME { ... }`.
pub fn parse_repository(src: &str) -> Result<Repository, Diagnostic> {
    whole(src, |p| p.repository())
}

/// Parses `process NAME { ... }`.
pub fn parse_process(src: &str) -> Result<ProcessDecl, Diagnostic> {
    whole(src, |p| p.process())
}

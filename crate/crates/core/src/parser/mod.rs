//! The `.magpi` protocol language: one reliability declaration, an optional
//! initial buffer and a list of typed role definitions.

mod lexer;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::diagnostic::{rules, Diagnostic, Location};
use crate::syntax::{
    check_well_formed, BaseType, Buffer, Expr, Label, Message, Network, Process, ProcessTerm, Program, RecvArm,
    ReliabilityRelation, ReplicatedType, Role, SessionType, SourceMap, TypeArm, Value, Var,
};
use lexer::{tokenize, Tok, Token};

/// A protocol source text and where it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceFile {
    pub path: PathBuf,
    pub text: String,
}

impl SourceFile {
    pub fn new(path: impl Into<PathBuf>, text: impl Into<String>) -> Self {
        SourceFile { path: path.into(), text: text.into() }
    }

    pub fn read(path: &Path) -> std::io::Result<SourceFile> {
        Ok(SourceFile { path: path.to_owned(), text: std::fs::read_to_string(path)? })
    }
}

/// Parses and well-formedness-checks a protocol file.
pub fn parse_source(src: &SourceFile) -> Result<Program, Vec<Diagnostic>> {
    parse_program(&src.text)
}

pub fn parse_program(text: &str) -> Result<Program, Vec<Diagnostic>> {
    let program = parse_unchecked(text).map_err(|d| vec![d])?;
    let diags =
        check_well_formed(&program.network, &program.gamma, &program.delta, &program.reliability, &program.source_map);
    if diags.iter().any(Diagnostic::is_error) {
        Err(diags)
    } else {
        Ok(program)
    }
}

/// Parses without running the well-formedness checks; stops at the first
/// lexical or syntax error.
pub fn parse_unchecked(text: &str) -> Result<Program, Diagnostic> {
    let tokens = tokenize(text)?;
    Parser { tokens, pos: 0 }.file()
}

/// Parses a single session or replicated type written in the type syntax.
pub fn parse_type(text: &str) -> Result<TypeDecl, Diagnostic> {
    let mut p = Parser { tokens: tokenize(text)?, pos: 0 };
    let t = p.type_decl()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses a single linear process or server term.
pub fn parse_term(text: &str) -> Result<ProcessTerm, Diagnostic> {
    let mut p = Parser { tokens: tokenize(text)?, pos: 0 };
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

/// The type annotation of a role.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeDecl {
    Replicated(ReplicatedType),
    Session(SessionType),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)].tok
    }

    fn here(&self) -> Location {
        self.tokens[self.pos].at
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::error(self.here(), rules::SYNTAX, msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> PResult<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            self.unexpected(&format!("`{c}`"))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => self.unexpected("end of input"),
        }
    }

    fn file(&mut self) -> PResult<Program> {
        let mut reliability = None;
        let mut buffer = None;
        let mut source_map = SourceMap::default();
        let mut processes = BTreeMap::new();
        let mut gamma = BTreeMap::new();
        let mut delta = BTreeMap::new();

        loop {
            let at = self.here();
            if self.eat_kw("reliable") {
                if reliability.is_some() {
                    return Err(Diagnostic::error(at, rules::SYNTAX, "duplicate `reliable` declaration"));
                }
                reliability = Some(self.reliability()?);
                source_map.reliability = Some(at);
            } else if self.eat_kw("buffer") {
                if buffer.is_some() {
                    return Err(Diagnostic::error(at, rules::SYNTAX, "duplicate `buffer` declaration"));
                }
                buffer = Some(self.buffer()?);
                source_map.buffer = Some(at);
            } else if self.eat_kw("role") {
                let name = Role::new(self.ident("a role name")?);
                if processes.contains_key(&name) {
                    return Err(Diagnostic::error(
                        at,
                        rules::DUPLICATE_ROLE,
                        format!("role `{name}` is defined twice"),
                    ));
                }
                if self.eat_sym(':') {
                    match self.type_decl()? {
                        TypeDecl::Replicated(r) => {
                            gamma.insert(name.clone(), r);
                        }
                        TypeDecl::Session(s) => {
                            delta.insert(name.clone(), s);
                        }
                    }
                }
                self.expect_sym('=')?;
                let term = self.term()?;
                processes.insert(name.clone(), term);
                source_map.roles.insert(name, at);
            } else if matches!(self.peek(), Tok::Eof) {
                break;
            } else {
                return self.unexpected("`reliable`, `buffer` or `role`");
            }
        }
        if processes.is_empty() {
            return self.error("a protocol needs at least one `role` definition");
        }
        Ok(Program {
            network: Network::new(processes, buffer.unwrap_or_default()),
            gamma,
            delta,
            reliability: reliability.unwrap_or_else(ReliabilityRelation::none),
            source_map,
        })
    }

    fn reliability(&mut self) -> PResult<ReliabilityRelation> {
        if self.eat_kw("all") {
            return Ok(ReliabilityRelation::all());
        }
        if self.eat_kw("none") {
            return Ok(ReliabilityRelation::none());
        }
        let mut r = ReliabilityRelation::none();
        // Both `reliable { {a, b}, {c, d} }` and `reliable {a, b} {c, d}` are accepted.
        let wrapped = *self.peek() == Tok::Sym('{') && *self.peek_at(1) == Tok::Sym('{');
        if wrapped {
            self.bump();
        }
        loop {
            self.expect_sym('{')?;
            let a = self.ident("a role name")?;
            self.eat_sym(',');
            let b = self.ident("a role name")?;
            self.expect_sym('}')?;
            r.insert(Role::new(a), Role::new(b));
            if wrapped {
                self.eat_sym(',');
                if self.eat_sym('}') {
                    break;
                }
            } else if *self.peek() != Tok::Sym('{') {
                break;
            }
        }
        Ok(r)
    }

    fn buffer(&mut self) -> PResult<Buffer> {
        self.expect_sym('{')?;
        let mut msgs = Vec::new();
        while !self.eat_sym('}') {
            let src = self.ident("a sender role")?;
            if *self.peek() != Tok::Arrow {
                return self.unexpected("`->`");
            }
            self.bump();
            let dst = self.ident("a receiver role")?;
            self.expect_sym(':')?;
            let label = self.ident("a label")?;
            self.expect_sym('<')?;
            let mut payload = Vec::new();
            while !self.eat_sym('>') {
                payload.push(self.literal()?);
                self.eat_sym(',');
            }
            msgs.push(Message::new(src.as_str(), dst.as_str(), label.as_str(), payload));
            self.eat_sym(',');
        }
        Ok(msgs.into_iter().collect())
    }

    fn literal(&mut self) -> PResult<Value> {
        let v = match self.peek() {
            Tok::Int(n) => Value::Int(*n),
            Tok::Real(x) => Value::real(*x),
            Tok::Str(s) => Value::Str(s.clone()),
            Tok::Ident(s) if s == "true" => Value::Bool(true),
            Tok::Ident(s) if s == "false" => Value::Bool(false),
            _ => return self.unexpected("a literal value"),
        };
        self.bump();
        Ok(v)
    }

    fn expr(&mut self) -> PResult<Expr> {
        match self.peek() {
            Tok::Ident(s) if s != "true" && s != "false" => {
                let name = s.clone();
                self.bump();
                if self.eat_sym('(') {
                    let mut args = Vec::new();
                    while !self.eat_sym(')') {
                        args.push(self.expr()?);
                        self.eat_sym(',');
                    }
                    Ok(Expr::Call(name, args))
                } else {
                    Ok(Expr::Var(Var::new(name)))
                }
            }
            _ => self.literal().map(Expr::Val),
        }
    }

    fn term(&mut self) -> PResult<ProcessTerm> {
        if self.eat_kw("server") {
            let (arms, _) = self.recv_body(false)?;
            Ok(ProcessTerm::Server(arms))
        } else if self.eat_kw("par") {
            self.expect_sym('{')?;
            let mut ops = vec![self.term()?];
            while self.eat_sym('|') {
                ops.push(self.term()?);
            }
            self.expect_sym('}')?;
            Ok(ProcessTerm::Par(ops))
        } else {
            self.process().map(ProcessTerm::Lin)
        }
    }

    fn process(&mut self) -> PResult<Process> {
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return self.unexpected("a process"),
        };
        match kw.as_str() {
            "end" => {
                self.bump();
                Ok(Process::Inact)
            }
            "send" => {
                self.bump();
                let peer = self.ident("a receiver role")?;
                self.expect_sym(':')?;
                let label = self.ident("a label")?;
                let mut payload = Vec::new();
                if self.eat_sym('<') {
                    while !self.eat_sym('>') {
                        payload.push(self.expr()?);
                        self.eat_sym(',');
                    }
                } else if self.eat_sym('(') {
                    // `send q:m().P` is accepted as a spelling of an empty payload.
                    self.expect_sym(')')?;
                }
                self.expect_sym('.')?;
                let cont = self.process()?;
                Ok(Process::send(peer.as_str(), label.as_str(), payload, cont))
            }
            "recv" => {
                self.bump();
                let (arms, timeout) = self.recv_body(true)?;
                Ok(Process::branch(arms, timeout))
            }
            "choice" => {
                self.bump();
                self.expect_sym('{')?;
                let mut arms = Vec::new();
                if !self.eat_sym('}') {
                    arms.push(self.process()?);
                    while self.eat_sym('|') {
                        arms.push(self.process()?);
                    }
                    self.expect_sym('}')?;
                }
                Ok(Process::Choice(arms))
            }
            "server" => self.error("replicated servers may only appear at the top of a role definition"),
            "par" => self.error("parallel composition may only appear at the top of a role definition"),
            _ => self.unexpected("`end`, `send`, `recv` or `choice`"),
        }
    }

    /// `{ arm, ..., timeout.P }`; the timeout arm is only allowed when `linear`.
    fn recv_body(&mut self, linear: bool) -> PResult<(Vec<RecvArm>, Option<Process>)> {
        self.expect_sym('{')?;
        let mut arms = Vec::new();
        let mut timeout = None;
        while !self.eat_sym('}') {
            if timeout.is_some() {
                return self.error("the timeout arm must come last");
            }
            if self.is_kw("timeout") && *self.peek_at(1) == Tok::Sym('.') {
                if !linear {
                    return self.error("servers cannot have a timeout arm");
                }
                self.bump();
                self.bump();
                timeout = Some(self.process()?);
            } else {
                let peer = self.ident("a sender role")?;
                self.expect_sym(':')?;
                let label = self.ident("a label")?;
                self.expect_sym('(')?;
                let mut binders = Vec::new();
                while !self.eat_sym(')') {
                    binders.push(Var::new(self.ident("a variable")?));
                    self.eat_sym(',');
                }
                self.expect_sym('.')?;
                let cont = self.process()?;
                arms.push(RecvArm::new(peer.as_str(), label.as_str(), binders, cont));
            }
            self.eat_sym(',');
        }
        Ok((arms, timeout))
    }

    fn type_decl(&mut self) -> PResult<TypeDecl> {
        if *self.peek() == Tok::Sym('!') {
            self.bump();
            let (arms, _) = self.type_body(false)?;
            Ok(TypeDecl::Replicated(ReplicatedType::new(arms)))
        } else {
            self.session_type().map(TypeDecl::Session)
        }
    }

    fn session_type(&mut self) -> PResult<SessionType> {
        match self.peek() {
            Tok::Ident(s) if s == "end" => {
                self.bump();
                Ok(SessionType::End)
            }
            Tok::Ident(s) if s == "par" => {
                self.bump();
                self.expect_sym('{')?;
                let mut comps = vec![self.session_type()?];
                while self.eat_sym('|') {
                    comps.push(self.session_type()?);
                }
                self.expect_sym('}')?;
                Ok(SessionType::from_components(comps).expect("nonempty"))
            }
            Tok::Sym('+') => {
                self.bump();
                let (arms, _) = self.type_body(false)?;
                Ok(SessionType::Select(arms))
            }
            Tok::Sym('&') => {
                self.bump();
                let (arms, timeout) = self.type_body(true)?;
                Ok(SessionType::branch(arms, timeout))
            }
            Tok::Sym('!') => self.error("replicated types may only annotate a role directly"),
            _ => self.unexpected("a session type"),
        }
    }

    fn type_body(&mut self, timeout_ok: bool) -> PResult<(Vec<TypeArm>, Option<SessionType>)> {
        self.expect_sym('{')?;
        let mut arms = Vec::new();
        let mut timeout = None;
        while !self.eat_sym('}') {
            if timeout.is_some() {
                return self.error("the timeout arm must come last");
            }
            if self.is_kw("timeout") && *self.peek_at(1) == Tok::Sym('.') {
                if !timeout_ok {
                    return self.error("only branching types may have a timeout arm");
                }
                self.bump();
                self.bump();
                timeout = Some(self.session_type()?);
            } else {
                let peer = self.ident("a role")?;
                self.expect_sym(':')?;
                let label = self.ident("a label")?;
                self.expect_sym('(')?;
                let mut payload = Vec::new();
                while !self.eat_sym(')') {
                    let at = self.here();
                    let name = self.ident("a basic type")?;
                    let Some(b) = BaseType::from_keyword(&name) else {
                        return Err(Diagnostic::error(at, rules::SYNTAX, format!("unknown basic type `{name}`")));
                    };
                    payload.push(b);
                    self.eat_sym(',');
                }
                self.expect_sym('.')?;
                let cont = self.session_type()?;
                arms.push(TypeArm { peer: Role::new(peer), label: Label::new(label), payload, cont });
            }
            self.eat_sym(',');
        }
        Ok((arms, timeout))
    }
}

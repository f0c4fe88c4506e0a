//! Textual model format.
//!
//! ```text
//! actor A "Clinic" {
//!   goal G1 "Treat patient" ie { p, !q };
//!   temp goal CT_1 "Carrier" ie { w };
//!   task T1 "Test" ie { { {a}, {b} }, c } mask { !q };
//!   or G1 -> T1, CT_1;
//! }
//! depends A.T1 -> B.R2;
//! ```
//!
//! A condition clause whose items are all braced groups is a disjunction of
//! those groups; otherwise it is a conjunction, and any nested groups are
//! distributed into disjunctive normal form.

use std::fmt::Write as _;

use crate::condition::{is_identifier, AltConditions, ConditionSet, Literal};
use crate::error::{Error, Result};

use super::{Artefact, ArtefactKind, DependencyLink, Endpoint, GoalModel, LinkKind};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    LBrace,
    RBrace,
    Semi,
    Comma,
    Arrow,
    Bang,
    Dot,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Str(s) => format!("string \"{s}\""),
        Tok::LBrace => "`{`".into(),
        Tok::RBrace => "`}`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Dot => "`.`".into(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let (l, k) = (line, col);
        let simple = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ';' => Some(Tok::Semi),
            ',' => Some(Tok::Comma),
            '!' | '¬' | '~' => Some(Tok::Bang),
            '.' => Some(Tok::Dot),
            _ => None,
        };
        if let Some(tok) = simple {
            bump!();
            out.push(Token {
                tok,
                line: l,
                col: k,
            });
            continue;
        }
        if c.is_whitespace() {
            bump!();
        } else if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump!();
            }
        } else if c == '-' {
            bump!();
            if chars.peek() == Some(&'>') {
                bump!();
                out.push(Token {
                    tok: Tok::Arrow,
                    line: l,
                    col: k,
                });
            } else {
                return Err(Error::parse(l, k, "expected `->`"));
            }
        } else if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match bump!() {
                    Some('"') => break,
                    Some('\\') => match bump!() {
                        Some(e @ ('"' | '\\')) => s.push(e),
                        Some('n') => s.push('\n'),
                        _ => return Err(Error::parse(line, col, "invalid escape in string")),
                    },
                    Some(c) => s.push(c),
                    None => return Err(Error::parse(l, k, "unterminated string")),
                }
            }
            out.push(Token {
                tok: Tok::Str(s),
                line: l,
                col: k,
            });
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    bump!();
                } else {
                    break;
                }
            }
            if !is_identifier(&s) {
                return Err(Error::parse(l, k, format!("invalid identifier `{s}`")));
            }
            out.push(Token {
                tok: Tok::Ident(s),
                line: l,
                col: k,
            });
        } else {
            return Err(Error::parse(l, k, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

/// One item of a condition clause before normalisation.
enum CondItem {
    Lit(Literal),
    Group(Vec<CondItem>),
}

fn to_dnf(items: &[CondItem]) -> Vec<ConditionSet> {
    if !items.is_empty() && items.iter().all(|i| matches!(i, CondItem::Group(_))) {
        let mut out = Vec::new();
        for item in items {
            if let CondItem::Group(g) = item {
                out.extend(to_dnf(g));
            }
        }
        return out;
    }
    let mut acc = vec![ConditionSet::new()];
    for item in items {
        match item {
            CondItem::Lit(l) => {
                for a in &mut acc {
                    a.insert(l.clone());
                }
            }
            CondItem::Group(g) => {
                let sub = to_dnf(g);
                let mut next = Vec::with_capacity(acc.len() * sub.len());
                for a in &acc {
                    for s in &sub {
                        next.push(a.union(s));
                    }
                }
                acc = next;
            }
        }
    }
    acc
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|t| (t.line, t.col))
            .unwrap_or(self.eof)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (l, c) = self.here();
        Err(Error::parse(l, c, msg))
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => {
                let msg = format!("expected {}, found {}", describe(&want), describe(t));
                self.err(msg)
            }
            None => self.err(format!("expected {}, found end of input", describe(&want))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(t) => {
                let msg = format!("expected {what}, found {}", describe(t));
                self.err(msg)
            }
            None => self.err(format!("expected {what}, found end of input")),
        }
    }

    fn string(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected quoted name"),
        }
    }

    fn cond_group(&mut self) -> Result<Vec<CondItem>> {
        self.expect(Tok::LBrace)?;
        let mut items = Vec::new();
        if self.peek() == Some(&Tok::RBrace) {
            self.pos += 1;
            return Ok(items);
        }
        loop {
            match self.peek() {
                Some(Tok::LBrace) => items.push(CondItem::Group(self.cond_group()?)),
                Some(Tok::Bang) => {
                    self.pos += 1;
                    let atom = self.ident("atom")?;
                    items.push(CondItem::Lit(Literal::neg(atom)));
                }
                Some(Tok::Ident(_)) => {
                    let atom = self.ident("atom")?;
                    items.push(CondItem::Lit(Literal::pos(atom)));
                }
                _ => return self.err("expected literal or `{`"),
            }
            match self.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RBrace) => break,
                _ => {
                    self.pos -= 1;
                    return self.err("expected `,` or `}` in condition list");
                }
            }
        }
        Ok(items)
    }

    fn alt_conditions(&mut self) -> Result<AltConditions> {
        let items = self.cond_group()?;
        let alts = to_dnf(&items);
        Ok(AltConditions::from_alternatives(alts).unwrap_or_default())
    }
}

/// Parses model source text.
pub fn parse_model(src: &str) -> Result<GoalModel> {
    let toks = lex(src)?;
    let eof = {
        let lines = src.split('\n').count().max(1);
        let last = src.rsplit('\n').next().unwrap_or("");
        (lines, last.chars().count() + 1)
    };
    let mut p = Parser { toks, pos: 0, eof };
    let mut model = GoalModel::default();
    let mut pending_deps = Vec::new();

    while let Some(tok) = p.peek().cloned() {
        match tok {
            Tok::Ident(kw) if kw == "actor" => {
                p.pos += 1;
                let (al, ac) = p.here();
                let actor = p.ident("actor id")?;
                let name = p.string()?;
                if model.actors.contains_key(&actor) {
                    return Err(Error::parse(al, ac, format!("duplicate id `{actor}`")));
                }
                model.add_actor(actor.clone(), name);
                p.expect(Tok::LBrace)?;
                parse_actor_body(&mut p, &mut model, &actor)?;
            }
            Tok::Ident(kw) if kw == "depends" => {
                p.pos += 1;
                let at = p.here();
                let a1 = p.ident("actor id")?;
                p.expect(Tok::Dot)?;
                let x1 = p.ident("artefact id")?;
                p.expect(Tok::Arrow)?;
                let a2 = p.ident("actor id")?;
                p.expect(Tok::Dot)?;
                let x2 = p.ident("artefact id")?;
                p.expect(Tok::Semi)?;
                pending_deps.push((
                    at,
                    DependencyLink {
                        depender: Endpoint {
                            actor: a1,
                            artefact: x1,
                        },
                        dependee: Endpoint {
                            actor: a2,
                            artefact: x2,
                        },
                    },
                ));
            }
            other => {
                return p.err(format!(
                    "expected `actor` or `depends`, found {}",
                    describe(&other)
                ))
            }
        }
    }

    // Dependencies may reference actors declared later in the file.
    for ((l, c), dep) in pending_deps {
        for ep in [&dep.depender, &dep.dependee] {
            if !model.actors.contains_key(&ep.actor) {
                return Err(Error::parse(l, c, format!("unknown id `{}`", ep.actor)));
            }
            match model.artefacts.get(&ep.artefact) {
                Some(a) if a.actor == ep.actor => {}
                Some(_) => {
                    return Err(Error::parse(
                        l,
                        c,
                        format!("`{}` is not a member of actor `{}`", ep.artefact, ep.actor),
                    ))
                }
                None => return Err(Error::parse(l, c, format!("unknown id `{}`", ep.artefact))),
            }
        }
        model.dependencies.insert(dep);
    }
    Ok(model)
}

struct PendingLink {
    at: (usize, usize),
    parent: String,
    kind: LinkKind,
    children: Vec<String>,
}

fn parse_actor_body(p: &mut Parser, model: &mut GoalModel, actor: &str) -> Result<()> {
    let mut links: Vec<PendingLink> = Vec::new();
    loop {
        let at = p.here();
        let Some(tok) = p.next() else {
            return p.err("unterminated actor block");
        };
        let kw = match tok {
            Tok::RBrace => break,
            Tok::Ident(kw) => kw,
            other => {
                p.pos -= 1;
                return p.err(format!("expected declaration, found {}", describe(&other)));
            }
        };
        match kw.as_str() {
            "temp" | "goal" | "task" | "resource" => {
                let temp = kw == "temp";
                let kind_kw = if temp { p.ident("artefact kind")? } else { kw };
                let kind = match kind_kw.as_str() {
                    "goal" => ArtefactKind::Goal,
                    "task" => ArtefactKind::Task,
                    "resource" => ArtefactKind::Resource,
                    other => {
                        p.pos -= 1;
                        return p.err(format!("unknown artefact kind `{other}`"));
                    }
                };
                let id_at = p.here();
                let id = p.ident("artefact id")?;
                let name = p.string()?;
                let mut ie = AltConditions::default();
                let mut mask = ConditionSet::new();
                loop {
                    match p.peek() {
                        Some(Tok::Ident(k)) if k == "ie" => {
                            p.pos += 1;
                            ie = p.alt_conditions()?;
                        }
                        Some(Tok::Ident(k)) if k == "mask" => {
                            p.pos += 1;
                            let m = p.alt_conditions()?;
                            if !m.is_single() {
                                return p.err("mask must be a flat literal list");
                            }
                            mask = m.core();
                        }
                        _ => break,
                    }
                }
                p.expect(Tok::Semi)?;
                if model.artefacts.contains_key(&id) || model.actors.contains_key(&id) {
                    return Err(Error::parse(
                        id_at.0,
                        id_at.1,
                        format!("duplicate id `{id}`"),
                    ));
                }
                model.add_artefact(Artefact {
                    id,
                    kind,
                    name,
                    actor: actor.to_string(),
                    ie,
                    mask,
                    temp,
                })?;
            }
            "and" | "or" => {
                let kind = if kw == "and" {
                    LinkKind::And
                } else {
                    LinkKind::Or
                };
                let parent = p.ident("parent id")?;
                p.expect(Tok::Arrow)?;
                let mut children = vec![p.ident("child id")?];
                while p.peek() == Some(&Tok::Comma) {
                    p.pos += 1;
                    children.push(p.ident("child id")?);
                }
                p.expect(Tok::Semi)?;
                links.push(PendingLink {
                    at,
                    parent,
                    kind,
                    children,
                });
            }
            other => {
                p.pos -= 1;
                return p.err(format!("unknown keyword `{other}`"));
            }
        }
    }

    // Links are resolved after the block so they may precede declarations.
    for link in links {
        let (l, c) = link.at;
        for id in std::iter::once(&link.parent).chain(&link.children) {
            if !model.artefacts.contains_key(id) {
                return Err(Error::parse(l, c, format!("unknown id `{id}`")));
            }
        }
        model
            .add_link(&link.parent, link.kind, link.children)
            .map_err(|e| Error::parse(l, c, e.to_string()))?;
    }
    Ok(())
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Canonical text form: actors by id, artefacts by id, links by parent id
/// (children in declared order), dependencies sorted.
pub fn serialize_model(model: &GoalModel) -> String {
    let mut out = String::new();
    for (i, actor) in model.actors.values().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "actor {} {} {{", actor.id, quote(&actor.name));
        let members = model.artefacts.values().filter(|a| a.actor == actor.id);
        for a in members {
            out.push_str("  ");
            if a.temp {
                out.push_str("temp ");
            }
            let _ = write!(out, "{} {} {} ie {}", a.kind, a.id, quote(&a.name), a.ie);
            if !a.mask.is_empty() {
                let _ = write!(out, " mask {}", a.mask);
            }
            out.push_str(";\n");
        }
        for link in model.decompositions.values() {
            let owned = model
                .artefacts
                .get(&link.parent)
                .is_some_and(|a| a.actor == actor.id);
            if owned {
                let _ = writeln!(
                    out,
                    "  {} {} -> {};",
                    link.kind.keyword(),
                    link.parent,
                    link.children.join(", ")
                );
            }
        }
        out.push_str("}\n");
    }
    if !model.dependencies.is_empty() {
        out.push('\n');
    }
    for d in &model.dependencies {
        let _ = writeln!(out, "depends {} -> {};", d.depender, d.dependee);
    }
    out
}

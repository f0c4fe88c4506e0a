//! Background knowledge: implication rules and mutual exclusions.
//!
//! A rule `rule H -> body;` says the atom `H` is characterised by `body`.
//! Rules are used in two directions: [`KnowledgeBase::closure`] derives heads
//! from bodies (forward chaining), and [`kb_reduce`] drops heads that are
//! already implied by the rest of an alternative.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::condition::{is_identifier, AltConditions, ConditionSet, Literal};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub head: String,
    /// Body in disjunctive normal form: any one conjunct suffices.
    pub body: Vec<BTreeSet<String>>,
}

impl Rule {
    fn fires(&self, atoms: &BTreeSet<&str>) -> bool {
        self.body
            .iter()
            .any(|conj| conj.iter().all(|a| atoms.contains(a.as_str())))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub rules: Vec<Rule>,
    /// Unordered pairs, stored with the smaller atom first.
    pub mutexes: BTreeSet<(String, String)>,
}

impl KnowledgeBase {
    pub fn is_empty(&self) -> bool {
        self.rules.is_empty() && self.mutexes.is_empty()
    }

    pub fn mutex(&self, a: &str, b: &str) -> bool {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.mutexes.iter().any(|(x, y)| x == key.0 && y == key.1)
    }

    /// Every atom mentioned by a rule or mutex, sorted.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for r in &self.rules {
            out.insert(r.head.clone());
            for conj in &r.body {
                out.extend(conj.iter().cloned());
            }
        }
        for (a, b) in &self.mutexes {
            out.insert(a.clone());
            out.insert(b.clone());
        }
        out
    }

    /// Adds every rule head whose body is satisfied by the positive atoms of
    /// `set`, repeatedly, until nothing changes.
    pub fn closure(&self, set: &ConditionSet) -> ConditionSet {
        if self.rules.is_empty() {
            return set.clone();
        }
        let mut out = set.clone();
        loop {
            let atoms: BTreeSet<&str> = out.positive_atoms().collect();
            let new: Vec<Literal> = self
                .rules
                .iter()
                .filter(|r| !atoms.contains(r.head.as_str()) && r.fires(&atoms))
                .map(|r| Literal::pos(r.head.clone()))
                .collect();
            if new.is_empty() {
                return out;
            }
            for l in new {
                out.insert(l);
            }
        }
    }

    /// Rules with the given head, in file order.
    pub fn rules_for<'a>(&'a self, head: &'a str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| r.head == head)
    }
}

/// Removes rule heads already implied by the remainder of each alternative.
///
/// Rules are visited in file order, cycling until no head can be removed.
/// Duplicate alternatives that appear after reduction are collapsed.
pub fn kb_reduce(alts: &AltConditions, kb: &KnowledgeBase) -> AltConditions {
    if kb.rules.is_empty() {
        return alts.clone();
    }
    let reduced = alts.iter().map(|alt| {
        let mut cur = alt.clone();
        loop {
            let mut changed = false;
            for rule in &kb.rules {
                let head = Literal::pos(rule.head.clone());
                if !cur.contains(&head) {
                    continue;
                }
                let mut rest = cur.clone();
                rest.remove(&head);
                if kb.closure(&rest).contains(&head) {
                    cur = rest;
                    changed = true;
                }
            }
            if !changed {
                return cur;
            }
        }
    });
    AltConditions::from_alternatives(reduced).expect("reduction keeps every alternative")
}

/// False when `s` holds both polarities of an atom or both atoms of a mutex.
pub fn kb_consistent(s: &ConditionSet, kb: &KnowledgeBase) -> bool {
    if !s.is_consistent() {
        return false;
    }
    let pos: Vec<&str> = s.positive_atoms().collect();
    !kb.mutexes
        .iter()
        .any(|(a, b)| pos.contains(&a.as_str()) && pos.contains(&b.as_str()))
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    And,
    Or,
    LParen,
    RParen,
    Arrow,
    Semi,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>> {
    let mut out = Vec::new();
    for (li, line) in src.lines().enumerate() {
        let line_no = li + 1;
        let code = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = code.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let tok = match c {
                c if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                '&' | '∧' => Tok::And,
                '|' | '∨' => Tok::Or,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ';' => Tok::Semi,
                '-' if chars.get(i + 1) == Some(&'>') => {
                    i += 1;
                    Tok::Arrow
                }
                '→' => Tok::Arrow,
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    let start = i;
                    while i + 1 < chars.len()
                        && (chars[i + 1].is_ascii_alphanumeric() || chars[i + 1] == '_')
                    {
                        i += 1;
                    }
                    let word: String = chars[start..=i].iter().collect();
                    if !is_identifier(&word) {
                        return Err(Error::parse(line_no, col, format!("invalid atom `{word}`")));
                    }
                    Tok::Ident(word)
                }
                other => {
                    return Err(Error::parse(
                        line_no,
                        col,
                        format!("unexpected character `{other}`"),
                    ))
                }
            };
            out.push((tok, line_no, col));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        let (l, c) = self
            .toks
            .get(self.pos)
            .or(self.toks.last())
            .map(|t| (t.1, t.2))
            .unwrap_or((1, 1));
        Err(Error::parse(l, c, msg))
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected atom"),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(&format!("expected {what}"))
        }
    }

    // expr := term ('|' term)*
    fn expr(&mut self) -> Result<Vec<BTreeSet<String>>> {
        let mut out = self.term()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            for conj in self.term()? {
                if !out.contains(&conj) {
                    out.push(conj);
                }
            }
        }
        Ok(out)
    }

    // term := factor ('&' factor)*
    fn term(&mut self) -> Result<Vec<BTreeSet<String>>> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.factor()?;
            let mut next = Vec::new();
            for a in &acc {
                for b in &rhs {
                    let merged: BTreeSet<String> = a.union(b).cloned().collect();
                    if !next.contains(&merged) {
                        next.push(merged);
                    }
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Vec<BTreeSet<String>>> {
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            Ok(e)
        } else {
            Ok(vec![BTreeSet::from([self.ident()?])])
        }
    }
}

/// Parses `rule H -> expr;` and `mutex a b;` statements; `#` starts a comment.
pub fn parse_kb(src: &str) -> Result<KnowledgeBase> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let mut kb = KnowledgeBase::default();
    while p.peek().is_some() {
        match p.ident()?.as_str() {
            "rule" => {
                let head = p.ident()?;
                p.expect(Tok::Arrow, "`->`")?;
                let body = p.expr()?;
                p.expect(Tok::Semi, "`;`")?;
                kb.rules.push(Rule { head, body });
            }
            "mutex" => {
                let a = p.ident()?;
                let b = p.ident()?;
                p.expect(Tok::Semi, "`;`")?;
                kb.mutexes.insert(if a <= b { (a, b) } else { (b, a) });
            }
            _ => {
                p.pos -= 1;
                return p.err("expected `rule` or `mutex`");
            }
        }
    }
    Ok(kb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(s: &str) -> ConditionSet {
        ConditionSet::parse(s).unwrap()
    }

    const HEALTH: &str = "
        # healthcare background rules
        rule Emergency_Treatment_Provided -> Received_Text | Received_Voice;
        rule Normal_Treatment_Provided -> (Received_Text | Received_Voice) & PreExisting_Disease_Searched & Test_Result_Known;
        rule Received_Patient -> Received_Text | Received_Voice;
        rule Provided_Relief -> Emergency_Treatment_Provided | Normal_Treatment_Provided;
    ";

    #[test]
    fn parses_rules_into_dnf() {
        let kb = parse_kb(HEALTH).unwrap();
        assert_eq!(kb.rules.len(), 4);
        assert_eq!(kb.rules[1].body.len(), 2);
        assert!(kb.rules[1].body[0].contains("Test_Result_Known"));
    }

    #[test]
    fn parse_error_has_position() {
        let err = parse_kb("rule a -> b\nrule c -> d;").unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 2,
                    column: 1,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn reduce_drops_implied_heads() {
        let kb = parse_kb(HEALTH).unwrap();
        let g2 = AltConditions::from_alternatives([
            set("Emergency_Treatment_Provided Received_Text"),
            set("Emergency_Treatment_Provided Received_Voice"),
        ])
        .unwrap();
        let want = AltConditions::from_alternatives([set("Received_Text"), set("Received_Voice")])
            .unwrap();
        assert_eq!(kb_reduce(&g2, &kb), want);
        let untouched = AltConditions::single(set("x y"));
        assert_eq!(kb_reduce(&untouched, &kb), untouched);
    }

    #[test]
    fn reduce_chains_through_other_rules() {
        let kb = parse_kb(HEALTH).unwrap();
        let g1 = AltConditions::single(set("Received_Patient Provided_Relief Received_Text"));
        assert_eq!(
            kb_reduce(&g1, &kb),
            AltConditions::single(set("Received_Text"))
        );
    }

    #[test]
    fn consistency_with_mutexes() {
        let kb = parse_kb("mutex Insufficient Payment_done;").unwrap();
        assert!(!kb_consistent(&set("Insufficient Payment_done"), &kb));
        assert!(!kb_consistent(&set("p !p"), &KnowledgeBase::default()));
        assert!(kb_consistent(&set("p q"), &KnowledgeBase::default()));
        assert!(kb.mutex("Payment_done", "Insufficient"));
    }
}

//! Concrete syntax: terms, `.brs` systems, `.rdha` automata and fragment
//! formulas. Diagnostics carry 1-based line and column.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::brs::{Brs, Rule};
use crate::rdha::{Endpoint, Machine, Rdha, SyAction, Transition};
use crate::terms::{normalize, Action, ProcessTerm, RawTerm, Variable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Dot,
    Comma,
    Semi,
    Colon,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Minus,
    Arrow,
    Slash,
    ParBar,
    Bar,
    And,
    Bang,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Dot => "`.`",
            Tok::Comma => "`,`",
            Tok::Semi => "`;`",
            Tok::Colon => "`:`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::Minus => "`-`",
            Tok::Arrow => "`->`",
            Tok::Slash => "`/`",
            Tok::ParBar => "`||`",
            Tok::Bar => "`|`",
            Tok::And => "`&&`",
            Tok::Bang => "`!`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut adv = 1;
        let tok = match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => None,
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '.' => Some(Tok::Dot),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            ':' => Some(Tok::Colon),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '/' => Some(Tok::Slash),
            '!' | '~' => Some(Tok::Bang),
            '-' if chars.get(i + 1) == Some(&'>') => {
                adv = 2;
                Some(Tok::Arrow)
            }
            '-' => Some(Tok::Minus),
            '|' if chars.get(i + 1) == Some(&'|') => {
                adv = 2;
                Some(Tok::ParBar)
            }
            '|' => Some(Tok::Bar),
            '&' => {
                if chars.get(i + 1) == Some(&'&') {
                    adv = 2;
                }
                Some(Tok::And)
            }
            c if c.is_alphabetic() => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                adv = j - i;
                Some(Tok::Ident(chars[i..j].iter().collect()))
            }
            c => {
                return Err(ParseError { line, col, message: format!("unexpected character `{c}`") });
            }
        };
        i += adv;
        col += adv;
        if let Some(t) = tok {
            out.push((t, l0, c0));
        }
    }
    out.push((Tok::Eof, line, col));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].0
    }

    fn err_at(&self, k: usize, message: String) -> ParseError {
        let (_, line, col) = self.toks[k.min(self.toks.len() - 1)];
        ParseError { line, col, message }
    }

    fn err(&self, message: String) -> ParseError {
        self.err_at(self.pos, message)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {t}, found {}", self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => Err(self.err(format!("expected identifier, found {t}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            t => Err(self.err(format!("expected `{kw}`, found {t}"))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eof(&self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Eof => Ok(()),
            t => Err(self.err(format!("unexpected {t} after end of model"))),
        }
    }

    /// `kw: a, b, c;` with a possibly empty list.
    fn ident_list(&mut self, kw: &str) -> Result<Vec<(String, usize)>, ParseError> {
        self.keyword(kw)?;
        self.expect(Tok::Colon)?;
        let mut out = Vec::new();
        if *self.peek() != Tok::Semi {
            loop {
                let k = self.pos;
                out.push((self.ident()?, k));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Semi)?;
        Ok(out)
    }

    fn term(&mut self, vars: Option<&BTreeSet<Variable>>) -> Result<RawTerm, ParseError> {
        let mut t = self.seq_term(vars)?;
        while *self.peek() == Tok::ParBar {
            self.bump();
            let u = self.seq_term(vars)?;
            t = RawTerm::par(t, u);
        }
        Ok(t)
    }

    fn seq_term(&mut self, vars: Option<&BTreeSet<Variable>>) -> Result<RawTerm, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let t = self.term(vars)?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(s) if s == "eps" => {
                self.bump();
                Ok(RawTerm::Eps)
            }
            Tok::Ident(s) => {
                let k = self.pos;
                self.bump();
                let x = Variable::new(&s).map_err(|e| self.err_at(k, e.to_string()))?;
                if let Some(vs) = vars {
                    if !vs.contains(&x) {
                        return Err(self.err_at(k, format!("undeclared variable `{s}`")));
                    }
                }
                if *self.peek() == Tok::Dot {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let t = self.term(vars)?;
                    self.expect(Tok::RParen)?;
                    Ok(RawTerm::seq(x, t))
                } else {
                    Ok(RawTerm::Var(x))
                }
            }
            t => Err(self.err(format!("expected a term, found {t}"))),
        }
    }
}

pub fn parse_raw_term(src: &str) -> Result<RawTerm, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term(None)?;
    p.eof()?;
    Ok(t)
}

pub fn parse_term(src: &str) -> Result<ProcessTerm, ParseError> {
    parse_raw_term(src).map(|t| normalize(&t))
}

pub fn parse_brs(src: &str) -> Result<Brs, ParseError> {
    let mut p = Parser::new(src)?;
    p.keyword("brs")?;
    p.expect(Tok::LBrace)?;
    let mut vars = BTreeSet::new();
    for (v, k) in p.ident_list("vars")? {
        let x = Variable::new(&v).map_err(|e| p.err_at(k, e.to_string()))?;
        if !vars.insert(x) {
            return Err(p.err_at(k, format!("variable `{v}` declared twice")));
        }
    }
    let mut alphabet = BTreeSet::new();
    for (a, k) in p.ident_list("alphabet")? {
        let act = Action::new(&a).map_err(|e| p.err_at(k, e.to_string()))?;
        if !alphabet.insert(act) {
            return Err(p.err_at(k, format!("action `{a}` declared twice")));
        }
    }
    let mut rules: Vec<Rule> = Vec::new();
    let mut names = BTreeSet::new();
    while *p.peek() != Tok::RBrace {
        let start = p.pos;
        let accepting = p.at_keyword("accepting");
        if accepting {
            p.bump();
        }
        p.keyword("rule")?;
        let name = if *p.peek() == Tok::Colon {
            format!("r{}", rules.len() + 1)
        } else {
            p.ident()?
        };
        if !names.insert(name.clone()) {
            return Err(p.err_at(start, format!("duplicate rule name `{name}`")));
        }
        p.expect(Tok::Colon)?;
        let lk = p.pos;
        let lhs = normalize(&p.term(Some(&vars))?);
        if lhs.is_epsilon() {
            return Err(p.err_at(lk, "rule left-hand side must not be eps".to_string()));
        }
        p.expect(Tok::Minus)?;
        let ak = p.pos;
        let a = p.ident()?;
        let label = Action::new(&a).map_err(|e| p.err_at(ak, e.to_string()))?;
        if !alphabet.contains(&label) {
            return Err(p.err_at(ak, format!("undeclared action `{a}`")));
        }
        p.expect(Tok::Arrow)?;
        let rhs = normalize(&p.term(Some(&vars))?);
        p.expect(Tok::Semi)?;
        rules.push(Rule::new(&name, lhs, label, rhs, accepting));
    }
    let end = p.pos;
    p.expect(Tok::RBrace)?;
    p.eof()?;
    Brs::new(vars, alphabet, rules).map_err(|e| p.err_at(end, e.to_string()))
}

fn endpoint(p: &mut Parser) -> Result<Endpoint, ParseError> {
    if *p.peek() == Tok::LParen {
        p.bump();
        let b = p.ident()?;
        p.expect(Tok::Comma)?;
        let q = p.ident()?;
        p.expect(Tok::RParen)?;
        Ok(Endpoint::Boxed(b, q))
    } else {
        Ok(Endpoint::Node(p.ident()?))
    }
}

pub fn parse_rdha(src: &str) -> Result<Rdha, ParseError> {
    let mut p = Parser::new(src)?;
    p.keyword("rdha")?;
    p.expect(Tok::LBrace)?;
    let inputs: BTreeSet<String> = p.ident_list("inputs")?.into_iter().map(|(s, _)| s).collect();
    let channels: BTreeSet<String> = if p.at_keyword("channels") {
        p.ident_list("channels")?.into_iter().map(|(s, _)| s).collect()
    } else {
        BTreeSet::new()
    };
    // machine references are resolved after all machines are read
    let mut machines = Vec::new();
    let mut box_refs: Vec<Vec<(String, String, usize)>> = Vec::new();
    let mut new_refs: Vec<(usize, usize, String, usize)> = Vec::new();
    while p.at_keyword("machine") {
        p.bump();
        let name = p.ident()?;
        p.expect(Tok::LBrace)?;
        let mut m = Machine { name, ..Machine::default() };
        let mut refs = Vec::new();
        loop {
            match p.peek().clone() {
                Tok::RBrace => break,
                Tok::Ident(kw) if kw == "nodes" => {
                    m.nodes.extend(p.ident_list("nodes")?.into_iter().map(|(s, _)| s))
                }
                Tok::Ident(kw) if kw == "boxes" => {
                    m.boxes.extend(p.ident_list("boxes")?.into_iter().map(|(s, _)| s))
                }
                Tok::Ident(kw) if kw == "init" => {
                    m.initial.extend(p.ident_list("init")?.into_iter().map(|(s, _)| s))
                }
                Tok::Ident(kw) if kw == "exit" => {
                    m.exits.extend(p.ident_list("exit")?.into_iter().map(|(s, _)| s))
                }
                Tok::Ident(kw) if kw == "box" => {
                    p.bump();
                    let b = p.ident()?;
                    p.expect(Tok::Arrow)?;
                    let k = p.pos;
                    let target = p.ident()?;
                    p.expect(Tok::Semi)?;
                    refs.push((b, target, k));
                }
                Tok::Ident(kw) if kw == "trans" => {
                    p.bump();
                    let from = endpoint(&mut p)?;
                    p.expect(Tok::Minus)?;
                    let input = p.ident()?;
                    p.expect(Tok::Slash)?;
                    let ak = p.pos;
                    let action = match p.ident()?.as_str() {
                        "NIL" => SyAction::Nil,
                        "HALT" => SyAction::Halt,
                        "chan" => {
                            p.expect(Tok::LParen)?;
                            let g = p.ident()?;
                            p.expect(Tok::RParen)?;
                            SyAction::Chan(g)
                        }
                        "NEW" => {
                            p.expect(Tok::LParen)?;
                            let mk = p.pos;
                            let target = p.ident()?;
                            p.expect(Tok::Comma)?;
                            let entry = p.ident()?;
                            p.expect(Tok::RParen)?;
                            new_refs.push((machines.len(), m.delta.len(), target, mk));
                            SyAction::New { machine: usize::MAX, entry }
                        }
                        other => {
                            return Err(p.err_at(
                                ak,
                                format!("unknown action `{other}` (expected NIL, HALT, chan(..) or NEW(..))"),
                            ))
                        }
                    };
                    p.expect(Tok::Arrow)?;
                    let to = endpoint(&mut p)?;
                    p.expect(Tok::Semi)?;
                    m.delta.push(Transition { from, input, action, to });
                }
                t => return Err(p.err(format!("unexpected {t} in machine body"))),
            }
        }
        p.expect(Tok::RBrace)?;
        machines.push(m);
        box_refs.push(refs);
    }
    p.expect(Tok::RBrace)?;
    p.eof()?;
    let index: BTreeMap<String, usize> =
        machines.iter().enumerate().map(|(i, m)| (m.name.clone(), i)).collect();
    for (i, refs) in box_refs.into_iter().enumerate() {
        for (b, target, k) in refs {
            let j = *index.get(&target).ok_or_else(|| p.err_at(k, format!("unknown machine `{target}`")))?;
            machines[i].hierarchy.insert(b, j);
        }
    }
    for (mi, ti, target, k) in new_refs {
        let j = *index.get(&target).ok_or_else(|| p.err_at(k, format!("unknown machine `{target}`")))?;
        if let SyAction::New { machine, .. } = &mut machines[mi].delta[ti].action {
            *machine = j;
        }
    }
    Ok(Rdha { machines, inputs, channels })
}

pub fn print_rdha(r: &Rdha) -> String {
    use std::fmt::Write;
    let list = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(", ");
    let mut out = String::new();
    let _ = writeln!(out, "rdha {{");
    let _ = writeln!(out, "  inputs: {};", list(&r.inputs));
    let _ = writeln!(out, "  channels: {};", list(&r.channels));
    for m in &r.machines {
        let _ = writeln!(out, "  machine {} {{", m.name);
        let _ = writeln!(out, "    nodes: {};", list(&m.nodes));
        let _ = writeln!(out, "    boxes: {};", list(&m.boxes));
        let _ = writeln!(out, "    init: {};", list(&m.initial));
        let _ = writeln!(out, "    exit: {};", list(&m.exits));
        for (b, j) in &m.hierarchy {
            let _ = writeln!(out, "    box {b} -> {};", r.machines[*j].name);
        }
        for t in &m.delta {
            let act = match &t.action {
                SyAction::Nil => "NIL".to_string(),
                SyAction::Halt => "HALT".to_string(),
                SyAction::Chan(g) => format!("chan({g})"),
                SyAction::New { machine, entry } => format!("NEW({},{entry})", r.machines[*machine].name),
            };
            let _ = writeln!(out, "    trans {} -{}/{act}-> {};", t.from, t.input, t.to);
        }
        let _ = writeln!(out, "  }}");
    }
    let _ = writeln!(out, "}}");
    out
}

/// Top-level keyword of a model file.
#[derive(Clone, Debug)]
pub enum Model {
    Brs(Brs),
    Rdha(Rdha),
}

pub fn parse_model(src: &str) -> Result<Model, ParseError> {
    let p = Parser::new(src)?;
    if p.at_keyword("rdha") {
        parse_rdha(src).map(Model::Rdha)
    } else if p.at_keyword("brs") {
        parse_brs(src).map(Model::Brs)
    } else {
        Err(p.err(format!("expected `brs` or `rdha`, found {}", p.peek())))
    }
}

/// Propositional formula over actions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropFormula {
    Atom(Action),
    Not(Box<PropFormula>),
    And(Box<PropFormula>, Box<PropFormula>),
    Or(Box<PropFormula>, Box<PropFormula>),
}

impl fmt::Display for PropFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropFormula::Atom(a) => write!(f, "{a}"),
            PropFormula::Not(p) => write!(f, "!{p}"),
            PropFormula::And(a, b) => write!(f, "({a} && {b})"),
            PropFormula::Or(a, b) => write!(f, "({a} || {b})"),
        }
    }
}

/// `F psi`, `GF psi` and their negations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FragmentFormula {
    F(PropFormula),
    GF(PropFormula),
    Not(Box<FragmentFormula>),
}

impl fmt::Display for FragmentFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FragmentFormula::F(p) => write!(f, "F {p}"),
            FragmentFormula::GF(p) => write!(f, "GF {p}"),
            FragmentFormula::Not(g) => write!(f, "!({g})"),
        }
    }
}

impl Parser {
    fn fragment(&mut self) -> Result<FragmentFormula, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(FragmentFormula::Not(Box::new(self.fragment()?)))
            }
            Tok::LParen => {
                self.bump();
                let f = self.fragment()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(s) if s == "F" => {
                self.bump();
                Ok(FragmentFormula::F(self.prop_or()?))
            }
            Tok::Ident(s) if s == "GF" => {
                self.bump();
                Ok(FragmentFormula::GF(self.prop_or()?))
            }
            Tok::Ident(s) if s == "G" && self.peek2() == &Tok::Ident("F".into()) => {
                self.bump();
                self.bump();
                Ok(FragmentFormula::GF(self.prop_or()?))
            }
            t => Err(self.err(format!("expected `F`, `GF` or `!`, found {t}"))),
        }
    }

    fn prop_or(&mut self) -> Result<PropFormula, ParseError> {
        let mut a = self.prop_and()?;
        while matches!(self.peek(), Tok::ParBar | Tok::Bar) {
            self.bump();
            let b = self.prop_and()?;
            a = PropFormula::Or(Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn prop_and(&mut self) -> Result<PropFormula, ParseError> {
        let mut a = self.prop_unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let b = self.prop_unary()?;
            a = PropFormula::And(Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn prop_unary(&mut self) -> Result<PropFormula, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(PropFormula::Not(Box::new(self.prop_unary()?)))
            }
            Tok::LParen => {
                self.bump();
                let f = self.prop_or()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(s) => {
                let k = self.pos;
                self.bump();
                let a = Action::new(&s).map_err(|e| self.err_at(k, e.to_string()))?;
                Ok(PropFormula::Atom(a))
            }
            t => Err(self.err(format!("expected an action, found {t}"))),
        }
    }
}

pub fn parse_fragment(src: &str) -> Result<FragmentFormula, ParseError> {
    let mut p = Parser::new(src)?;
    let f = p.fragment()?;
    p.eof()?;
    Ok(f)
}

pub fn parse_prop(src: &str) -> Result<PropFormula, ParseError> {
    let mut p = Parser::new(src)?;
    let f = p.prop_or()?;
    p.eof()?;
    Ok(f)
}

impl std::str::FromStr for Brs {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_brs(s)
    }
}

impl std::str::FromStr for ProcessTerm {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_term(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const E3: &str = "brs { vars: X, Y, Z, W; alphabet: a, b, c;
        rule p1: X -a-> Y.(Z);
        rule p2: Z -b-> eps;
        accepting rule p3: Y -c-> Y || W; }";

    #[test]
    fn terms() {
        assert_eq!(parse_term("eps").unwrap(), ProcessTerm::Epsilon);
        assert_eq!(parse_term("X.(Y || Z) || W").unwrap().factors().len(), 2);
        assert_eq!(parse_term("(X || Y) || Z").unwrap(), parse_term("X || (Y || Z)").unwrap());
        assert!(parse_term("X.Y").is_err());
        assert!(parse_term("X ||").is_err());
        assert!(parse_term("X Y").is_err());
    }

    #[test]
    fn brs_file() {
        let b = parse_brs(E3).unwrap();
        assert_eq!(b.rules().len(), 3);
        assert_eq!(b.accepting().len(), 1);
        assert_eq!(b.rules()[2].name, "p3");
        assert!(b.is_normal_form());
        assert_eq!(parse_brs(&b.to_string()).unwrap(), b);
    }

    #[test]
    fn auto_names_and_comments() {
        let b = parse_brs("// header\nbrs { vars: X; alphabet: a; rule: X -a-> X; rule: X -a-> eps; // tail\n }").unwrap();
        let names: Vec<_> = b.rules().iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["r1", "r2"]);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_brs("brs {\n  vars: X;\n  alphabet: a;\n  rule r: X -a-> ;\n}").unwrap_err();
        assert_eq!(e.line, 4);
        assert!(e.to_string().starts_with("4:"));
        assert!(parse_brs("brs { vars: X; alphabet: a; rule r: X -a-> Y; }").is_err());
        assert!(parse_brs("brs { vars: X; alphabet: a; rule r: X -b-> X; }").is_err());
        assert!(parse_brs("brs { vars: Z_ACC; alphabet: a; }").is_err());
        assert!(parse_brs("brs { vars: X; alphabet: #; }").is_err());
        assert!(parse_brs("brs { vars: X; alphabet: a; rule r: eps -a-> X; }").is_err());
    }

    #[test]
    fn models() {
        assert!(matches!(parse_model(E3), Ok(Model::Brs(_))));
        let r = "rdha { inputs: a; machine M { nodes: q; init: q; exit: ; trans q -a/NIL-> q; } }";
        assert!(matches!(parse_model(r), Ok(Model::Rdha(_))));
        assert!(parse_model("net { }").is_err());
    }

    #[test]
    fn rdha_round_trip() {
        let src = "rdha { inputs: a, b; channels: g;
            machine M { nodes: q, q2; boxes: bx; init: q; exit: ; box bx -> S;
              trans q -a/NIL-> (bx,p); trans (bx,e) -b/NIL-> q2; trans q2 -a/NEW(S,p)-> q; trans q2 -b/chan(g)-> q2; }
            machine S { nodes: p, e; init: p; exit: e; trans p -a/HALT-> e; trans p -b/chan(g)-> p; } }";
        let r = parse_rdha(src).unwrap();
        assert_eq!(r.machines.len(), 2);
        assert_eq!(r.machines[0].hierarchy["bx"], 1);
        assert_eq!(parse_rdha(&print_rdha(&r)).unwrap(), r);
    }

    #[test]
    fn fragments() {
        for (src, shown) in [
            ("F a", "F a"),
            ("GF a", "GF a"),
            ("G F a", "GF a"),
            ("!F a", "!(F a)"),
            ("!(GF (a | b))", "!(GF (a || b))"),
            ("F !a & b", "F (!a && b)"),
        ] {
            let f = parse_fragment(src).unwrap();
            assert_eq!(f.to_string(), shown, "{src}");
            assert_eq!(parse_fragment(shown).unwrap(), f);
        }
        assert!(parse_fragment("G a").is_err());
        assert!(parse_fragment("F").is_err());
        assert!(parse_prop("a &").is_err());
    }

    fn arb_prop() -> impl Strategy<Value = PropFormula> {
        let leaf = prop::sample::select(vec!["a", "b", "c"]).prop_map(|s| PropFormula::Atom(Action::new(s).unwrap()));
        leaf.prop_recursive(3, 8, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|p| PropFormula::Not(Box::new(p))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| PropFormula::And(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| PropFormula::Or(Box::new(a), Box::new(b))),
            ]
        })
    }

    fn arb_rule_text() -> impl Strategy<Value = String> {
        let term = prop::sample::select(vec!["X", "Y", "eps", "X || Y", "X.(Y)", "Y.(X || X)", "X || Y.(Y)"]);
        let lhs = prop::sample::select(vec!["X", "Y", "X || Y", "X.(Y)"]);
        (any::<bool>(), lhs, prop::sample::select(vec!["a", "b"]), term).prop_map(|(acc, l, a, r)| {
            format!("{}rule: {l} -{a}-> {r};", if acc { "accepting " } else { "" })
        })
    }

    proptest! {
        #[test]
        fn prop_formulas_round_trip(p in arb_prop()) {
            let f = FragmentFormula::Not(Box::new(FragmentFormula::GF(p)));
            prop_assert_eq!(parse_fragment(&f.to_string()).unwrap(), f);
        }

        #[test]
        fn brs_round_trip(rules in prop::collection::vec(arb_rule_text(), 0..6)) {
            let src = format!("brs {{ vars: X, Y; alphabet: a, b; {} }}", rules.join(" "));
            let b = parse_brs(&src).unwrap();
            prop_assert_eq!(b.rules().len(), rules.len());
            prop_assert_eq!(parse_brs(&b.to_string()).unwrap(), b);
        }
    }
}

//! Büchi rewrite systems: rules, normal-form classification, the one-step
//! derivation relation and derivation bookkeeping.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::terms::{Action, ProcessTerm, Variable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BrsError {
    #[error("rule `{0}` has an empty left-hand side")]
    EmptyLhs(String),
    #[error("rule `{rule}` uses undeclared variable `{var}`")]
    UndeclaredVariable { rule: String, var: String },
    #[error("rule `{rule}` uses undeclared action `{action}`")]
    UndeclaredAction { rule: String, action: String },
    #[error("undeclared action `{0}`")]
    UnknownAction(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate rule name `{0}`")]
    DuplicateName(String),
    #[error("step {0} does not replay")]
    InvalidStep(usize),
    #[error("step index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("anchor {0} does not point at a top-level sequential factor")]
    InvalidAnchor(String),
    #[error("system is not in normal form (rule `{0}`)")]
    NotNormalForm(String),
    #[error("system is not parallel (rule `{0}`)")]
    NotParallel(String),
    #[error("system is not sequential (rule `{0}`)")]
    NotSequential(String),
}

/// Index of a rule in its system, in file order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RuleId(pub usize);

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub lhs: ProcessTerm,
    pub label: Action,
    pub rhs: ProcessTerm,
    pub accepting: bool,
}

impl Rule {
    pub fn new(name: &str, lhs: ProcessTerm, label: Action, rhs: ProcessTerm, accepting: bool) -> Self {
        Rule { name: name.to_string(), lhs, label, rhs, accepting }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.accepting {
            f.write_str("accepting ")?;
        }
        write!(f, "rule {}: {} -{}-> {};", self.name, self.lhs, self.label, self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Brs {
    vars: BTreeSet<Variable>,
    alphabet: BTreeSet<Action>,
    rules: Vec<Rule>,
}

impl Brs {
    pub fn new(
        vars: BTreeSet<Variable>,
        alphabet: BTreeSet<Action>,
        rules: Vec<Rule>,
    ) -> Result<Self, BrsError> {
        let mut names = BTreeSet::new();
        for r in &rules {
            if !names.insert(r.name.as_str()) {
                return Err(BrsError::DuplicateName(r.name.clone()));
            }
            if r.lhs.is_epsilon() {
                return Err(BrsError::EmptyLhs(r.name.clone()));
            }
            let mut used = BTreeSet::new();
            r.lhs.variables(&mut used);
            r.rhs.variables(&mut used);
            if let Some(v) = used.iter().find(|v| !vars.contains(*v)) {
                return Err(BrsError::UndeclaredVariable { rule: r.name.clone(), var: v.to_string() });
            }
            if !alphabet.contains(&r.label) {
                return Err(BrsError::UndeclaredAction {
                    rule: r.name.clone(),
                    action: r.label.to_string(),
                });
            }
        }
        Ok(Brs { vars, alphabet, rules })
    }

    pub fn vars(&self) -> &BTreeSet<Variable> {
        &self.vars
    }

    pub fn alphabet(&self) -> &BTreeSet<Action> {
        &self.alphabet
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = RuleId> + '_ {
        (0..self.rules.len()).map(RuleId)
    }

    pub fn rule_by_name(&self, name: &str) -> Option<RuleId> {
        self.rules.iter().position(|r| r.name == name).map(RuleId)
    }

    pub fn accepting(&self) -> BTreeSet<RuleId> {
        self.ids().filter(|&i| self.rule(i).accepting).collect()
    }

    pub fn var(&self, name: &str) -> Result<Variable, BrsError> {
        self.vars
            .iter()
            .find(|v| v.name() == name)
            .cloned()
            .ok_or_else(|| BrsError::UnknownVariable(name.to_string()))
    }

    /// Same rules with the accepting set replaced.
    pub fn with_accepting<F: Fn(RuleId, &Rule) -> bool>(&self, f: F) -> Brs {
        let rules = self
            .rules
            .iter()
            .enumerate()
            .map(|(i, r)| Rule { accepting: f(RuleId(i), r), ..r.clone() })
            .collect();
        Brs { rules, ..self.clone() }
    }

    pub fn is_normal_form(&self) -> bool {
        self.rules.iter().all(|r| classify_rule(r) != RuleKind::Other)
    }

    pub fn is_parallel(&self) -> bool {
        self.rules.iter().all(|r| classify_rule(r) == RuleKind::Par)
    }

    pub fn is_sequential(&self) -> bool {
        self.rules.iter().all(|r| seq_shape(r).is_some())
    }

    pub fn check_normal_form(&self) -> Result<(), BrsError> {
        match self.rules.iter().find(|r| classify_rule(r) == RuleKind::Other) {
            Some(r) => Err(BrsError::NotNormalForm(r.name.clone())),
            None => Ok(()),
        }
    }

    pub fn check_parallel(&self) -> Result<(), BrsError> {
        match self.rules.iter().find(|r| classify_rule(r) != RuleKind::Par) {
            Some(r) => Err(BrsError::NotParallel(r.name.clone())),
            None => Ok(()),
        }
    }

    pub fn check_sequential(&self) -> Result<(), BrsError> {
        match self.rules.iter().find(|r| seq_shape(r).is_none()) {
            Some(r) => Err(BrsError::NotSequential(r.name.clone())),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Brs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |it: &mut dyn Iterator<Item = String>| it.collect::<Vec<_>>().join(", ");
        writeln!(f, "brs {{")?;
        writeln!(f, "  vars: {};", join(&mut self.vars.iter().map(|v| v.to_string())))?;
        writeln!(f, "  alphabet: {};", join(&mut self.alphabet.iter().map(|a| a.to_string())))?;
        for r in &self.rules {
            writeln!(f, "  {r}")?;
        }
        writeln!(f, "}}")
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RuleKind {
    Par,
    SeqPush,
    SeqPop,
    SeqRename,
    SeqErase,
    Other,
}

/// Classification with PAR taking precedence: renames and erasures contain
/// no sequential composition and are reported as `Par`.
pub fn classify_rule(r: &Rule) -> RuleKind {
    if r.lhs.is_parallel() && r.rhs.is_parallel() {
        return RuleKind::Par;
    }
    seq_shape(r).unwrap_or(RuleKind::Other)
}

/// The SEQ shape of a rule, if it has one.
pub fn seq_shape(r: &Rule) -> Option<RuleKind> {
    use ProcessTerm::*;
    match (&r.lhs, &r.rhs) {
        (Atom(_), Seq(_, z)) if matches!(**z, Atom(_)) => Some(RuleKind::SeqPush),
        (Seq(_, y), Atom(_)) if matches!(**y, Atom(_)) => Some(RuleKind::SeqPop),
        (Atom(_), Atom(_)) => Some(RuleKind::SeqRename),
        (Atom(_), Epsilon) => Some(RuleKind::SeqErase),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Move {
    SeqTail,
    ParFactor(usize),
    /// Several factors of a parallel node, matched by a parallel lhs.
    ParSubset(Vec<usize>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position(pub Vec<Move>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    /// Number of sequential nestings entered.
    pub fn level(&self) -> usize {
        self.0.iter().filter(|m| matches!(m, Move::SeqTail)).count()
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match m {
                Move::SeqTail => f.write_str("SeqTail")?,
                Move::ParFactor(k) => write!(f, "Par({k})")?,
                Move::ParSubset(ks) => {
                    let ks: Vec<_> = ks.iter().map(|k| k.to_string()).collect();
                    write!(f, "Par{{{}}}", ks.join(","))?
                }
            }
        }
        f.write_str("]")
    }
}

impl Serialize for Position {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub rule: RuleId,
    pub position: Position,
    pub result: ProcessTerm,
}

fn without(fs: &[ProcessTerm], skip: &[usize]) -> Vec<ProcessTerm> {
    fs.iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .map(|(_, f)| f.clone())
        .collect()
}

/// All (position, result) pairs where `lhs` rewrites inside `t`.
fn matches(t: &ProcessTerm, lhs: &ProcessTerm, rhs: &ProcessTerm, out: &mut Vec<(Vec<Move>, ProcessTerm)>) {
    if t == lhs {
        out.push((Vec::new(), rhs.clone()));
    }
    match t {
        ProcessTerm::Seq(x, s) => {
            let mut inner = Vec::new();
            matches(s, lhs, rhs, &mut inner);
            for (mut p, r) in inner {
                p.insert(0, Move::SeqTail);
                out.push((p, ProcessTerm::seq(x.clone(), r)));
            }
        }
        ProcessTerm::Par(fs) => {
            if let ProcessTerm::Par(ls) = lhs {
                if ls.len() < fs.len() {
                    if let Some(idx) = pick_subset(fs, ls) {
                        let mut rest = without(fs, &idx);
                        rest.push(rhs.clone());
                        out.push((vec![Move::ParSubset(idx)], ProcessTerm::par(rest)));
                    }
                }
            }
            for (i, f) in fs.iter().enumerate() {
                if i > 0 && fs[i - 1] == *f {
                    continue;
                }
                let mut inner = Vec::new();
                matches(f, lhs, rhs, &mut inner);
                for (mut p, r) in inner {
                    p.insert(0, Move::ParFactor(i));
                    let mut rest = without(fs, &[i]);
                    rest.push(r);
                    out.push((p, ProcessTerm::par(rest)));
                }
            }
        }
        _ => {}
    }
}

/// First-occurrence indices of `want` (sorted) as a sub-multiset of `fs`.
fn pick_subset(fs: &[ProcessTerm], want: &[ProcessTerm]) -> Option<Vec<usize>> {
    let mut idx = Vec::with_capacity(want.len());
    let mut j = 0;
    for w in want {
        while j < fs.len() && fs[j] < *w {
            j += 1;
        }
        if j < fs.len() && fs[j] == *w {
            idx.push(j);
            j += 1;
        } else {
            return None;
        }
    }
    Some(idx)
}

/// The one-step derivation relation, in rule order then position order,
/// with duplicate (rule, result) pairs removed.
pub fn successors(t: &ProcessTerm, b: &Brs) -> Vec<Step> {
    let mut out = Vec::new();
    for (i, r) in b.rules.iter().enumerate() {
        let mut found = Vec::new();
        matches(t, &r.lhs, &r.rhs, &mut found);
        found.sort();
        let mut seen = BTreeSet::new();
        for (p, res) in found {
            if seen.insert(res.clone()) {
                out.push(Step { rule: RuleId(i), position: Position(p), result: res });
            }
        }
    }
    out
}

/// Applies a single rule at an explicit position, independently of
/// [`successors`].
pub fn apply_at(t: &ProcessTerm, r: &Rule, pos: &Position) -> Option<ProcessTerm> {
    fn go(t: &ProcessTerm, r: &Rule, moves: &[Move]) -> Option<ProcessTerm> {
        match moves.split_first() {
            None => (*t == r.lhs).then(|| r.rhs.clone()),
            Some((Move::SeqTail, rest)) => match t {
                ProcessTerm::Seq(x, s) => go(s, r, rest).map(|s2| ProcessTerm::seq(x.clone(), s2)),
                _ => None,
            },
            Some((Move::ParFactor(i), rest)) => match t {
                ProcessTerm::Par(fs) if *i < fs.len() => {
                    let f2 = go(&fs[*i], r, rest)?;
                    let mut others = without(fs, &[*i]);
                    others.push(f2);
                    Some(ProcessTerm::par(others))
                }
                _ => None,
            },
            Some((Move::ParSubset(idx), rest)) => {
                let ProcessTerm::Par(fs) = t else { return None };
                let distinct: BTreeSet<_> = idx.iter().collect();
                if !rest.is_empty()
                    || distinct.len() != idx.len()
                    || idx.len() >= fs.len()
                    || idx.iter().any(|&i| i >= fs.len())
                {
                    return None;
                }
                let chosen = ProcessTerm::par(idx.iter().map(|&i| fs[i].clone()));
                if chosen != r.lhs {
                    return None;
                }
                let mut others = without(fs, idx);
                others.push(r.rhs.clone());
                Some(ProcessTerm::par(others))
            }
        }
    }
    go(t, r, &pos.0)
}

pub fn enabled(t: &ProcessTerm, a: &Action, b: &Brs) -> bool {
    b.rules.iter().any(|r| {
        if r.label != *a {
            return false;
        }
        let mut found = Vec::new();
        matches(t, &r.lhs, &r.rhs, &mut found);
        !found.is_empty()
    })
}

/// Propositional formula over atoms `EN(a)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateFormula {
    En(Action),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
}

pub fn eval_state_formula(t: &ProcessTerm, f: &StateFormula, b: &Brs) -> Result<bool, BrsError> {
    Ok(match f {
        StateFormula::En(a) => {
            if !b.alphabet.contains(a) {
                return Err(BrsError::UnknownAction(a.to_string()));
            }
            enabled(t, a, b)
        }
        StateFormula::Not(g) => !eval_state_formula(t, g, b)?,
        StateFormula::And(g, h) => eval_state_formula(t, g, b)? & eval_state_formula(t, h, b)?,
        StateFormula::Or(g, h) => eval_state_formula(t, g, b)? | eval_state_formula(t, h, b)?,
    })
}

/// Copy of `b` with accepting rules labeled `f`, the others `nf`, and
/// `extra` appended unchanged.
pub fn relabel_fnf(b: &Brs, extra: &[Rule]) -> Brs {
    let f = Action::new("f").unwrap();
    let nf = Action::new("nf").unwrap();
    let mut alphabet: BTreeSet<Action> = [f.clone(), nf.clone()].into();
    let mut vars = b.vars.clone();
    let mut rules: Vec<Rule> = b
        .rules
        .iter()
        .map(|r| Rule { label: if r.accepting { f.clone() } else { nf.clone() }, ..r.clone() })
        .collect();
    for r in extra {
        alphabet.insert(r.label.clone());
        r.lhs.variables(&mut vars);
        r.rhs.variables(&mut vars);
        rules.push(r.clone());
    }
    Brs { vars, alphabet, rules }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Derivation {
    pub start: ProcessTerm,
    pub steps: Vec<Step>,
}

impl Derivation {
    pub fn null(start: ProcessTerm) -> Self {
        Derivation { start, steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Term before step `i`; `term(len())` is the final term.
    pub fn term(&self, i: usize) -> &ProcessTerm {
        if i == 0 {
            &self.start
        } else {
            &self.steps[i - 1].result
        }
    }

    pub fn end(&self) -> &ProcessTerm {
        self.term(self.steps.len())
    }

    pub fn rules(&self) -> Vec<RuleId> {
        self.steps.iter().map(|s| s.rule).collect()
    }

    pub fn accepting_count(&self, b: &Brs) -> usize {
        self.steps.iter().filter(|s| b.rule(s.rule).accepting).count()
    }

    pub fn is_valid(&self, b: &Brs) -> bool {
        self.steps.iter().enumerate().all(|(i, s)| {
            s.rule.0 < b.rules.len()
                && apply_at(self.term(i), b.rule(s.rule), &s.position).as_ref() == Some(&s.result)
        })
    }

    /// Builds a derivation from (rule, result) pairs, recovering positions.
    pub fn from_rule_terms(
        b: &Brs,
        start: ProcessTerm,
        steps: &[(RuleId, ProcessTerm)],
    ) -> Result<Self, BrsError> {
        let mut d = Derivation::null(start);
        for (i, (rule, result)) in steps.iter().enumerate() {
            let step = successors(d.end(), b)
                .into_iter()
                .find(|s| s.rule == *rule && s.result == *result)
                .ok_or(BrsError::InvalidStep(i))?;
            d.steps.push(step);
        }
        Ok(d)
    }

    /// Builds a derivation from a rule sequence, taking the first
    /// successor of each rule.
    pub fn from_rules(b: &Brs, start: ProcessTerm, rules: &[RuleId]) -> Result<Self, BrsError> {
        let mut d = Derivation::null(start);
        for (i, rule) in rules.iter().enumerate() {
            let step = successors(d.end(), b)
                .into_iter()
                .find(|s| s.rule == *rule)
                .ok_or(BrsError::InvalidStep(i))?;
            d.steps.push(step);
        }
        Ok(d)
    }

    pub fn concat(mut self, other: Derivation) -> Derivation {
        debug_assert_eq!(self.end(), &other.start);
        self.steps.extend(other.steps);
        self
    }
}

pub fn application_level(d: &Derivation, i: usize) -> Result<usize, BrsError> {
    d.steps.get(i).map(|s| s.position.level()).ok_or(BrsError::IndexOutOfRange(i))
}

/// The subderivation from `s`, where the term before step `i` has a
/// top-level factor `X.(s)` at `anchor` (`[]` or `[Par(k)]`).
pub fn subderivation(d: &Derivation, i: usize, anchor: &Position) -> Result<Derivation, BrsError> {
    if i > d.len() {
        return Err(BrsError::IndexOutOfRange(i));
    }
    let bad = || BrsError::InvalidAnchor(anchor.to_string());
    let term = d.term(i);
    let mut slot: Option<usize> = match anchor.0.as_slice() {
        [] => None,
        [Move::ParFactor(k)] => Some(*k),
        _ => return Err(bad()),
    };
    let node = match (slot, term) {
        (None, t) => t,
        (Some(k), ProcessTerm::Par(fs)) => fs.get(k).ok_or_else(bad)?,
        _ => return Err(bad()),
    };
    let ProcessTerm::Seq(x, s) = node else { return Err(bad()) };
    let x = x.clone();
    let mut cur = ProcessTerm::seq(x.clone(), (**s).clone());
    let mut sub = Derivation::null((**s).clone());

    for (n, step) in d.steps.iter().enumerate().skip(i) {
        let moves = step.position.0.as_slice();
        let inner: Option<&[Move]> = match (slot, moves) {
            (None, [Move::SeqTail, rest @ ..]) => Some(rest),
            (None, _) => return Ok(sub),
            (Some(k), [Move::ParFactor(j), Move::SeqTail, rest @ ..]) if *j == k => Some(rest),
            (Some(k), [Move::ParFactor(j), ..]) if *j == k => return Ok(sub),
            (Some(k), [Move::ParSubset(js)]) if js.contains(&k) => return Ok(sub),
            (Some(_), []) => return Ok(sub),
            (Some(_), _) => None,
        };
        if let Some(rest) = inner {
            let others: Vec<ProcessTerm> = match slot {
                None => Vec::new(),
                Some(k) => without(d.term(n).factors(), &[k]),
            };
            let f2 = multiset_minus(step.result.factors(), &others).ok_or_else(bad)?;
            let s2 = match f2 {
                ProcessTerm::Atom(ref y) if *y == x => ProcessTerm::Epsilon,
                ProcessTerm::Seq(ref y, ref t) if *y == x => (**t).clone(),
                _ => return Err(bad()),
            };
            sub.steps.push(Step { rule: step.rule, position: Position(rest.to_vec()), result: s2.clone() });
            if s2.is_epsilon() {
                return Ok(sub);
            }
            cur = ProcessTerm::seq(x.clone(), s2);
        }
        // relocate the tracked factor in the new term
        slot = match &step.result {
            ProcessTerm::Par(fs) => Some(fs.iter().position(|f| *f == cur).ok_or_else(bad)?),
            t if *t == cur => None,
            _ => return Err(bad()),
        };
    }
    Ok(sub)
}

/// The single element of `all` left after removing `part`.
fn multiset_minus(all: &[ProcessTerm], part: &[ProcessTerm]) -> Option<ProcessTerm> {
    let mut rest: Vec<&ProcessTerm> = all.iter().collect();
    for p in part {
        let k = rest.iter().position(|f| *f == p)?;
        rest.remove(k);
    }
    (rest.len() == 1).then(|| rest[0].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::occurrences;
    use proptest::prelude::*;

    fn t(s: &str) -> ProcessTerm {
        s.parse().unwrap()
    }

    fn brs(s: &str) -> Brs {
        s.parse().unwrap()
    }

    fn act(s: &str) -> Action {
        Action::new(s).unwrap()
    }

    fn rule(lhs: &str, rhs: &str, acc: bool) -> Rule {
        Rule::new("r", t(lhs), act("a"), t(rhs), acc)
    }

    #[test]
    fn classification() {
        assert_eq!(classify_rule(&rule("X || Y", "Z || W", false)), RuleKind::Par);
        assert_eq!(classify_rule(&rule("X", "Y.(Z)", false)), RuleKind::SeqPush);
        assert_eq!(classify_rule(&rule("X.(Y)", "Z", false)), RuleKind::SeqPop);
        assert_eq!(classify_rule(&rule("X.(Y || Z)", "W", false)), RuleKind::Other);
        assert_eq!(classify_rule(&rule("X", "Y.(Z.(W))", false)), RuleKind::Other);
        // renames and erasures are both PAR and SEQ; PAR wins
        assert_eq!(classify_rule(&rule("X", "Y", false)), RuleKind::Par);
        assert_eq!(seq_shape(&rule("X", "Y", false)), Some(RuleKind::SeqRename));
        assert_eq!(seq_shape(&rule("X", "eps", false)), Some(RuleKind::SeqErase));
    }

    #[test]
    fn system_classes() {
        let mixed = brs("brs { vars: X, Y, Z, W, V; alphabet: a, b; rule r1: X -a-> Y.(Z); rule r2: W || V -b-> W; }");
        assert!(mixed.is_normal_form() && !mixed.is_parallel() && !mixed.is_sequential());
        assert!(brs("brs { vars: X, Y; alphabet: a; rule r: X || Y -a-> X; }").is_parallel());
        assert!(brs("brs { vars: X, Y, Z; alphabet: a; rule r: X.(Y) -a-> Z; }").is_sequential());
        let other = brs("brs { vars: X, Y, W; alphabet: a; rule r: X.(Y || W) -a-> W; }");
        assert!(!other.is_normal_form());
        assert!(matches!(other.check_normal_form(), Err(BrsError::NotNormalForm(_))));
    }

    #[test]
    fn construction_errors() {
        let vars: BTreeSet<Variable> = [Variable::new("X").unwrap()].into();
        let alpha: BTreeSet<Action> = [act("a")].into();
        let undeclared = Brs::new(vars.clone(), alpha.clone(), vec![rule("X", "Y", false)]);
        assert!(matches!(undeclared, Err(BrsError::UndeclaredVariable { .. })));
        let dup = Brs::new(vars.clone(), alpha.clone(), vec![rule("X", "X", false), rule("X", "eps", false)]);
        assert!(matches!(dup, Err(BrsError::DuplicateName(_))));
        let empty = Brs::new(vars, alpha, vec![rule("eps", "X", false)]);
        assert!(matches!(empty, Err(BrsError::EmptyLhs(_))));
    }

    #[test]
    fn successor_examples() {
        let b = brs("brs { vars: X, Y; alphabet: a; rule r1: X -a-> Y; }");
        assert_eq!(successors(&t("X"), &b), vec![Step { rule: RuleId(0), position: Position::root(), result: t("Y") }]);

        let b = brs("brs { vars: X, Y; alphabet: b; rule r2: Y -b-> eps; }");
        let s = successors(&t("X.(Y || Y)"), &b);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].position, Position(vec![Move::SeqTail, Move::ParFactor(0)]));
        assert_eq!(s[0].result, t("X.(Y)"));

        let b = brs("brs { vars: X, Y, Z; alphabet: c; rule r3: X || Y -c-> Z; }");
        let s = successors(&t("X || Y"), &b);
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].position.clone(), s[0].result.clone()), (Position::root(), t("Z")));
        assert_eq!(successors(&t("X || Y || Y"), &b)[0].result, t("Y || Z"));
    }

    #[test]
    fn enabled_examples() {
        let b = brs("brs { vars: X, Y, Z, W; alphabet: a, b; rule r1: X -a-> Y; rule r2: W -b-> eps; }");
        assert!(enabled(&t("X"), &act("a"), &b));
        assert!(!enabled(&ProcessTerm::Epsilon, &act("a"), &b));
        assert!(!enabled(&ProcessTerm::Epsilon, &act("b"), &b));
        let frozen = brs("brs { vars: X, Y, Z; alphabet: a; rule r1: X -a-> Z; }");
        assert!(!enabled(&t("X.(Y)"), &act("a"), &frozen));
        assert!(successors(&t("X.(Y)"), &frozen).is_empty());
    }

    #[test]
    fn state_formulas() {
        let b = brs("brs { vars: X, Y, W; alphabet: a, b; rule r1: X -a-> Y; rule r2: W -b-> eps; }");
        let en = |s: &str| StateFormula::En(act(s));
        let not = |f| StateFormula::Not(Box::new(f));
        let f = StateFormula::And(Box::new(en("a")), Box::new(not(en("b"))));
        assert!(eval_state_formula(&t("X"), &f, &b).unwrap());
        assert!(eval_state_formula(&ProcessTerm::Epsilon, &not(en("a")), &b).unwrap());
        let g = StateFormula::Or(Box::new(en("a")), Box::new(en("b")));
        assert!(eval_state_formula(&t("X || W"), &g, &b).unwrap());
        assert!(eval_state_formula(&t("X"), &en("zz"), &b).is_err());
    }

    #[test]
    fn relabeling() {
        let b = brs("brs { vars: X, Y; alphabet: a; accepting rule r1: X -a-> Y; rule r2: Y -a-> X; }");
        let extra = Rule::new("ry", t("Y"), act("Y"), t("Y"), false);
        let r = relabel_fnf(&b, std::slice::from_ref(&extra));
        assert_eq!(r.rules()[0].label, act("f"));
        assert!(r.rules()[0].accepting);
        assert_eq!(r.rules()[1].label, act("nf"));
        assert_eq!(r.rules()[2], extra);
        assert_eq!(r.alphabet().len(), 3);
    }

    fn step(moves: Vec<Move>) -> Step {
        Step { rule: RuleId(0), position: Position(moves), result: ProcessTerm::Epsilon }
    }

    #[test]
    fn levels() {
        let d = Derivation {
            start: t("X"),
            steps: vec![
                step(vec![]),
                step(vec![Move::SeqTail]),
                step(vec![Move::ParFactor(1), Move::SeqTail, Move::SeqTail]),
            ],
        };
        assert_eq!(application_level(&d, 0).unwrap(), 0);
        assert_eq!(application_level(&d, 1).unwrap(), 1);
        assert_eq!(application_level(&d, 2).unwrap(), 2);
        assert!(application_level(&d, 3).is_err());
    }

    #[test]
    fn subderivations() {
        let b = brs(
            "brs { vars: X, X1, Y, Z, Z1, W; alphabet: a; \
             rule r1: X -a-> X1; rule r2: Z -a-> Z1; rule r3: Y.(Z) -a-> W; }",
        );
        let anchor = Position(vec![Move::ParFactor(1)]);
        let d = Derivation::from_rules(&b, t("X || Y.(Z)"), &[RuleId(0)]).unwrap();
        let sub = subderivation(&d, 0, &anchor).unwrap();
        assert_eq!(sub, Derivation::null(t("Z")));

        let d = Derivation::from_rules(&b, t("X || Y.(Z)"), &[RuleId(1)]).unwrap();
        let sub = subderivation(&d, 0, &anchor).unwrap();
        assert_eq!(sub.rules(), vec![RuleId(1)]);
        assert_eq!(sub.end(), &t("Z1"));
        assert_eq!(application_level(&sub, 0).unwrap(), application_level(&d, 0).unwrap() - 1);

        let d = Derivation::from_rules(&b, t("X || Y.(Z)"), &[RuleId(2)]).unwrap();
        assert!(subderivation(&d, 0, &anchor).unwrap().is_empty());

        assert!(subderivation(&d, 0, &Position(vec![Move::ParFactor(0)])).is_err());
    }

    fn arb_term() -> impl Strategy<Value = ProcessTerm> {
        let leaf = prop_oneof![
            1 => Just(ProcessTerm::Epsilon),
            4 => prop::sample::select(vec!["X", "Y", "Z"]).prop_map(t),
        ];
        leaf.prop_recursive(3, 6, 3, |inner| {
            prop_oneof![
                (prop::sample::select(vec!["X", "Y"]), inner.clone())
                    .prop_map(|(x, s)| ProcessTerm::seq(Variable::new(x).unwrap(), s)),
                prop::collection::vec(inner, 2..4).prop_map(ProcessTerm::par),
            ]
        })
    }

    fn test_system() -> Brs {
        brs("brs { vars: X, Y, Z; alphabet: a, b; \
             rule r1: X -a-> Y.(Z); accepting rule r2: Y -b-> eps; rule r3: X || Y -a-> Z; \
             rule r4: Y.(Z) -b-> X; rule r5: Z -a-> X || X; rule r6: X -b-> X; }")
    }

    proptest! {
        #[test]
        fn successors_match_occurrences(s in arb_term()) {
            let b = test_system();
            let got = successors(&s, &b);
            prop_assert_eq!(&got, &successors(&s, &b));
            for st in &got {
                prop_assert_eq!(apply_at(&s, b.rule(st.rule), &st.position), Some(st.result.clone()));
            }
            for (id, r) in b.ids().zip(b.rules()) {
                let want: BTreeSet<ProcessTerm> = occurrences(&s)
                    .into_iter()
                    .filter(|(o, _)| *o == r.lhs)
                    .map(|(_, c)| c.fill(&r.rhs))
                    .collect();
                let have: BTreeSet<ProcessTerm> =
                    got.iter().filter(|x| x.rule == id).map(|x| x.result.clone()).collect();
                prop_assert_eq!(have, want, "rule {}", r.name);
            }
        }

        #[test]
        fn derivations_replay(s in arb_term(), picks in prop::collection::vec(0usize..8, 0..6)) {
            let b = test_system();
            let mut d = Derivation::null(s);
            for p in picks {
                let succ = successors(d.end(), &b);
                if succ.is_empty() {
                    break;
                }
                d.steps.push(succ[p % succ.len()].clone());
            }
            prop_assert!(d.is_valid(&b));
            let pairs: Vec<_> = d.steps.iter().map(|s| (s.rule, s.result.clone())).collect();
            let rebuilt = Derivation::from_rule_terms(&b, d.start.clone(), &pairs).unwrap();
            prop_assert_eq!(rebuilt.end(), d.end());
        }
    }
}

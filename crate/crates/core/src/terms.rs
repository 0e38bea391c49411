//! Process terms modulo associativity/commutativity of `||` and the
//! identity laws for `eps`.
//!
//! A [`ProcessTerm`] is always stored in canonical form: parallel
//! compositions are flattened and their factors sorted, `eps` never
//! appears under `||`, and `X.(eps)` is the atom `X`. Structural equality
//! of canonical terms therefore coincides with term equivalence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

pub const Z_ACC: &str = "Z_ACC";
pub const Z_NOT_ACC: &str = "Z_NOT_ACC";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("`{0}` is not a valid identifier")]
    InvalidIdent(String),
    #[error("`{0}` is a reserved name")]
    Reserved(String),
    #[error("`{0}` is not a subterm of `{1}`")]
    NotSubterm(String, String),
    #[error("`{0}` is not a non-empty sequential term")]
    NotSequential(String),
    #[error("interleaving {0} rules exceeds the bound of {1}")]
    BoundExceeded(usize, usize),
}

/// Identifier syntax shared by variables, actions and rule names.
pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() => chars.all(|c| c.is_alphanumeric() || c == '_'),
        _ => false,
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable(Arc<str>);

impl Variable {
    pub fn new(name: &str) -> Result<Self, TermError> {
        if !is_ident(name) {
            return Err(TermError::InvalidIdent(name.to_string()));
        }
        if name == Z_ACC || name == Z_NOT_ACC {
            return Err(TermError::Reserved(name.to_string()));
        }
        Ok(Variable(Arc::from(name)))
    }

    pub(crate) fn z_acc() -> Self {
        Variable(Arc::from(Z_ACC))
    }

    pub(crate) fn z_not_acc() -> Self {
        Variable(Arc::from(Z_NOT_ACC))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_reserved(&self) -> bool {
        &*self.0 == Z_ACC || &*self.0 == Z_NOT_ACC
    }
}

impl fmt::Debug for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Variable {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

pub const HASH: &str = "#";
pub const DOLLAR: &str = "$";
pub const ACC: &str = "@acc";
pub const NACC: &str = "@nacc";

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action(Arc<str>);

impl Action {
    pub fn new(name: &str) -> Result<Self, TermError> {
        if [HASH, DOLLAR, ACC, NACC].contains(&name) {
            return Err(TermError::Reserved(name.to_string()));
        }
        if !is_ident(name) {
            return Err(TermError::InvalidIdent(name.to_string()));
        }
        Ok(Action(Arc::from(name)))
    }

    pub(crate) fn reserved(name: &'static str) -> Self {
        debug_assert!([HASH, DOLLAR, ACC, NACC].contains(&name));
        Action(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_reserved(&self) -> bool {
        [HASH, DOLLAR, ACC, NACC].contains(&&*self.0)
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

/// Term syntax tree as written, before normalization.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RawTerm {
    Eps,
    Var(Variable),
    Seq(Variable, Box<RawTerm>),
    Par(Box<RawTerm>, Box<RawTerm>),
}

impl RawTerm {
    pub fn par(a: RawTerm, b: RawTerm) -> RawTerm {
        RawTerm::Par(Box::new(a), Box::new(b))
    }

    pub fn seq(x: Variable, t: RawTerm) -> RawTerm {
        RawTerm::Seq(x, Box::new(t))
    }

    /// Number of variable occurrences.
    pub fn leaves(&self) -> usize {
        match self {
            RawTerm::Eps => 0,
            RawTerm::Var(_) => 1,
            RawTerm::Seq(_, t) => 1 + t.leaves(),
            RawTerm::Par(a, b) => a.leaves() + b.leaves(),
        }
    }

    pub fn nodes(&self) -> usize {
        match self {
            RawTerm::Eps | RawTerm::Var(_) => 1,
            RawTerm::Seq(_, t) => 1 + t.nodes(),
            RawTerm::Par(a, b) => 1 + a.nodes() + b.nodes(),
        }
    }
}

impl fmt::Display for RawTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawTerm::Eps => f.write_str("eps"),
            RawTerm::Var(x) => write!(f, "{x}"),
            RawTerm::Seq(x, t) => write!(f, "{x}.({t})"),
            RawTerm::Par(a, b) => {
                write!(f, "{a} || ")?;
                match **b {
                    RawTerm::Par(..) => write!(f, "({b})"),
                    _ => write!(f, "{b}"),
                }
            }
        }
    }
}

/// Canonical process term.
///
/// The derived ordering (`Epsilon < Atom < Seq < Par`, then fields) is the
/// total order used to sort parallel factors.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProcessTerm {
    Epsilon,
    Atom(Variable),
    Seq(Variable, Box<ProcessTerm>),
    Par(Vec<ProcessTerm>),
}

impl ProcessTerm {
    pub fn atom(x: &Variable) -> Self {
        ProcessTerm::Atom(x.clone())
    }

    pub fn seq(head: Variable, tail: ProcessTerm) -> Self {
        match tail {
            ProcessTerm::Epsilon => ProcessTerm::Atom(head),
            t => ProcessTerm::Seq(head, Box::new(t)),
        }
    }

    pub fn par<I: IntoIterator<Item = ProcessTerm>>(items: I) -> Self {
        let mut factors = Vec::new();
        for t in items {
            match t {
                ProcessTerm::Epsilon => {}
                ProcessTerm::Par(fs) => factors.extend(fs),
                t => factors.push(t),
            }
        }
        factors.sort();
        match factors.len() {
            0 => ProcessTerm::Epsilon,
            1 => factors.pop().unwrap(),
            _ => ProcessTerm::Par(factors),
        }
    }

    pub fn par2(a: ProcessTerm, b: ProcessTerm) -> Self {
        ProcessTerm::par([a, b])
    }

    pub fn is_epsilon(&self) -> bool {
        matches!(self, ProcessTerm::Epsilon)
    }

    /// Parallel factors; `eps` has none and a non-parallel term is its own
    /// single factor.
    pub fn factors(&self) -> &[ProcessTerm] {
        match self {
            ProcessTerm::Epsilon => &[],
            ProcessTerm::Par(fs) => fs,
            t => std::slice::from_ref(t),
        }
    }

    /// Member of `T_PAR`: no sequential composition.
    pub fn is_parallel(&self) -> bool {
        match self {
            ProcessTerm::Epsilon | ProcessTerm::Atom(_) => true,
            ProcessTerm::Seq(..) => false,
            ProcessTerm::Par(fs) => fs.iter().all(|f| f.is_parallel()),
        }
    }

    /// Member of `T_SEQ`: no parallel composition.
    pub fn is_sequential(&self) -> bool {
        match self {
            ProcessTerm::Epsilon | ProcessTerm::Atom(_) => true,
            ProcessTerm::Seq(_, t) => t.is_sequential(),
            ProcessTerm::Par(_) => false,
        }
    }

    pub fn contains_seq(&self) -> bool {
        !self.is_parallel()
    }

    pub fn leaves(&self) -> usize {
        match self {
            ProcessTerm::Epsilon => 0,
            ProcessTerm::Atom(_) => 1,
            ProcessTerm::Seq(_, t) => 1 + t.leaves(),
            ProcessTerm::Par(fs) => fs.iter().map(|f| f.leaves()).sum(),
        }
    }

    /// Nesting depth of sequential composition.
    pub fn seq_depth(&self) -> usize {
        match self {
            ProcessTerm::Epsilon | ProcessTerm::Atom(_) => 0,
            ProcessTerm::Seq(_, t) => 1 + t.seq_depth(),
            ProcessTerm::Par(fs) => fs.iter().map(|f| f.seq_depth()).max().unwrap_or(0),
        }
    }

    pub fn variables(&self, out: &mut BTreeSet<Variable>) {
        match self {
            ProcessTerm::Epsilon => {}
            ProcessTerm::Atom(x) => {
                out.insert(x.clone());
            }
            ProcessTerm::Seq(x, t) => {
                out.insert(x.clone());
                t.variables(out);
            }
            ProcessTerm::Par(fs) => fs.iter().for_each(|f| f.variables(out)),
        }
    }

    /// Syntax tree with right-nested parallel composition.
    pub fn to_raw(&self) -> RawTerm {
        match self {
            ProcessTerm::Epsilon => RawTerm::Eps,
            ProcessTerm::Atom(x) => RawTerm::Var(x.clone()),
            ProcessTerm::Seq(x, t) => RawTerm::seq(x.clone(), t.to_raw()),
            ProcessTerm::Par(fs) => {
                let mut it = fs.iter().rev();
                let mut acc = it.next().unwrap().to_raw();
                for f in it {
                    acc = RawTerm::par(f.to_raw(), acc);
                }
                acc
            }
        }
    }

    /// Multiset of factors as counts.
    pub fn factor_counts(&self) -> BTreeMap<&ProcessTerm, usize> {
        let mut m = BTreeMap::new();
        for f in self.factors() {
            *m.entry(f).or_insert(0) += 1;
        }
        m
    }
}

impl fmt::Display for ProcessTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessTerm::Epsilon => f.write_str("eps"),
            ProcessTerm::Atom(x) => write!(f, "{x}"),
            ProcessTerm::Seq(x, t) => write!(f, "{x}.({t})"),
            ProcessTerm::Par(fs) => {
                for (i, t) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" || ")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for ProcessTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for ProcessTerm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub fn normalize(raw: &RawTerm) -> ProcessTerm {
    match raw {
        RawTerm::Eps => ProcessTerm::Epsilon,
        RawTerm::Var(x) => ProcessTerm::Atom(x.clone()),
        RawTerm::Seq(x, t) => ProcessTerm::seq(x.clone(), normalize(t)),
        RawTerm::Par(a, b) => ProcessTerm::par2(normalize(a), normalize(b)),
    }
}

pub fn equivalent(t1: &RawTerm, t2: &RawTerm) -> bool {
    normalize(t1) == normalize(t2)
}

/// One-hole context. `Par(rest, c)` places `c` next to the factors in `rest`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Context {
    Hole,
    Seq(Variable, Box<Context>),
    Par(Vec<ProcessTerm>, Box<Context>),
}

impl Context {
    /// `rest || []`, collapsing to the bare hole when `rest` is empty.
    pub fn par_with<I: IntoIterator<Item = ProcessTerm>>(rest: I) -> Context {
        match ProcessTerm::par(rest) {
            ProcessTerm::Epsilon => Context::Hole,
            t => Context::Par(t.factors().to_vec(), Box::new(Context::Hole)),
        }
    }

    /// `X1.(X2.(... Xn.([])))`.
    pub fn seq_chain(heads: &[Variable]) -> Context {
        heads.iter().rev().fold(Context::Hole, |c, x| Context::Seq(x.clone(), Box::new(c)))
    }

    pub fn is_hole(&self) -> bool {
        matches!(self, Context::Hole)
    }

    pub fn fill(&self, t: &ProcessTerm) -> ProcessTerm {
        match self {
            Context::Hole => t.clone(),
            Context::Seq(x, c) => ProcessTerm::seq(x.clone(), c.fill(t)),
            Context::Par(rest, c) => {
                ProcessTerm::par(rest.iter().cloned().chain(std::iter::once(c.fill(t))))
            }
        }
    }

    /// The context `self[inner[]]`.
    pub fn then(&self, inner: &Context) -> Context {
        match self {
            Context::Hole => inner.clone(),
            Context::Seq(x, c) => Context::Seq(x.clone(), Box::new(c.then(inner))),
            Context::Par(rest, c) => match (&**c, inner) {
                (Context::Hole, Context::Par(rest2, c2)) => {
                    let mut all = rest.clone();
                    all.extend(rest2.iter().cloned());
                    all.sort();
                    Context::Par(all, c2.clone())
                }
                _ => Context::Par(rest.clone(), Box::new(c.then(inner))),
            },
        }
    }

    /// Sequential heads passed on the way to the hole.
    pub fn seq_depth(&self) -> usize {
        match self {
            Context::Hole => 0,
            Context::Seq(_, c) => 1 + c.seq_depth(),
            Context::Par(_, c) => c.seq_depth(),
        }
    }
}

impl Serialize for Context {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Context::Hole => f.write_str("[]"),
            Context::Seq(x, c) => write!(f, "{x}.({c})"),
            Context::Par(rest, c) => {
                for t in rest {
                    write!(f, "{t} || ")?;
                }
                write!(f, "{c}")
            }
        }
    }
}

/// All ways to split a factor list into a non-empty chosen part and the
/// remainder, one entry per distinct sub-multiset.
pub(crate) fn sub_multisets(factors: &[ProcessTerm]) -> Vec<(Vec<ProcessTerm>, Vec<ProcessTerm>)> {
    let mut groups: Vec<(&ProcessTerm, usize)> = Vec::new();
    for f in factors {
        match groups.last_mut() {
            Some((g, n)) if *g == f => *n += 1,
            _ => groups.push((f, 1)),
        }
    }
    let mut out = Vec::new();
    let mut counts = vec![0usize; groups.len()];
    loop {
        // advance the mixed-radix counter
        let mut i = 0;
        while i < groups.len() && counts[i] == groups[i].1 {
            counts[i] = 0;
            i += 1;
        }
        if i == groups.len() {
            break;
        }
        counts[i] += 1;
        let mut chosen = Vec::new();
        let mut rest = Vec::new();
        for (k, (g, n)) in groups.iter().enumerate() {
            chosen.extend(std::iter::repeat_n((*g).clone(), counts[k]));
            rest.extend(std::iter::repeat_n((*g).clone(), n - counts[k]));
        }
        out.push((chosen, rest));
    }
    out
}

/// Every occurrence of a subterm, as the subterm together with its context.
pub fn occurrences(t: &ProcessTerm) -> BTreeSet<(ProcessTerm, Context)> {
    let mut out = BTreeSet::new();
    out.insert((t.clone(), Context::Hole));
    match t {
        ProcessTerm::Epsilon | ProcessTerm::Atom(_) => {}
        ProcessTerm::Seq(x, s) => {
            for (st, c) in occurrences(s) {
                out.insert((st, Context::Seq(x.clone(), Box::new(c))));
            }
        }
        ProcessTerm::Par(fs) => {
            for (chosen, rest) in sub_multisets(fs) {
                if rest.is_empty() {
                    continue;
                }
                let part = ProcessTerm::par(chosen.clone());
                if let ProcessTerm::Seq(..) = part {
                    for (st, c) in occurrences(&part) {
                        if !c.is_hole() {
                            out.insert((st, Context::Par(rest.clone(), Box::new(c))));
                        }
                    }
                }
                out.insert((part, Context::Par(rest, Box::new(Context::Hole))));
            }
        }
    }
    out
}

pub fn subterms(t: &ProcessTerm) -> BTreeSet<ProcessTerm> {
    occurrences(t).into_iter().map(|(st, _)| st).collect()
}

/// Whether `small` occurs as a subterm of `big`.
pub fn embeds(small: &ProcessTerm, big: &ProcessTerm) -> bool {
    if small == big {
        return true;
    }
    match big {
        ProcessTerm::Epsilon | ProcessTerm::Atom(_) => false,
        ProcessTerm::Seq(_, s) => embeds(small, s),
        ProcessTerm::Par(fs) => {
            let want = small.factor_counts();
            let have = big.factor_counts();
            if !small.is_epsilon() && want.iter().all(|(f, n)| have.get(f).is_some_and(|m| m >= n)) {
                return true;
            }
            fs.iter().any(|f| matches!(f, ProcessTerm::Seq(..)) && embeds(small, f))
        }
    }
}

pub fn substitute(
    t: &ProcessTerm,
    st: &ProcessTerm,
    t2: &ProcessTerm,
) -> Result<BTreeSet<ProcessTerm>, TermError> {
    let out: BTreeSet<_> = occurrences(t)
        .into_iter()
        .filter(|(s, _)| s == st)
        .map(|(_, c)| c.fill(t2))
        .collect();
    if out.is_empty() {
        return Err(TermError::NotSubterm(st.to_string(), t.to_string()));
    }
    Ok(out)
}

pub fn seq_projections(t: &ProcessTerm) -> BTreeSet<ProcessTerm> {
    match t {
        ProcessTerm::Epsilon => BTreeSet::new(),
        ProcessTerm::Atom(_) => BTreeSet::from([t.clone()]),
        ProcessTerm::Seq(x, s) => seq_projections(s)
            .into_iter()
            .map(|p| ProcessTerm::seq(x.clone(), p))
            .collect(),
        ProcessTerm::Par(fs) => fs.iter().flat_map(seq_projections).collect(),
    }
}

pub fn interleavings<R: Clone + Ord>(
    s1: &[R],
    s2: &[R],
    bound: usize,
) -> Result<BTreeSet<Vec<R>>, TermError> {
    if s1.len() + s2.len() > bound {
        return Err(TermError::BoundExceeded(s1.len() + s2.len(), bound));
    }
    fn go<R: Clone + Ord>(a: &[R], b: &[R], acc: &mut Vec<R>, out: &mut BTreeSet<Vec<R>>) {
        if a.is_empty() || b.is_empty() {
            let mut v = acc.clone();
            v.extend_from_slice(a);
            v.extend_from_slice(b);
            out.insert(v);
            return;
        }
        acc.push(a[0].clone());
        go(&a[1..], b, acc, out);
        acc.pop();
        acc.push(b[0].clone());
        go(a, &b[1..], acc, out);
        acc.pop();
    }
    let mut out = BTreeSet::new();
    go(s1, s2, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Heads and innermost variable of a non-empty sequential term.
pub fn seq_spine(t: &ProcessTerm) -> Result<(Vec<Variable>, Variable), TermError> {
    let mut heads = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            ProcessTerm::Atom(y) => return Ok((heads, y.clone())),
            ProcessTerm::Seq(x, s) => {
                heads.push(x.clone());
                cur = s;
            }
            _ => return Err(TermError::NotSequential(t.to_string())),
        }
    }
}

pub fn last(t: &ProcessTerm) -> Result<Variable, TermError> {
    seq_spine(t).map(|(_, y)| y)
}

/// `t∘t2`: the innermost variable of `t` replaced by `t2`.
pub fn compose(t: &ProcessTerm, t2: &ProcessTerm) -> Result<ProcessTerm, TermError> {
    let (heads, _) = seq_spine(t)?;
    seq_spine(t2)?;
    Ok(Context::seq_chain(&heads).fill(t2))
}

//! Independent oracles and generators shared by the integration tests.
//!
//! Nothing here calls the library operation it is used to check; the
//! library is only used for data types, parsing and canonical equality.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::RngExt;

use prsmc_core::brs::{successors, Brs, Rule, RuleId};
use prsmc_core::petri::{Marking, Net, NetTransition};
use prsmc_core::rdha::Rdha;
use prsmc_core::syntax::{parse_brs, parse_rdha};
use prsmc_core::terms::{Action, ProcessTerm, RawTerm, Variable};

// ---------------------------------------------------------------------------
// corpus

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("corpus")
}

fn files(ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    v.sort();
    v
}

pub fn brs_corpus() -> Vec<(String, Brs)> {
    files("brs")
        .into_iter()
        .map(|p| {
            let src = fs::read_to_string(&p).unwrap();
            let b = parse_brs(&src).unwrap_or_else(|e| panic!("{}:{e}", p.display()));
            (p.file_stem().unwrap().to_string_lossy().into_owned(), b)
        })
        .collect()
}

pub fn rdha_corpus() -> Vec<(String, Rdha)> {
    files("rdha")
        .into_iter()
        .map(|p| {
            let src = fs::read_to_string(&p).unwrap();
            let r = parse_rdha(&src).unwrap_or_else(|e| panic!("{}:{e}", p.display()));
            (p.file_stem().unwrap().to_string_lossy().into_owned(), r)
        })
        .collect()
}

pub fn var(name: &str) -> Variable {
    Variable::new(name).unwrap()
}

pub fn act(name: &str) -> Action {
    Action::new(name).unwrap()
}

// ---------------------------------------------------------------------------
// raw terms and the closure of the equivalence axioms

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Node {
    Eps,
    Var(u8),
    Seq(u8, u32),
    Par(u32, u32),
}

/// Every raw term over the given variables with at most `max_leaves` leaf
/// positions, where `eps`, a variable and a sequential head each count as
/// one position. Hash-consed: equal trees share an index.
pub struct RawUniverse {
    vars: Vec<Variable>,
    nodes: Vec<Node>,
    index: HashMap<Node, u32>,
    /// Terms grouped by leaf positions.
    by_size: Vec<Vec<u32>>,
}

impl RawUniverse {
    pub fn new(vars: &[&str], max_leaves: usize) -> Self {
        let mut u = RawUniverse {
            vars: vars.iter().map(|s| var(s)).collect(),
            nodes: Vec::new(),
            index: HashMap::new(),
            by_size: vec![Vec::new(); max_leaves + 1],
        };
        let nv = vars.len() as u8;
        let mut level1 = vec![u.intern(Node::Eps)];
        level1.extend((0..nv).map(|v| u.intern(Node::Var(v))));
        u.by_size[1] = level1;
        for n in 2..=max_leaves {
            let mut here = Vec::new();
            for v in 0..nv {
                for &t in &u.by_size[n - 1].clone() {
                    here.push(u.intern(Node::Seq(v, t)));
                }
            }
            for k in 1..n {
                for &a in &u.by_size[k].clone() {
                    for &b in &u.by_size[n - k].clone() {
                        here.push(u.intern(Node::Par(a, b)));
                    }
                }
            }
            u.by_size[n] = here;
        }
        u
    }

    fn intern(&mut self, n: Node) -> u32 {
        if let Some(&i) = self.index.get(&n) {
            return i;
        }
        let i = self.nodes.len() as u32;
        self.nodes.push(n);
        self.index.insert(n, i);
        i
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn raw(&self, i: u32) -> RawTerm {
        match self.nodes[i as usize] {
            Node::Eps => RawTerm::Eps,
            Node::Var(v) => RawTerm::Var(self.vars[v as usize].clone()),
            Node::Seq(v, t) => RawTerm::seq(self.vars[v as usize].clone(), self.raw(t)),
            Node::Par(a, b) => RawTerm::par(self.raw(a), self.raw(b)),
        }
    }

    fn get(&self, n: Node) -> u32 {
        *self.index.get(&n).expect("rewrites stay inside the universe")
    }

    /// One application of an axiom at the root, in the directions that do
    /// not add leaf positions.
    fn root_steps(&self, i: u32) -> Vec<u32> {
        let mut out = Vec::new();
        match self.nodes[i as usize] {
            Node::Par(a, b) => {
                out.push(self.get(Node::Par(b, a)));
                if let Node::Par(a1, a2) = self.nodes[a as usize] {
                    let inner = self.get(Node::Par(a2, b));
                    out.push(self.get(Node::Par(a1, inner)));
                }
                if self.nodes[b as usize] == Node::Eps {
                    out.push(a);
                }
            }
            Node::Seq(v, t) if self.nodes[t as usize] == Node::Eps => out.push(self.get(Node::Var(v))),
            _ => {}
        }
        out
    }

    /// One axiom application at any position.
    fn steps(&self, i: u32, memo: &mut HashMap<u32, Vec<u32>>) -> Vec<u32> {
        if let Some(v) = memo.get(&i) {
            return v.clone();
        }
        let mut out = self.root_steps(i);
        match self.nodes[i as usize] {
            Node::Seq(v, t) => {
                for t2 in self.steps(t, memo) {
                    out.push(self.get(Node::Seq(v, t2)));
                }
            }
            Node::Par(a, b) => {
                for a2 in self.steps(a, memo) {
                    out.push(self.get(Node::Par(a2, b)));
                }
                for b2 in self.steps(b, memo) {
                    out.push(self.get(Node::Par(a, b2)));
                }
            }
            _ => {}
        }
        memo.insert(i, out.clone());
        out
    }

    /// Connected components of the axiom steps (the equivalence closure
    /// restricted to the universe, which is closed under the steps).
    pub fn closure_classes(&self) -> Vec<u32> {
        let n = self.nodes.len();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(p: &mut [u32], mut x: u32) -> u32 {
            while p[x as usize] != x {
                p[x as usize] = p[p[x as usize] as usize];
                x = p[x as usize];
            }
            x
        }
        let mut memo = HashMap::new();
        for i in 0..n as u32 {
            for j in self.steps(i, &mut memo) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a as usize] = b;
                }
            }
        }
        (0..n as u32).map(|i| find(&mut parent, i)).collect()
    }
}

// ---------------------------------------------------------------------------
// canonical terms and brute-force versions of the term operations

/// Canonical terms without `eps` with at most `max_leaves` variable
/// occurrences, plus `eps` itself.
pub fn canonical_terms(vars: &[&str], max_leaves: usize) -> Vec<ProcessTerm> {
    let vs: Vec<Variable> = vars.iter().map(|s| var(s)).collect();
    let mut by: Vec<BTreeSet<ProcessTerm>> = vec![BTreeSet::new(); max_leaves + 1];
    by[1] = vs.iter().map(ProcessTerm::atom).collect();
    for n in 2..=max_leaves {
        let mut here = BTreeSet::new();
        for v in &vs {
            for t in &by[n - 1] {
                here.insert(ProcessTerm::seq(v.clone(), t.clone()));
            }
        }
        for k in 1..n {
            for a in &by[k] {
                for b in &by[n - k] {
                    here.insert(ProcessTerm::par2(a.clone(), b.clone()));
                }
            }
        }
        by[n] = here;
    }
    let mut out = vec![ProcessTerm::Epsilon];
    for s in by {
        out.extend(s);
    }
    out
}

/// All ways to write a parallel term as `t1 || t2` with both parts
/// non-empty, by choosing a subset of factor positions.
fn binary_splits(fs: &[ProcessTerm]) -> Vec<(ProcessTerm, ProcessTerm)> {
    let n = fs.len();
    let mut out = Vec::new();
    for mask in 1..(1u32 << n) - 1 {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (i, f) in fs.iter().enumerate() {
            if mask & (1 << i) != 0 { a.push(f.clone()) } else { b.push(f.clone()) }
        }
        out.push((ProcessTerm::par(a), ProcessTerm::par(b)));
    }
    out
}

#[derive(Default)]
pub struct BruteForce {
    sub: HashMap<ProcessTerm, BTreeSet<ProcessTerm>>,
}

impl BruteForce {
    pub fn subterms(&mut self, t: &ProcessTerm) -> BTreeSet<ProcessTerm> {
        if let Some(s) = self.sub.get(t) {
            return s.clone();
        }
        let mut out = BTreeSet::from([t.clone()]);
        match t {
            ProcessTerm::Epsilon | ProcessTerm::Atom(_) => {}
            ProcessTerm::Seq(_, s) => out.extend(self.subterms(s)),
            ProcessTerm::Par(fs) => {
                for (a, b) in binary_splits(fs) {
                    out.extend(self.subterms(&a));
                    out.extend(self.subterms(&b));
                }
            }
        }
        self.sub.insert(t.clone(), out.clone());
        out
    }

    pub fn substitute(&mut self, t: &ProcessTerm, st: &ProcessTerm, t2: &ProcessTerm) -> BTreeSet<ProcessTerm> {
        if t == st {
            return BTreeSet::from([t2.clone()]);
        }
        let mut out = BTreeSet::new();
        if !self.subterms(t).contains(st) {
            return out;
        }
        match t {
            ProcessTerm::Seq(x, s) => {
                for u in self.substitute(s, st, t2) {
                    out.insert(ProcessTerm::seq(x.clone(), u));
                }
            }
            ProcessTerm::Par(fs) => {
                for (a, b) in binary_splits(fs) {
                    if self.subterms(&a).contains(st) {
                        for u in self.substitute(&a, st, t2) {
                            out.insert(ProcessTerm::par2(u, b.clone()));
                        }
                    }
                }
            }
            _ => {}
        }
        out
    }
}

pub fn seq_of(t: &ProcessTerm) -> BTreeSet<ProcessTerm> {
    match t {
        ProcessTerm::Epsilon => BTreeSet::new(),
        ProcessTerm::Atom(_) => BTreeSet::from([t.clone()]),
        ProcessTerm::Seq(x, s) => seq_of(s).into_iter().map(|u| ProcessTerm::seq(x.clone(), u)).collect(),
        ProcessTerm::Par(fs) => {
            // SEQ(t1 || t2) = SEQ(t1) ∪ SEQ(t2) over a binary split
            let (a, b) = binary_splits(fs).swap_remove(0);
            seq_of(&a).union(&seq_of(&b)).cloned().collect()
        }
    }
}

pub fn interleaving<R: Clone + Ord>(s1: &[R], s2: &[R]) -> BTreeSet<Vec<R>> {
    if s1.is_empty() {
        return BTreeSet::from([s2.to_vec()]);
    }
    if s2.is_empty() {
        return BTreeSet::from([s1.to_vec()]);
    }
    let mut out = BTreeSet::new();
    for mut s in interleaving(&s1[1..], s2) {
        s.insert(0, s1[0].clone());
        out.insert(s);
    }
    for mut s in interleaving(s1, &s2[1..]) {
        s.insert(0, s2[0].clone());
        out.insert(s);
    }
    out
}

// ---------------------------------------------------------------------------
// random systems and replay

pub fn pick<'a, T>(rng: &mut StdRng, v: &'a [T]) -> &'a T {
    &v[rng.random_range(0..v.len())]
}

/// A random normal-form system over `X, Y, Z` with a mix of parallel,
/// push and pop rules.
pub fn random_normal_brs(rng: &mut StdRng, sequential_only: bool) -> Brs {
    let vs: Vec<Variable> = ["X", "Y", "Z"].iter().map(|s| var(s)).collect();
    let a = act("a");
    let atom = |v: &Variable| ProcessTerm::atom(v);
    let nrules = rng.random_range(1..=5);
    let mut rules = Vec::new();
    for i in 0..nrules {
        let x = pick(rng, &vs).clone();
        let y = pick(rng, &vs).clone();
        let z = pick(rng, &vs).clone();
        let kind = if sequential_only { rng.random_range(0..4) } else { rng.random_range(0..6) };
        let (lhs, rhs) = match kind {
            0 => (atom(&x), ProcessTerm::seq(y, atom(&z))),
            1 => (atom(&x), atom(&y)),
            2 => (atom(&x), ProcessTerm::Epsilon),
            3 => (ProcessTerm::seq(x, atom(&y)), atom(&z)),
            4 => (atom(&x), ProcessTerm::par2(atom(&y), atom(&z))),
            _ => (ProcessTerm::par2(atom(&x), atom(&y)), atom(&z)),
        };
        rules.push(Rule::new(&format!("r{}", i + 1), lhs, a.clone(), rhs, rng.random_bool(0.5)));
    }
    Brs::new(vs.into_iter().collect(), BTreeSet::from([a]), rules).unwrap()
}

pub fn random_canonical(rng: &mut StdRng, vars: &[Variable], leaves: usize) -> ProcessTerm {
    if leaves <= 1 {
        return ProcessTerm::atom(pick(rng, vars));
    }
    if rng.random_bool(0.5) {
        ProcessTerm::seq(pick(rng, vars).clone(), random_canonical(rng, vars, leaves - 1))
    } else {
        let k = rng.random_range(1..leaves);
        ProcessTerm::par2(random_canonical(rng, vars, k), random_canonical(rng, vars, leaves - k))
    }
}

/// Random walk of up to `len` steps; returns the rules used and the end.
pub fn random_walk(rng: &mut StdRng, b: &Brs, start: &ProcessTerm, len: usize) -> (Vec<RuleId>, ProcessTerm) {
    let mut cur = start.clone();
    let mut rules = Vec::new();
    for _ in 0..len {
        let succ = successors(&cur, b);
        if succ.is_empty() {
            break;
        }
        let s = pick(rng, &succ).clone();
        rules.push(s.rule);
        cur = s.result;
    }
    (rules, cur)
}

/// Terms reachable from `start` by firing exactly the rules of `sigma` in
/// order, at any position.
pub fn replay_set(b: &Brs, start: &ProcessTerm, sigma: &[RuleId]) -> BTreeSet<ProcessTerm> {
    let mut cur = BTreeSet::from([start.clone()]);
    for &r in sigma {
        cur = cur
            .iter()
            .flat_map(|t| successors(t, b))
            .filter(|s| s.rule == r)
            .map(|s| s.result)
            .collect();
    }
    cur
}

// ---------------------------------------------------------------------------
// nets

/// A random net whose transitions never add tokens, so every reachable
/// set is finite.
pub fn random_bounded_net(rng: &mut StdRng) -> (Net, Marking) {
    let places = rng.random_range(1..=4);
    let nt = rng.random_range(1..=5);
    let a = act("a");
    let vars: Vec<Variable> = (0..places).map(|i| var(&format!("P{i}"))).collect();
    let mut transitions = Vec::new();
    for i in 0..nt {
        let mut pre = vec![0u64; places];
        let k = rng.random_range(1..=2);
        for _ in 0..k {
            pre[rng.random_range(0..places)] += 1;
        }
        let mut post = vec![0u64; places];
        let out = rng.random_range(0..=k);
        for _ in 0..out {
            post[rng.random_range(0..places)] += 1;
        }
        transitions.push(NetTransition { pre, post, label: a.clone(), accepting: rng.random_bool(0.4), origin: RuleId(i) });
    }
    let init = Marking((0..places).map(|_| rng.random_range(0..=3)).collect());
    (Net { places: vars.iter().map(|v| v.to_string()).collect(), vars, transitions }, init)
}

fn fire(t: &NetTransition, m: &[u64]) -> Option<Vec<u64>> {
    if m.iter().zip(&t.pre).any(|(a, b)| a < b) {
        return None;
    }
    Some(m.iter().zip(&t.pre).zip(&t.post).map(|((a, p), q)| a - p + q).collect())
}

/// Forward enumeration of reachable `(marking, accepting seen)` states,
/// optionally without accepting transitions.
pub fn enumerate(net: &Net, init: &Marking, allow_accepting: bool) -> HashSet<(Vec<u64>, bool)> {
    let start = (init.0.clone(), false);
    let mut seen = HashSet::from([start.clone()]);
    let mut q = VecDeque::from([start]);
    while let Some((m, flag)) = q.pop_front() {
        for t in &net.transitions {
            if t.accepting && !allow_accepting {
                continue;
            }
            if let Some(m2) = fire(t, &m) {
                let s = (m2, flag || t.accepting);
                if seen.insert(s.clone()) {
                    q.push_back(s);
                }
            }
        }
    }
    seen
}

/// Plain forward enumeration of markings of an arbitrary net from `init`,
/// giving up after `limit` markings.
pub fn enumerate_markings(net: &Net, init: &Marking, limit: usize) -> Option<BTreeSet<Vec<u64>>> {
    let mut seen = BTreeSet::from([init.0.clone()]);
    let mut q = VecDeque::from([init.0.clone()]);
    while let Some(m) = q.pop_front() {
        for t in &net.transitions {
            if let Some(m2) = fire(t, &m) {
                if seen.insert(m2.clone()) {
                    if seen.len() > limit {
                        return None;
                    }
                    q.push_back(m2);
                }
            }
        }
    }
    Some(seen)
}

pub fn covers(m: &[u64], target: &[u64]) -> bool {
    m.iter().zip(target).all(|(a, b)| a >= b)
}

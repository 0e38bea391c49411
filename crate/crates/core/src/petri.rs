//! Labelled Petri nets for parallel systems: coverability, exact
//! reachability, Karp-Miller analysis and infinite runs.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use petgraph::algo::kosaraju_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::brs::{Brs, BrsError, RuleId};
use crate::decision::Decision;
use crate::lp::{feasible, Cmp, Constraint};
use crate::terms::{Action, ProcessTerm, Variable};

pub const DEFAULT_BUDGET: usize = 200_000;
pub const KM_BUDGET: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetTransition {
    pub pre: Vec<u64>,
    pub post: Vec<u64>,
    pub label: Action,
    pub accepting: bool,
    pub origin: RuleId,
}

/// Places `0..vars.len()` stand for the variables of the source system;
/// any further places are bookkeeping (flag places).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Net {
    pub places: Vec<String>,
    pub vars: Vec<Variable>,
    pub transitions: Vec<NetTransition>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Marking(pub Vec<u64>);

impl Marking {
    pub fn zero(n: usize) -> Self {
        Marking(vec![0; n])
    }

    pub fn unit(n: usize, p: usize) -> Self {
        let mut m = Marking::zero(n);
        m.0[p] = 1;
        m
    }

    pub fn covers(&self, other: &Marking) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &Marking) -> Marking {
        Marking(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Count {
    N(u64),
    Omega,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct OmegaMarking(pub Vec<Count>);

impl OmegaMarking {
    pub fn from_marking(m: &Marking) -> Self {
        OmegaMarking(m.0.iter().map(|&k| Count::N(k)).collect())
    }

    pub fn covers(&self, other: &OmegaMarking) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    pub fn has_omega(&self) -> bool {
        self.0.contains(&Count::Omega)
    }

    pub fn to_marking(&self) -> Option<Marking> {
        self.0
            .iter()
            .map(|c| match c {
                Count::N(k) => Some(*k),
                Count::Omega => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Marking)
    }
}

impl fmt::Display for OmegaMarking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|c| match c {
                Count::N(k) => k.to_string(),
                Count::Omega => "w".to_string(),
            })
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

impl Net {
    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn place_of(&self, x: &Variable) -> Option<usize> {
        self.vars.iter().position(|v| v == x)
    }

    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        m.0.iter().zip(&self.transitions[t].pre).all(|(a, b)| a >= b)
    }

    pub fn fire(&self, m: &Marking, t: usize) -> Option<Marking> {
        if !self.is_enabled(m, t) {
            return None;
        }
        let tr = &self.transitions[t];
        Some(Marking(m.0.iter().enumerate().map(|(p, &k)| k - tr.pre[p] + tr.post[p]).collect()))
    }

    pub fn fire_all(&self, m: &Marking, seq: &[usize]) -> Option<Marking> {
        seq.iter().try_fold(m.clone(), |m, &t| self.fire(&m, t))
    }

    /// Enabled transitions with their resulting markings, in index order.
    pub fn successors(&self, m: &Marking) -> Vec<(usize, Marking)> {
        (0..self.transitions.len()).filter_map(|t| self.fire(m, t).map(|m2| (t, m2))).collect()
    }

    fn effect(&self, t: usize, p: usize) -> i64 {
        let tr = &self.transitions[t];
        tr.post[p] as i64 - tr.pre[p] as i64
    }

    /// The net restricted to transitions satisfying `keep`, with the index
    /// map back into `self`.
    pub fn restrict<F: Fn(&NetTransition) -> bool>(&self, keep: F) -> (Net, Vec<usize>) {
        let mut base = Vec::new();
        let mut ts = Vec::new();
        for (i, t) in self.transitions.iter().enumerate() {
            if keep(t) {
                base.push(i);
                ts.push(t.clone());
            }
        }
        (Net { places: self.places.clone(), vars: self.vars.clone(), transitions: ts }, base)
    }
}

pub fn par_brs_to_net(b: &Brs) -> Result<Net, BrsError> {
    b.check_parallel()?;
    let vars: Vec<Variable> = b.vars().iter().cloned().collect();
    let index: HashMap<&Variable, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let n = vars.len();
    let vec_of = |t: &ProcessTerm| {
        let mut v = vec![0u64; n];
        for f in t.factors() {
            if let ProcessTerm::Atom(x) = f {
                v[index[x]] += 1;
            }
        }
        v
    };
    let transitions = b
        .ids()
        .map(|id| {
            let r = b.rule(id);
            NetTransition {
                pre: vec_of(&r.lhs),
                post: vec_of(&r.rhs),
                label: r.label.clone(),
                accepting: r.accepting,
                origin: id,
            }
        })
        .collect();
    Ok(Net { places: vars.iter().map(|v| v.to_string()).collect(), vars, transitions })
}

/// Marking image of a parallel term; `None` if `t` has a sequential node or
/// an unknown variable.
pub fn term_to_marking(net: &Net, t: &ProcessTerm) -> Option<Marking> {
    let mut m = Marking::zero(net.place_count());
    for f in t.factors() {
        match f {
            ProcessTerm::Atom(x) => m.0[net.place_of(x)?] += 1,
            _ => return None,
        }
    }
    Some(m)
}

/// Term image of the variable places of `m`.
pub fn marking_to_term(net: &Net, m: &Marking) -> ProcessTerm {
    ProcessTerm::par(
        net.vars
            .iter()
            .enumerate()
            .flat_map(|(p, v)| std::iter::repeat_n(ProcessTerm::atom(v), m.0[p] as usize)),
    )
}

// ---------------------------------------------------------------------------
// coverability

/// Minimal basis of the markings that can cover a target, with a firing
/// justification for every element ever inserted.
pub struct BackwardBasis {
    arena: Vec<(Marking, Option<(usize, usize)>)>,
    basis: Vec<usize>,
}

impl BackwardBasis {
    pub fn elements(&self) -> impl Iterator<Item = &Marking> {
        self.basis.iter().map(|&i| &self.arena[i].0)
    }

    /// Whether `m` can cover the target.
    pub fn contains(&self, m: &Marking) -> bool {
        self.basis.iter().any(|&i| m.covers(&self.arena[i].0))
    }

    fn chain(&self, mut i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        while let Some((t, next)) = self.arena[i].1 {
            out.push(t);
            i = next;
        }
        out
    }

    /// Firing sequence from `m` to a marking covering the target.
    pub fn witness(&self, m: &Marking) -> Option<Vec<usize>> {
        let i = *self.basis.iter().find(|&&i| m.covers(&self.arena[i].0))?;
        Some(self.chain(i))
    }
}

fn pre_image(net: &Net, m: &Marking, t: usize) -> Marking {
    let tr = &net.transitions[t];
    Marking(m.0.iter().enumerate().map(|(p, &k)| tr.pre[p] + k.saturating_sub(tr.post[p])).collect())
}

/// Backward fixpoint over upward-closed sets. Stops early once `stop`
/// holds for a basis element.
fn backward(net: &Net, target: &Marking, stop: Option<&Marking>) -> BackwardBasis {
    let mut bb = BackwardBasis { arena: vec![(target.clone(), None)], basis: vec![0] };
    if stop.is_some_and(|s| s.covers(target)) {
        return bb;
    }
    let mut queue = VecDeque::from([0usize]);
    while let Some(e) = queue.pop_front() {
        if !bb.basis.contains(&e) {
            continue;
        }
        for t in 0..net.transitions.len() {
            let m2 = pre_image(net, &bb.arena[e].0, t);
            if bb.basis.iter().any(|&i| m2.covers(&bb.arena[i].0)) {
                continue;
            }
            let id = bb.arena.len();
            bb.arena.push((m2, Some((t, e))));
            let arena = &bb.arena;
            bb.basis.retain(|&i| !arena[i].0.covers(&arena[id].0));
            bb.basis.push(id);
            if stop.is_some_and(|s| s.covers(&bb.arena[id].0)) {
                return bb;
            }
            queue.push_back(id);
        }
    }
    bb
}

pub fn backward_basis(net: &Net, target: &Marking) -> BackwardBasis {
    backward(net, target, None)
}

/// Whether some firing sequence from `init` reaches a marking `>= target`.
/// Always definite.
pub fn coverability(net: &Net, init: &Marking, target: &Marking) -> Decision<Vec<usize>> {
    let bb = backward(net, target, Some(init));
    match bb.witness(init) {
        Some(w) => Decision::Yes(w),
        None => Decision::No,
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum FlagMode {
    AcceptingSeen,
    NoneAcceptingAndNonNull,
}

/// Flag product: two extra places `@notseen` and `@seen` hold one token
/// between them; accepting transitions are duplicated so that each copy
/// moves the token to `@seen`. Returns the product, the index map back
/// into `net`, and the two flag places.
pub fn flag_product(net: &Net) -> (Net, Vec<usize>, usize, usize) {
    let n = net.place_count();
    let (not_seen, seen) = (n, n + 1);
    let mut places = net.places.clone();
    places.push("@notseen".into());
    places.push("@seen".into());
    let mut ts = Vec::new();
    let mut base = Vec::new();
    for (i, t) in net.transitions.iter().enumerate() {
        let widen = |v: &[u64], a: u64, b: u64| {
            let mut w = v.to_vec();
            w.push(a);
            w.push(b);
            w
        };
        if t.accepting {
            for from in [not_seen, seen] {
                let f = |p: usize| u64::from(p == from);
                ts.push(NetTransition {
                    pre: widen(&t.pre, f(not_seen), f(seen)),
                    post: widen(&t.post, 0, 1),
                    ..t.clone()
                });
                base.push(i);
            }
        } else {
            ts.push(NetTransition { pre: widen(&t.pre, 0, 0), post: widen(&t.post, 0, 0), ..t.clone() });
            base.push(i);
        }
    }
    (Net { places, vars: net.vars.clone(), transitions: ts }, base, not_seen, seen)
}

fn widen_marking(m: &Marking, extra: &[u64]) -> Marking {
    let mut v = m.0.clone();
    v.extend_from_slice(extra);
    Marking(v)
}

/// Coverability under a constraint on accepting transitions. Always
/// definite.
pub fn flagged_coverability(
    net: &Net,
    init: &Marking,
    target: &Marking,
    mode: FlagMode,
) -> Decision<Vec<usize>> {
    match mode {
        FlagMode::AcceptingSeen => {
            let (prod, base, _, _) = flag_product(net);
            coverability(&prod, &widen_marking(init, &[1, 0]), &widen_marking(target, &[0, 1]))
                .map(|w| w.into_iter().map(|t| base[t]).collect())
        }
        FlagMode::NoneAcceptingAndNonNull => {
            let (sub, base) = net.restrict(|t| !t.accepting);
            for t in 0..sub.transitions.len() {
                if let Some(m1) = sub.fire(init, t) {
                    if let Decision::Yes(rest) = coverability(&sub, &m1, target) {
                        return Decision::Yes(
                            std::iter::once(t).chain(rest).map(|i| base[i]).collect(),
                        );
                    }
                }
            }
            Decision::No
        }
    }
}

// ---------------------------------------------------------------------------
// exact reachability

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ReachMode {
    Any,
    AcceptingSeen,
    NoneAccepting,
}

/// Rational relaxation of the state equation `init + C x = target`.
pub fn state_equation_feasible(net: &Net, init: &Marking, target: &Marking) -> bool {
    let nt = net.transitions.len();
    let cons: Vec<Constraint> = (0..net.place_count())
        .map(|p| {
            let coeffs = (0..nt).map(|t| net.effect(t, p)).collect();
            Constraint::new(coeffs, Cmp::Eq, target.0[p] as i64 - init.0[p] as i64)
        })
        .collect();
    feasible(nt, &cons).is_some()
}

/// Exact reachability of `target` under the mode's constraint on accepting
/// transitions. `No` comes from coverability, the state equation or an
/// exhausted pruned search; `Unknown` when the search budget runs out.
pub fn exact_reachability(
    net: &Net,
    init: &Marking,
    target: &Marking,
    mode: ReachMode,
    budget: usize,
) -> Decision<Vec<usize>> {
    match mode {
        ReachMode::Any => reach_plain(net, init, target, budget),
        ReachMode::NoneAccepting => {
            let (sub, base) = net.restrict(|t| !t.accepting);
            reach_plain(&sub, init, target, budget).map(|w| w.into_iter().map(|t| base[t]).collect())
        }
        ReachMode::AcceptingSeen => {
            let (prod, base, _, _) = flag_product(net);
            reach_plain(&prod, &widen_marking(init, &[1, 0]), &widen_marking(target, &[0, 1]), budget)
                .map(|w| w.into_iter().map(|t| base[t]).collect())
        }
    }
}

fn reach_plain(net: &Net, init: &Marking, target: &Marking, budget: usize) -> Decision<Vec<usize>> {
    if init == target {
        return Decision::Yes(Vec::new());
    }
    let bb = backward_basis(net, target);
    if !bb.contains(init) {
        return Decision::No;
    }
    if !state_equation_feasible(net, init, target) {
        return Decision::No;
    }
    let mut parent: HashMap<Marking, Option<(usize, Marking)>> = HashMap::new();
    parent.insert(init.clone(), None);
    let mut queue = VecDeque::from([init.clone()]);
    while let Some(m) = queue.pop_front() {
        for (t, m2) in net.successors(&m) {
            if parent.contains_key(&m2) || !bb.contains(&m2) {
                continue;
            }
            parent.insert(m2.clone(), Some((t, m.clone())));
            if m2 == *target {
                let mut path = Vec::new();
                let mut cur = m2;
                while let Some(Some((t, prev))) = parent.get(&cur) {
                    path.push(*t);
                    cur = prev.clone();
                }
                path.reverse();
                return Decision::Yes(path);
            }
            if parent.len() > budget {
                return Decision::Unknown(format!("reachability search exceeded {budget} markings"));
            }
            queue.push_back(m2);
        }
    }
    Decision::No
}

// ---------------------------------------------------------------------------
// Karp-Miller

#[derive(Clone, Debug, Serialize)]
pub struct KmNode {
    pub marking: OmegaMarking,
    pub parent: Option<usize>,
    pub via: Option<usize>,
    /// Set when the node repeats an earlier marking and was not expanded.
    pub duplicate_of: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KmTree {
    pub nodes: Vec<KmNode>,
    /// False when the node budget cut the construction short.
    pub complete: bool,
}

fn omega_fire(net: &Net, m: &OmegaMarking, t: usize) -> Option<OmegaMarking> {
    let tr = &net.transitions[t];
    let mut out = Vec::with_capacity(m.0.len());
    for (p, c) in m.0.iter().enumerate() {
        out.push(match *c {
            Count::Omega => Count::Omega,
            Count::N(k) if k >= tr.pre[p] => Count::N(k - tr.pre[p] + tr.post[p]),
            Count::N(_) => return None,
        });
    }
    Some(OmegaMarking(out))
}

pub fn karp_miller(net: &Net, init: &Marking, budget: usize) -> KmTree {
    let mut nodes = vec![KmNode {
        marking: OmegaMarking::from_marking(init),
        parent: None,
        via: None,
        duplicate_of: None,
    }];
    let mut first: HashMap<OmegaMarking, usize> = HashMap::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(n) = queue.pop_front() {
        let m = nodes[n].marking.clone();
        if let Some(&d) = first.get(&m) {
            nodes[n].duplicate_of = Some(d);
            continue;
        }
        first.insert(m.clone(), n);
        for t in 0..net.transitions.len() {
            let Some(mut m2) = omega_fire(net, &m, t) else { continue };
            let mut anc = Some(n);
            while let Some(a) = anc {
                let am = &nodes[a].marking;
                if m2.covers(am) && m2 != *am {
                    for p in 0..m2.0.len() {
                        if m2.0[p] > am.0[p] {
                            m2.0[p] = Count::Omega;
                        }
                    }
                }
                anc = nodes[a].parent;
            }
            if nodes.len() >= budget {
                return KmTree { nodes, complete: false };
            }
            nodes.push(KmNode { marking: m2, parent: Some(n), via: Some(t), duplicate_of: None });
            queue.push_back(nodes.len() - 1);
        }
    }
    KmTree { nodes, complete: true }
}

impl KmTree {
    pub fn is_bounded(&self) -> bool {
        self.nodes.iter().all(|n| !n.marking.has_omega())
    }

    pub fn markings(&self) -> std::collections::BTreeSet<OmegaMarking> {
        self.nodes.iter().map(|n| n.marking.clone()).collect()
    }

    /// Coverability graph: one vertex per distinct ω-marking, edges from
    /// tree edges (duplicates merged into their first occurrence).
    pub fn graph(&self) -> CoverabilityGraph {
        let mut index: BTreeMap<OmegaMarking, usize> = BTreeMap::new();
        let mut vertices = Vec::new();
        for n in &self.nodes {
            index.entry(n.marking.clone()).or_insert_with(|| {
                vertices.push(n.marking.clone());
                vertices.len() - 1
            });
        }
        let mut edges = std::collections::BTreeSet::new();
        for n in &self.nodes {
            if let (Some(p), Some(t)) = (n.parent, n.via) {
                edges.insert((index[&self.nodes[p].marking], t, index[&n.marking]));
            }
        }
        CoverabilityGraph { vertices, edges: edges.into_iter().collect() }
    }

    pub fn to_dot(&self, net: &Net) -> String {
        let mut s = String::from("digraph km {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            s.push_str(&format!("  n{i} [label=\"{}\"];\n", n.marking));
            if let (Some(p), Some(t)) = (n.parent, n.via) {
                s.push_str(&format!("  n{p} -> n{i} [label=\"{}\"];\n", net.transitions[t].label));
            }
        }
        s.push_str("}\n");
        s
    }
}

pub fn is_bounded(net: &Net, init: &Marking) -> bool {
    karp_miller(net, init, usize::MAX).is_bounded()
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverabilityGraph {
    pub vertices: Vec<OmegaMarking>,
    pub edges: Vec<(usize, usize, usize)>,
}

// ---------------------------------------------------------------------------
// infinite runs

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RunMode {
    AcceptingInfinitelyOften,
    NoAccepting,
    FinitelyManyNonNullAccepting,
}

/// A firing sequence `prefix` reaching `m`, and a nonempty `pump` with
/// `m -pump-> m' >= m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Lasso {
    pub prefix: Vec<usize>,
    pub pump: Vec<usize>,
}

impl Lasso {
    /// Checks the lasso on `net` from `init`: the pump is self-covering.
    pub fn check(&self, net: &Net, init: &Marking) -> bool {
        let Some(m) = net.fire_all(init, &self.prefix) else { return false };
        !self.pump.is_empty() && net.fire_all(&m, &self.pump).is_some_and(|m2| m2.covers(&m))
    }
}

/// The problem instance after the mode is compiled away: which
/// transitions a pump may use, which it must use, which markings may
/// start a pump.
struct RunProblem {
    net: Net,
    init: Marking,
    base: Vec<usize>,
    allowed: Vec<bool>,
    needed: Option<Vec<bool>>,
    seen_place: Option<usize>,
}

impl RunProblem {
    fn new(net: &Net, init: &Marking, mode: RunMode) -> Self {
        match mode {
            RunMode::AcceptingInfinitelyOften => RunProblem {
                net: net.clone(),
                init: init.clone(),
                base: (0..net.transitions.len()).collect(),
                allowed: vec![true; net.transitions.len()],
                needed: Some(net.transitions.iter().map(|t| t.accepting).collect()),
                seen_place: None,
            },
            RunMode::NoAccepting => {
                let (sub, base) = net.restrict(|t| !t.accepting);
                let k = sub.transitions.len();
                RunProblem { net: sub, init: init.clone(), base, allowed: vec![true; k], needed: None, seen_place: None }
            }
            RunMode::FinitelyManyNonNullAccepting => {
                let (prod, base, _, seen) = flag_product(net);
                let allowed = prod.transitions.iter().map(|t| !t.accepting).collect();
                RunProblem {
                    net: prod,
                    init: widen_marking(init, &[1, 0]),
                    base,
                    allowed,
                    needed: None,
                    seen_place: Some(seen),
                }
            }
        }
    }

    fn node_ok(&self, m: &[Count]) -> bool {
        self.seen_place.is_none_or(|p| m[p] != Count::N(0))
    }

    fn lift(&self, l: Lasso) -> Lasso {
        Lasso {
            prefix: l.prefix.into_iter().map(|t| self.base[t]).collect(),
            pump: l.pump.into_iter().map(|t| self.base[t]).collect(),
        }
    }

    /// LP relaxation of a self-covering pump using only `ts`.
    fn pump_lp(&self, ts: &[usize]) -> bool {
        let ts: Vec<usize> = ts.iter().copied().filter(|&t| self.allowed[t]).collect();
        if ts.is_empty() {
            return false;
        }
        let mut cons: Vec<Constraint> = (0..self.net.place_count())
            .map(|p| Constraint::new(ts.iter().map(|&t| self.net.effect(t, p)).collect(), Cmp::Ge, 0))
            .collect();
        cons.push(Constraint::new(vec![1; ts.len()], Cmp::Ge, 1));
        if let Some(need) = &self.needed {
            cons.push(Constraint::new(ts.iter().map(|&t| i64::from(need[t])).collect(), Cmp::Ge, 1));
        }
        feasible(ts.len(), &cons).is_some()
    }
}

/// Finds an edge `u -t-> v` inside one SCC of the allowed subgraph,
/// with `t` needed when the mode asks for it, and closes it into a cycle.
fn scc_cycle(
    n_vertices: usize,
    edges: &[(usize, usize, usize)],
    allowed: &[bool],
    needed: &Option<Vec<bool>>,
    vertex_ok: &dyn Fn(usize) -> bool,
) -> Option<(usize, Vec<usize>)> {
    let mut g: DiGraph<(), usize> = DiGraph::with_capacity(n_vertices, edges.len());
    for _ in 0..n_vertices {
        g.add_node(());
    }
    let sub: Vec<&(usize, usize, usize)> =
        edges.iter().filter(|(u, t, v)| allowed[*t] && vertex_ok(*u) && vertex_ok(*v)).collect();
    for &&(u, t, v) in &sub {
        g.add_edge(NodeIndex::new(u), NodeIndex::new(v), t);
    }
    let mut comp = vec![usize::MAX; n_vertices];
    for (c, scc) in kosaraju_scc(&g).into_iter().enumerate() {
        for v in scc {
            comp[v.index()] = c;
        }
    }
    for &&(u, t, v) in &sub {
        if comp[u] != comp[v] || needed.as_ref().is_some_and(|nd| !nd[t]) {
            continue;
        }
        // path v ~> u inside the component
        let mut prev: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut queue = VecDeque::from([v]);
        let mut seen = std::collections::HashSet::from([v]);
        while let Some(x) = queue.pop_front() {
            if x == u {
                break;
            }
            for &&(a, t2, b) in &sub {
                if a == x && comp[b] == comp[u] && seen.insert(b) {
                    prev.insert(b, (a, t2));
                    queue.push_back(b);
                }
            }
        }
        let mut back = Vec::new();
        let mut cur = u;
        while cur != v {
            let (a, t2) = prev[&cur];
            back.push(t2);
            cur = a;
        }
        back.reverse();
        let mut cycle = vec![t];
        cycle.extend(back);
        return Some((u, cycle));
    }
    None
}

/// Forward exploration that stops at a self-covering ancestor; resumable
/// with a larger limit.
struct Explorer<'a> {
    rp: &'a RunProblem,
    ids: HashMap<Marking, usize>,
    nodes: Vec<(Marking, Option<(usize, usize)>)>,
    edges: Vec<(usize, usize, usize)>,
    next: usize,
    /// Successors of `nodes[next]` already handled.
    done_succ: usize,
}

impl<'a> Explorer<'a> {
    fn new(rp: &'a RunProblem) -> Self {
        Explorer {
            rp,
            ids: HashMap::from([(rp.init.clone(), 0)]),
            nodes: vec![(rp.init.clone(), None)],
            edges: Vec::new(),
            next: 0,
            done_succ: 0,
        }
    }

    fn complete(&self) -> bool {
        self.next >= self.nodes.len()
    }

    fn path_to(&self, mut i: usize, stop: usize) -> Vec<usize> {
        let mut p = Vec::new();
        while i != stop {
            let (u, t) = self.nodes[i].1.expect("tree path");
            p.push(t);
            i = u;
        }
        p.reverse();
        p
    }

    /// A pump closing at `m2` after `k -t->`: some tree ancestor of `k`
    /// (or `k` itself) is covered by `m2`, through allowed transitions
    /// only, with a needed one among them.
    fn pump_at(&self, k: usize, t: usize, m2: &Marking) -> Option<Lasso> {
        let rp = self.rp;
        let (mut ok, mut has_need) = (rp.allowed[t], rp.needed.as_ref().is_none_or(|nd| nd[t]));
        let mut a = k;
        while ok {
            let am = &self.nodes[a].0;
            if has_need && m2.covers(am) && rp.node_ok(&OmegaMarking::from_marking(am).0) {
                let mut pump = self.path_to(k, a);
                pump.push(t);
                return Some(Lasso { prefix: self.path_to(a, 0), pump });
            }
            let (u, t2) = self.nodes[a].1?;
            ok &= rp.allowed[t2];
            has_need |= rp.needed.as_ref().is_none_or(|nd| nd[t2]);
            a = u;
        }
        None
    }

    fn run(&mut self, limit: usize) -> Option<Lasso> {
        let rp = self.rp;
        while self.next < self.nodes.len() {
            let k = self.next;
            let m = self.nodes[k].0.clone();
            let succ = rp.net.successors(&m);
            while self.done_succ < succ.len() {
                let (t, m2) = succ[self.done_succ].clone();
                let known = self.ids.get(&m2).copied();
                if known.is_none() && self.nodes.len() >= limit {
                    return None;
                }
                self.done_succ += 1;
                let v = known.unwrap_or_else(|| {
                    let v = self.nodes.len();
                    self.ids.insert(m2.clone(), v);
                    self.nodes.push((m2.clone(), Some((k, t))));
                    v
                });
                self.edges.push((k, t, v));
                if let Some(l) = self.pump_at(k, t, &m2) {
                    return Some(l);
                }
            }
            self.next += 1;
            self.done_succ = 0;
        }
        None
    }

    fn scc_lasso(&self) -> Option<Lasso> {
        let ok_vertex = |i: usize| self.rp.node_ok(&OmegaMarking::from_marking(&self.nodes[i].0).0);
        scc_cycle(self.nodes.len(), &self.edges, &self.rp.allowed, &self.rp.needed, &ok_vertex)
            .map(|(u, cycle)| Lasso { prefix: self.path_to(u, 0), pump: cycle })
    }
}

/// Markings explored before the refutations are tried.
const FIRST_PHASE: usize = 5_000;

/// Existence of an infinite firing sequence from `init` with the mode's
/// pattern of accepting transitions.
pub fn infinite_run(net: &Net, init: &Marking, mode: RunMode, budget: usize) -> Decision<Lasso> {
    let rp = RunProblem::new(net, init, mode);
    let mut ex = Explorer::new(&rp);
    let mut phases = vec![budget.min(256)];
    phases.extend([FIRST_PHASE, budget].into_iter().filter(|&p| p > 256 && p <= budget));
    phases.dedup();
    let mut refutation_tried = false;
    for limit in phases {
        if let Some(l) = ex.run(limit) {
            return Decision::Yes(rp.lift(l));
        }
        if let Some(l) = ex.scc_lasso() {
            return Decision::Yes(rp.lift(l));
        }
        if ex.complete() {
            return Decision::No;
        }
        if !refutation_tried {
            refutation_tried = true;
            if refuted(&rp, budget) {
                return Decision::No;
            }
        }
    }
    Decision::Unknown(format!("no pump found within {budget} markings and no refutation"))
}

/// No self-covering candidate in the whole net, or in any component of
/// the coverability graph.
fn refuted(rp: &RunProblem, budget: usize) -> bool {
    let n = &rp.net;
    let all: Vec<usize> = (0..n.transitions.len()).collect();
    if !rp.pump_lp(&all) {
        return true;
    }
    let km = karp_miller(n, &rp.init, budget.min(KM_BUDGET));
    if !km.complete {
        return false;
    }
    let cg = km.graph();
    let mut g: DiGraph<(), usize> = DiGraph::new();
    for _ in 0..cg.vertices.len() {
        g.add_node(());
    }
    for &(u, t, v) in &cg.edges {
        if rp.allowed[t] && rp.node_ok(&cg.vertices[u].0) && rp.node_ok(&cg.vertices[v].0) {
            g.add_edge(NodeIndex::new(u), NodeIndex::new(v), t);
        }
    }
    let mut comp = vec![usize::MAX; cg.vertices.len()];
    for (c, scc) in kosaraju_scc(&g).into_iter().enumerate() {
        for v in scc {
            comp[v.index()] = c;
        }
    }
    let mut per_comp: BTreeMap<usize, std::collections::BTreeSet<usize>> = BTreeMap::new();
    for e in g.edge_indices() {
        let (u, v) = g.edge_endpoints(e).expect("edge");
        if comp[u.index()] == comp[v.index()] {
            per_comp.entry(comp[u.index()]).or_default().insert(g[e]);
        }
    }
    !per_comp.values().any(|ts| rp.pump_lp(&ts.iter().copied().collect::<Vec<_>>()))
}

//! Sequential systems: head reachability and infinite runs, via a head
//! graph for pop-free systems and a pushdown encoding otherwise.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use petgraph::algo::kosaraju_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::brs::{seq_shape, Brs, BrsError, RuleId, RuleKind};
use crate::decision::Decision;
use crate::petri::RunMode;
use crate::terms::{ProcessTerm, Variable};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Constraint {
    Any,
    NonAccepting,
}

impl Constraint {
    fn admits(self, accepting: bool) -> bool {
        self == Constraint::Any || !accepting
    }
}

/// Rule sequence reaching the pump start, and a nonempty pump that
/// returns to the same innermost variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeqLasso {
    pub prefix: Vec<RuleId>,
    pub pump: Vec<RuleId>,
}

pub fn is_pop_free(b: &Brs) -> bool {
    b.rules().iter().all(|r| !matches!(seq_shape(r), Some(RuleKind::SeqPop | RuleKind::SeqErase)))
}

// ---------------------------------------------------------------------------
// head graph

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeadEdge {
    pub src: Variable,
    pub dst: Variable,
    pub accepting: bool,
    pub origin: RuleId,
}

/// Push `X -> Y.(Z)` gives `X -> Z`, rename `X -> Y` gives `X -> Y`.
#[derive(Clone, Debug, Serialize)]
pub struct HeadGraph {
    pub vertices: Vec<Variable>,
    pub edges: Vec<HeadEdge>,
}

impl HeadGraph {
    pub fn build(b: &Brs) -> Result<Self, BrsError> {
        b.check_sequential()?;
        let mut edges = Vec::new();
        for id in b.ids() {
            let r = b.rule(id);
            let (ProcessTerm::Atom(x), Some(kind)) = (&r.lhs, seq_shape(r)) else {
                return Err(BrsError::NotSequential(r.name.clone()));
            };
            let dst = match (kind, &r.rhs) {
                (RuleKind::SeqPush, ProcessTerm::Seq(_, z)) => match &**z {
                    ProcessTerm::Atom(z) => z.clone(),
                    _ => unreachable!("push shape"),
                },
                (RuleKind::SeqRename, ProcessTerm::Atom(y)) => y.clone(),
                _ => return Err(BrsError::NotSequential(r.name.clone())),
            };
            edges.push(HeadEdge { src: x.clone(), dst, accepting: r.accepting, origin: id });
        }
        Ok(HeadGraph { vertices: b.vars().iter().cloned().collect(), edges })
    }

    fn index(&self, x: &Variable) -> usize {
        self.vertices.iter().position(|v| v == x).expect("declared vertex")
    }

    fn as_generic(&self) -> (usize, Vec<(usize, usize, bool, Vec<RuleId>)>) {
        let edges = self
            .edges
            .iter()
            .map(|e| (self.index(&e.src), self.index(&e.dst), e.accepting, vec![e.origin]))
            .collect();
        (self.vertices.len(), edges)
    }
}

// ---------------------------------------------------------------------------
// generic lasso search over a finite graph with flagged edges

type FlagEdge = (usize, usize, bool, Vec<RuleId>);

fn bfs_path(
    n: usize,
    edges: &[FlagEdge],
    from: usize,
    ok: &dyn Fn(&FlagEdge) -> bool,
) -> Vec<Option<Option<usize>>> {
    // prev[v] = Some(None) for the source, Some(Some(edge)) otherwise
    let mut prev = vec![None; n];
    prev[from] = Some(None);
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for (i, e) in edges.iter().enumerate() {
            if e.0 == u && ok(e) && prev[e.1].is_none() {
                prev[e.1] = Some(Some(i));
                queue.push_back(e.1);
            }
        }
    }
    prev
}

fn unwind(prev: &[Option<Option<usize>>], edges: &[FlagEdge], mut v: usize) -> Vec<usize> {
    let mut out = Vec::new();
    while let Some(Some(i)) = prev[v] {
        out.push(i);
        v = edges[i].0;
    }
    out.reverse();
    out
}

fn rules_of(edges: &[FlagEdge], path: &[usize]) -> Vec<RuleId> {
    path.iter().flat_map(|&i| edges[i].3.iter().copied()).collect()
}

/// A cycle through edge `e` inside the subgraph `ok`, as edge indices
/// starting with `e`.
fn cycle_through(n: usize, edges: &[FlagEdge], e: usize, ok: &dyn Fn(&FlagEdge) -> bool) -> Option<Vec<usize>> {
    let (u, v) = (edges[e].0, edges[e].1);
    let prev = bfs_path(n, edges, v, ok);
    prev[u]?;
    let mut c = vec![e];
    c.extend(unwind(&prev, edges, u));
    Some(c)
}

fn components(n: usize, edges: &[FlagEdge], ok: &dyn Fn(&FlagEdge) -> bool) -> Vec<usize> {
    let mut g: DiGraph<(), ()> = DiGraph::new();
    for _ in 0..n {
        g.add_node(());
    }
    for e in edges.iter().filter(|e| ok(e)) {
        g.add_edge(NodeIndex::new(e.0), NodeIndex::new(e.1), ());
    }
    let mut comp = vec![0; n];
    for (c, scc) in kosaraju_scc(&g).into_iter().enumerate() {
        for v in scc {
            comp[v.index()] = c;
        }
    }
    comp
}

/// Lasso search on a finite graph whose vertices are heads; `start_ok`
/// says which vertices may begin a pump (to avoid splitting a pop rule).
fn graph_lasso(
    n: usize,
    edges: &[FlagEdge],
    from: usize,
    mode: RunMode,
    start_ok: &dyn Fn(usize) -> bool,
) -> Option<SeqLasso> {
    let any = |_: &FlagEdge| true;
    let clean = |e: &FlagEdge| !e.2;
    match mode {
        RunMode::AcceptingInfinitelyOften | RunMode::NoAccepting => {
            let ok: &dyn Fn(&FlagEdge) -> bool =
                if mode == RunMode::NoAccepting { &clean } else { &any };
            let reach = bfs_path(n, edges, from, ok);
            let comp = components(n, edges, ok);
            for (i, e) in edges.iter().enumerate() {
                let want = mode == RunMode::NoAccepting || e.2;
                if !want || !ok(e) || reach[e.0].is_none() || comp[e.0] != comp[e.1] {
                    continue;
                }
                let Some(mut cyc) = cycle_through(n, edges, i, ok) else { continue };
                // rotate to a vertex where a pump may start
                let Some(k) = (0..cyc.len()).find(|&k| start_ok(edges[cyc[k]].0)) else { continue };
                cyc.rotate_left(k);
                let s = edges[cyc[0]].0;
                let prefix = unwind(&reach, edges, s);
                return Some(SeqLasso { prefix: rules_of(edges, &prefix), pump: rules_of(edges, &cyc) });
            }
            None
        }
        RunMode::FinitelyManyNonNullAccepting => {
            // layered graph: vertex v + n * seen
            let mut layered: Vec<FlagEdge> = Vec::new();
            for e in edges {
                layered.push((e.0, e.1 + if e.2 { n } else { 0 }, e.2, e.3.clone()));
                layered.push((e.0 + n, e.1 + n, e.2, e.3.clone()));
            }
            let reach = bfs_path(2 * n, &layered, from, &any);
            let late = |e: &FlagEdge| !e.2 && e.0 >= n;
            let comp = components(2 * n, &layered, &late);
            for (i, e) in layered.iter().enumerate() {
                if !late(e) || reach[e.0].is_none() || comp[e.0] != comp[e.1] {
                    continue;
                }
                let Some(mut cyc) = cycle_through(2 * n, &layered, i, &late) else { continue };
                let Some(k) = (0..cyc.len()).find(|&k| start_ok(layered[cyc[k]].0 - n)) else { continue };
                cyc.rotate_left(k);
                let s = layered[cyc[0]].0;
                let prefix = unwind(&reach, &layered, s);
                return Some(SeqLasso { prefix: rules_of(&layered, &prefix), pump: rules_of(&layered, &cyc) });
            }
            None
        }
    }
}

// ---------------------------------------------------------------------------
// prefix rewriting

/// Word rule over stack words, innermost variable first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WordRule {
    pub lhs: Vec<Variable>,
    pub rhs: Vec<Variable>,
    pub accepting: bool,
    pub origin: RuleId,
}

#[derive(Clone, Debug, Serialize)]
pub struct PrefixSystem {
    pub alphabet: Vec<Variable>,
    pub rules: Vec<WordRule>,
}

fn atom(t: &ProcessTerm) -> Variable {
    match t {
        ProcessTerm::Atom(x) => x.clone(),
        _ => unreachable!("sequential shape"),
    }
}

impl PrefixSystem {
    pub fn from_brs(b: &Brs) -> Result<Self, BrsError> {
        b.check_sequential()?;
        let mut rules = Vec::new();
        for id in b.ids() {
            let r = b.rule(id);
            let (lhs, rhs) = match (seq_shape(r).expect("sequential"), &r.lhs, &r.rhs) {
                (RuleKind::SeqPush, ProcessTerm::Atom(x), ProcessTerm::Seq(y, z)) => {
                    (vec![x.clone()], vec![atom(z), y.clone()])
                }
                (RuleKind::SeqPop, ProcessTerm::Seq(x, y), ProcessTerm::Atom(z)) => {
                    (vec![atom(y), x.clone()], vec![z.clone()])
                }
                (RuleKind::SeqRename, ProcessTerm::Atom(x), ProcessTerm::Atom(y)) => (vec![x.clone()], vec![y.clone()]),
                (RuleKind::SeqErase, ProcessTerm::Atom(x), ProcessTerm::Epsilon) => (vec![x.clone()], vec![]),
                _ => return Err(BrsError::NotSequential(r.name.clone())),
            };
            rules.push(WordRule { lhs, rhs, accepting: r.accepting, origin: id });
        }
        Ok(PrefixSystem { alphabet: b.vars().iter().cloned().collect(), rules })
    }

    /// One-step prefix rewriting, in rule order.
    pub fn step(&self, w: &[Variable]) -> Vec<(RuleId, Vec<Variable>)> {
        self.rules
            .iter()
            .filter(|r| w.starts_with(&r.lhs))
            .map(|r| {
                let mut out = r.rhs.clone();
                out.extend_from_slice(&w[r.lhs.len()..]);
                (r.origin, out)
            })
            .collect()
    }
}

/// `X1.(…Xn.(Y)…)` becomes `Y Xn … X1`; `None` for non-sequential terms.
pub fn term_to_word(t: &ProcessTerm) -> Option<Vec<Variable>> {
    let mut heads = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            ProcessTerm::Epsilon if heads.is_empty() => return Some(Vec::new()),
            ProcessTerm::Atom(y) => {
                let mut w = vec![y.clone()];
                w.extend(heads.into_iter().rev());
                return Some(w);
            }
            ProcessTerm::Seq(x, s) => {
                heads.push(x.clone());
                cur = s;
            }
            _ => return None,
        }
    }
}

pub fn word_to_term(w: &[Variable]) -> ProcessTerm {
    let mut it = w.iter();
    let Some(top) = it.next() else { return ProcessTerm::Epsilon };
    it.fold(ProcessTerm::atom(top), |t, x| ProcessTerm::seq(x.clone(), t))
}

/// Finite automaton over stack words. State 0 reads configurations of
/// the main control state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReachAutomaton {
    pub states: usize,
    pub finals: BTreeSet<usize>,
    pub transitions: BTreeSet<(usize, Variable, usize)>,
}

impl ReachAutomaton {
    pub fn accepts(&self, w: &[Variable]) -> bool {
        let mut cur = BTreeSet::from([0usize]);
        for x in w {
            cur = self
                .transitions
                .iter()
                .filter(|(p, y, _)| cur.contains(p) && y == x)
                .map(|&(_, _, q)| q)
                .collect();
        }
        cur.iter().any(|q| self.finals.contains(q))
    }

    /// Words whose first letter is `y`.
    pub fn top_is(y: &Variable, alphabet: &[Variable]) -> Self {
        let mut transitions = BTreeSet::from([(0, y.clone(), 1)]);
        for g in alphabet {
            transitions.insert((1, g.clone(), 1));
        }
        ReachAutomaton { states: 2, finals: BTreeSet::from([1]), transitions }
    }
}

/// Pushdown rule `<p, g> -> <p2, w>` with `|w| <= 2`; `origin` is set on
/// the step that carries the source rule (the first half of a pop).
#[derive(Clone, Debug)]
struct PdsRule {
    p: usize,
    g: Variable,
    p2: usize,
    w: Vec<Variable>,
    accepting: bool,
    origin: Option<RuleId>,
}

/// Control state 0 plus one auxiliary state per two-letter left-hand
/// side: `Y X => Z` becomes `<0,Y> -> <q,eps>` and `<q,X> -> <0,Z>`.
fn pds_of(ps: &PrefixSystem, c: Constraint) -> (usize, Vec<PdsRule>) {
    let mut controls = 1;
    let mut rules = Vec::new();
    for r in ps.rules.iter().filter(|r| c.admits(r.accepting)) {
        match r.lhs.as_slice() {
            [g] => rules.push(PdsRule {
                p: 0,
                g: g.clone(),
                p2: 0,
                w: r.rhs.clone(),
                accepting: r.accepting,
                origin: Some(r.origin),
            }),
            [y, x] => {
                let q = controls;
                controls += 1;
                rules.push(PdsRule { p: 0, g: y.clone(), p2: q, w: vec![], accepting: r.accepting, origin: Some(r.origin) });
                rules.push(PdsRule { p: q, g: x.clone(), p2: 0, w: r.rhs.clone(), accepting: false, origin: None });
            }
            _ => unreachable!("word rules have one or two letters on the left"),
        }
    }
    (controls, rules)
}

/// Backward reachability: the words from which some word accepted by
/// `target` is reachable, with rules restricted by `c`. Auxiliary control
/// states are appended after the target's states.
pub fn pre_star(ps: &PrefixSystem, target: &ReachAutomaton, c: Constraint) -> ReachAutomaton {
    let (controls, rules) = pds_of(ps, c);
    let ctrl = |p: usize| if p == 0 { 0 } else { target.states + p - 1 };
    let mut trans = target.transitions.clone();
    let states = target.states + controls - 1;
    loop {
        let mut added = Vec::new();
        for r in &rules {
            let mut ends = BTreeSet::from([ctrl(r.p2)]);
            for x in &r.w {
                ends = trans.iter().filter(|(p, y, _)| ends.contains(p) && y == x).map(|&(_, _, q)| q).collect();
            }
            for q in ends {
                let t = (ctrl(r.p), r.g.clone(), q);
                if !trans.contains(&t) {
                    added.push(t);
                }
            }
        }
        if added.is_empty() {
            break;
        }
        trans.extend(added);
    }
    ReachAutomaton { states, finals: target.finals.clone(), transitions: trans }
}

// ---------------------------------------------------------------------------
// head summaries for systems with pops

type Head = (usize, Variable);

#[derive(Clone, Debug)]
enum PopJust {
    Pop(usize),
    Rename(usize, Head, (usize, bool)),
    Push(usize, Head, (usize, bool), Head, (usize, bool)),
}

/// `<p,g> =>+ <p2,eps>`, with whether some accepting rule occurs.
fn pop_summaries(rules: &[PdsRule]) -> BTreeMap<Head, BTreeMap<(usize, bool), PopJust>> {
    let mut pops: BTreeMap<Head, BTreeMap<(usize, bool), PopJust>> = BTreeMap::new();
    loop {
        let mut added: Vec<(Head, (usize, bool), PopJust)> = Vec::new();
        let has = |pops: &BTreeMap<Head, BTreeMap<(usize, bool), PopJust>>, h: &Head, k: &(usize, bool)| {
            pops.get(h).is_some_and(|m| m.contains_key(k))
        };
        for (i, r) in rules.iter().enumerate() {
            let h = (r.p, r.g.clone());
            match r.w.as_slice() {
                [] => {
                    let k = (r.p2, r.accepting);
                    if !has(&pops, &h, &k) {
                        added.push((h, k, PopJust::Pop(i)));
                    }
                }
                [g1] => {
                    let h1 = (r.p2, g1.clone());
                    for (&(p3, f), _) in pops.get(&h1).into_iter().flatten() {
                        let k = (p3, f || r.accepting);
                        if !has(&pops, &h, &k) {
                            added.push((h.clone(), k, PopJust::Rename(i, h1.clone(), (p3, f))));
                        }
                    }
                }
                [g1, g2] => {
                    let h1 = (r.p2, g1.clone());
                    for (&(p3, f1), _) in pops.get(&h1).into_iter().flatten() {
                        let h2 = (p3, g2.clone());
                        for (&(p4, f2), _) in pops.get(&h2).into_iter().flatten() {
                            let k = (p4, f1 || f2 || r.accepting);
                            if !has(&pops, &h, &k) {
                                added.push((h.clone(), k, PopJust::Push(i, h1.clone(), (p3, f1), h2.clone(), (p4, f2))));
                            }
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
        if added.is_empty() {
            return pops;
        }
        for (h, k, j) in added {
            pops.entry(h).or_default().entry(k).or_insert(j);
        }
    }
}

fn expand_pop(
    pops: &BTreeMap<Head, BTreeMap<(usize, bool), PopJust>>,
    h: &Head,
    k: (usize, bool),
    out: &mut Vec<usize>,
) {
    match &pops[h][&k] {
        PopJust::Pop(i) => out.push(*i),
        PopJust::Rename(i, h1, k1) => {
            out.push(*i);
            expand_pop(pops, h1, *k1, out);
        }
        PopJust::Push(i, h1, k1, h2, k2) => {
            out.push(*i);
            expand_pop(pops, h1, *k1, out);
            expand_pop(pops, h2, *k2, out);
        }
    }
}

/// Head graph of a pushdown system: edges between heads whose segments
/// never pop below the source head.
struct SummaryGraph {
    heads: Vec<Head>,
    edges: Vec<FlagEdge>,
}

fn summary_graph(ps: &PrefixSystem) -> SummaryGraph {
    let (controls, rules) = pds_of(ps, Constraint::Any);
    let pops = pop_summaries(&rules);
    let mut heads: Vec<Head> = Vec::new();
    for p in 0..controls {
        for g in &ps.alphabet {
            heads.push((p, g.clone()));
        }
    }
    let idx: HashMap<Head, usize> = heads.iter().cloned().enumerate().map(|(i, h)| (h, i)).collect();
    let origins = |seq: &[usize]| -> Vec<RuleId> { seq.iter().filter_map(|&i| rules[i].origin).collect() };
    let mut edges = Vec::new();
    for (i, r) in rules.iter().enumerate() {
        let h = idx[&(r.p, r.g.clone())];
        match r.w.as_slice() {
            [] => {}
            [g1] => edges.push((h, idx[&(r.p2, g1.clone())], r.accepting, origins(&[i]))),
            [g1, g2] => {
                edges.push((h, idx[&(r.p2, g1.clone())], r.accepting, origins(&[i])));
                let h1 = (r.p2, g1.clone());
                for (&(p3, f), _) in pops.get(&h1).into_iter().flatten() {
                    let mut seq = vec![i];
                    expand_pop(&pops, &h1, (p3, f), &mut seq);
                    edges.push((h, idx[&(p3, g2.clone())], f || r.accepting, origins(&seq)));
                }
            }
            _ => unreachable!(),
        }
    }
    SummaryGraph { heads, edges }
}

// ---------------------------------------------------------------------------
// public queries

/// Innermost variables of terms reachable from `x` (always including `x`).
pub fn head_reachable(b: &Brs, x: &Variable, c: Constraint) -> Result<BTreeSet<Variable>, BrsError> {
    b.check_sequential()?;
    if !b.vars().contains(x) {
        return Err(BrsError::UnknownVariable(x.to_string()));
    }
    if is_pop_free(b) {
        let hg = HeadGraph::build(b)?;
        let (n, edges) = hg.as_generic();
        let prev = bfs_path(n, &edges, hg.index(x), &|e| c.admits(e.2));
        return Ok((0..n).filter(|&v| prev[v].is_some()).map(|v| hg.vertices[v].clone()).collect());
    }
    let ps = PrefixSystem::from_brs(b)?;
    let mut out = BTreeSet::new();
    for y in &ps.alphabet {
        let aut = pre_star(&ps, &ReachAutomaton::top_is(y, &ps.alphabet), c);
        if aut.accepts(std::slice::from_ref(x)) {
            out.insert(y.clone());
        }
    }
    Ok(out)
}

/// A rule sequence from `x` to a term whose innermost variable is `y`.
pub fn head_path(b: &Brs, x: &Variable, y: &Variable, c: Constraint) -> Result<Option<Vec<RuleId>>, BrsError> {
    b.check_sequential()?;
    let ps = PrefixSystem::from_brs(b)?;
    let g = summary_graph(&ps);
    let find = |h: &Head| g.heads.iter().position(|k| k == h);
    let (Some(from), Some(to)) = (find(&(0, x.clone())), find(&(0, y.clone()))) else {
        return Err(BrsError::UnknownVariable(format!("{x} or {y}")));
    };
    let prev = bfs_path(g.heads.len(), &g.edges, from, &|e| c.admits(e.2));
    Ok(prev[to].map(|_| rules_of(&g.edges, &unwind(&prev, &g.edges, to))))
}

/// Infinite derivations from `x` with the mode's pattern of accepting
/// rule occurrences. Exact for every sequential system.
pub fn infinite_run_seq(b: &Brs, x: &Variable, mode: RunMode) -> Result<Decision<SeqLasso>, BrsError> {
    b.check_sequential()?;
    if !b.vars().contains(x) {
        return Err(BrsError::UnknownVariable(x.to_string()));
    }
    let found = if is_pop_free(b) {
        let hg = HeadGraph::build(b)?;
        let (n, edges) = hg.as_generic();
        graph_lasso(n, &edges, hg.index(x), mode, &|_| true)
    } else {
        let ps = PrefixSystem::from_brs(b)?;
        let g = summary_graph(&ps);
        let from = g.heads.iter().position(|h| *h == (0, x.clone())).expect("head");
        let main = |v: usize| g.heads[v].0 == 0;
        graph_lasso(g.heads.len(), &g.edges, from, mode, &main)
    };
    Ok(match found {
        Some(l) => Decision::Yes(l),
        None => Decision::No,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brs::Derivation;
    use crate::syntax::parse_brs;
    use proptest::prelude::*;

    fn v(s: &str) -> Variable {
        Variable::new(s).unwrap()
    }

    fn set(xs: &[&str]) -> BTreeSet<Variable> {
        xs.iter().map(|s| v(s)).collect()
    }

    #[test]
    fn head_reachable_examples() {
        let b = parse_brs("brs { vars: X, Y, Z; alphabet: a; rule r: X -a-> Y.(Z); }").unwrap();
        assert_eq!(head_reachable(&b, &v("X"), Constraint::Any).unwrap(), set(&["X", "Z"]));
        let b = parse_brs("brs { vars: X, Y; alphabet: a; accepting rule r1: X -a-> Y; }").unwrap();
        assert_eq!(head_reachable(&b, &v("X"), Constraint::NonAccepting).unwrap(), set(&["X"]));
        let b = parse_brs("brs { vars: X; alphabet: a; }").unwrap();
        assert_eq!(head_reachable(&b, &v("X"), Constraint::Any).unwrap(), set(&["X"]));
        let b = parse_brs("brs { vars: X, Y; alphabet: a; rule r: X || Y -a-> X; }").unwrap();
        assert!(head_reachable(&b, &v("X"), Constraint::Any).is_err());
    }

    #[test]
    fn head_reachable_with_pops() {
        // X -> Y.(Z), Z -> eps exposes Y
        let b = parse_brs("brs { vars: X, Y, Z, W; alphabet: a; rule r1: X -a-> Y.(Z); rule r2: Z -a-> eps; rule r3: Y.(W) -a-> X; }").unwrap();
        assert_eq!(head_reachable(&b, &v("X"), Constraint::Any).unwrap(), set(&["X", "Y", "Z"]));
    }

    #[test]
    fn infinite_run_examples() {
        let b = parse_brs("brs { vars: X, Y, Z; alphabet: a, c; rule r1: X -a-> Y.(Z); accepting rule r2: Z -c-> Z; }").unwrap();
        let d = infinite_run_seq(&b, &v("X"), RunMode::AcceptingInfinitelyOften).unwrap();
        assert_eq!(d, Decision::Yes(SeqLasso { prefix: vec![RuleId(0)], pump: vec![RuleId(1)] }));
        let b = parse_brs("brs { vars: X, Y; alphabet: a; accepting rule r1: X -a-> Y; }").unwrap();
        assert!(infinite_run_seq(&b, &v("X"), RunMode::NoAccepting).unwrap().is_no());
        let b = parse_brs("brs { vars: X, Y; alphabet: a, b; accepting rule r1: X -a-> Y; rule r2: Y -b-> Y; }").unwrap();
        let d = infinite_run_seq(&b, &v("X"), RunMode::FinitelyManyNonNullAccepting).unwrap();
        assert_eq!(d, Decision::Yes(SeqLasso { prefix: vec![RuleId(0)], pump: vec![RuleId(1)] }));
    }

    #[test]
    fn pop_free_examples() {
        let b = parse_brs("brs { vars: X, Y, Z; alphabet: a; rule r: X -a-> Y.(Z); rule s: X -a-> Y; }").unwrap();
        assert!(is_pop_free(&b));
        let b = parse_brs("brs { vars: X, Y, Z; alphabet: a; rule r: X.(Y) -a-> Z; }").unwrap();
        assert!(!is_pop_free(&b));
        assert!(is_pop_free(&parse_brs("brs { vars: X; alphabet: a; }").unwrap()));
    }

    #[test]
    fn pre_star_examples() {
        let b = parse_brs("brs { vars: X, Y; alphabet: a; rule r: X -a-> Y; }").unwrap();
        let ps = PrefixSystem::from_brs(&b).unwrap();
        let single = |y: &str| ReachAutomaton {
            states: 2,
            finals: BTreeSet::from([1]),
            transitions: BTreeSet::from([(0, v(y), 1)]),
        };
        let r = pre_star(&ps, &single("Y"), Constraint::Any);
        assert!(r.accepts(&[v("X")]) && r.accepts(&[v("Y")]));
        let b = parse_brs("brs { vars: X, Y, Z; alphabet: a; rule r: X.(Y) -a-> Z; }").unwrap();
        let ps = PrefixSystem::from_brs(&b).unwrap();
        let r = pre_star(&ps, &single("Z"), Constraint::Any);
        assert!(r.accepts(&[v("Z")]) && r.accepts(&[v("Y"), v("X")]));
        assert!(!r.accepts(&[v("X"), v("Y")]));
        let b = parse_brs("brs { vars: X; alphabet: a; }").unwrap();
        let ps = PrefixSystem::from_brs(&b).unwrap();
        assert_eq!(pre_star(&ps, &single("X"), Constraint::Any), single("X"));
    }

    #[test]
    fn word_encoding() {
        let t = crate::syntax::parse_term("A.(B.(C))").unwrap();
        let w = term_to_word(&t).unwrap();
        assert_eq!(w, vec![v("C"), v("B"), v("A")]);
        assert_eq!(word_to_term(&w), t);
        assert_eq!(term_to_word(&crate::syntax::parse_term("A || B").unwrap()), None);
    }

    const NAMES: [&str; 4] = ["A", "B", "C", "D"];

    /// Random sequential systems; `pops` admits pop and erase rules.
    fn seq_system(pops: bool) -> impl Strategy<Value = Brs> {
        let shapes = if pops { 4 } else { 2 };
        proptest::collection::vec((0..shapes, 0usize..4, 0usize..4, 0usize..4, any::<bool>()), 0..6).prop_map(
            |rs| {
                let mut src = String::from("brs { vars: A, B, C, D; alphabet: a;\n");
                for (i, (k, x, y, z, acc)) in rs.into_iter().enumerate() {
                    let (x, y, z) = (NAMES[x], NAMES[y], NAMES[z]);
                    let body = match k {
                        0 => format!("{x} -a-> {y}.({z})"),
                        1 => format!("{x} -a-> {y}"),
                        2 => format!("{x}.({y}) -a-> {z}"),
                        _ => format!("{x} -a-> eps"),
                    };
                    let acc = if acc { "accepting " } else { "" };
                    src.push_str(&format!("{acc}rule r{i}: {body};\n"));
                }
                src.push('}');
                parse_brs(&src).unwrap()
            },
        )
    }

    /// Heads of all terms reachable within `depth` steps.
    fn bfs_heads(b: &Brs, x: &Variable, c: Constraint, depth: usize) -> BTreeSet<Variable> {
        let mut seen = BTreeSet::from([ProcessTerm::atom(x)]);
        let mut frontier = vec![ProcessTerm::atom(x)];
        for _ in 0..depth {
            let mut next = Vec::new();
            for t in &frontier {
                for s in crate::brs::successors(t, b) {
                    if c.admits(b.rule(s.rule).accepting) && s.result.seq_depth() <= depth && seen.insert(s.result.clone()) {
                        next.push(s.result);
                    }
                }
            }
            frontier = next;
        }
        seen.iter().filter_map(|t| term_to_word(t).and_then(|w| w.first().cloned())).collect()
    }

    fn replays(b: &Brs, x: &Variable, l: &SeqLasso, mode: RunMode) -> bool {
        let mut rules = l.prefix.clone();
        for _ in 0..3 {
            rules.extend(&l.pump);
        }
        let Ok(d) = Derivation::from_rules(b, ProcessTerm::atom(x), &rules) else { return false };
        let acc = |rs: &[RuleId]| rs.iter().filter(|r| b.rule(**r).accepting).count();
        // the pump returns to its innermost variable
        let head = |t: &ProcessTerm| term_to_word(t).and_then(|w| w.first().cloned());
        let start = d.term(l.prefix.len());
        let after = d.term(l.prefix.len() + l.pump.len());
        head(start) == head(after)
            && !l.pump.is_empty()
            && match mode {
                RunMode::AcceptingInfinitelyOften => acc(&l.pump) >= 1,
                RunMode::NoAccepting => acc(&l.prefix) + acc(&l.pump) == 0,
                RunMode::FinitelyManyNonNullAccepting => acc(&l.prefix) >= 1 && acc(&l.pump) == 0,
            }
    }

    proptest! {
        #[test]
        fn word_steps_agree_with_terms(b in seq_system(true), w in proptest::collection::vec(0usize..4, 1..5)) {
            let w: Vec<Variable> = w.into_iter().map(|i| v(NAMES[i])).collect();
            let ps = PrefixSystem::from_brs(&b).unwrap();
            let t = word_to_term(&w);
            prop_assert_eq!(term_to_word(&t).unwrap(), w.clone());
            let by_word: BTreeSet<(RuleId, ProcessTerm)> = ps.step(&w).into_iter().map(|(r, w2)| (r, word_to_term(&w2))).collect();
            let by_term: BTreeSet<(RuleId, ProcessTerm)> = crate::brs::successors(&t, &b).into_iter().map(|s| (s.rule, s.result)).collect();
            prop_assert_eq!(by_word, by_term);
        }

        #[test]
        fn head_reachable_matches_bfs(b in seq_system(false)) {
            for x in b.vars() {
                let any = head_reachable(&b, x, Constraint::Any).unwrap();
                let nacc = head_reachable(&b, x, Constraint::NonAccepting).unwrap();
                prop_assert!(nacc.is_subset(&any));
                prop_assert_eq!(&any, &bfs_heads(&b, x, Constraint::Any, 8));
                prop_assert_eq!(&nacc, &bfs_heads(&b, x, Constraint::NonAccepting, 8));
            }
        }

        #[test]
        fn pre_star_agrees_with_summaries(b in seq_system(true)) {
            let ps = PrefixSystem::from_brs(&b).unwrap();
            let g = summary_graph(&ps);
            for x in b.vars() {
                let from = g.heads.iter().position(|h| *h == (0, x.clone())).unwrap();
                let prev = bfs_path(g.heads.len(), &g.edges, from, &|_| true);
                let by_graph: BTreeSet<Variable> = g.heads.iter().enumerate()
                    .filter(|(i, h)| h.0 == 0 && prev[*i].is_some()).map(|(_, h)| h.1.clone()).collect();
                prop_assert_eq!(head_reachable(&b, x, Constraint::Any).unwrap(), by_graph.clone());
                // heads found by bounded search are a subset
                prop_assert!(bfs_heads(&b, x, Constraint::Any, 6).is_subset(&by_graph));
                for y in &by_graph {
                    let path = head_path(&b, x, y, Constraint::Any).unwrap().unwrap();
                    let d = Derivation::from_rules(&b, ProcessTerm::atom(x), &path).unwrap();
                    let w = term_to_word(d.end()).unwrap();
                    prop_assert_eq!(w.first(), Some(y));
                }
            }
        }

        #[test]
        fn lassos_replay(b in seq_system(true)) {
            for x in b.vars() {
                for mode in [RunMode::AcceptingInfinitelyOften, RunMode::NoAccepting, RunMode::FinitelyManyNonNullAccepting] {
                    if let Decision::Yes(l) = infinite_run_seq(&b, x, mode).unwrap() {
                        prop_assert!(replays(&b, x, &l, mode), "{:?} {:?}", mode, l);
                    }
                }
            }
        }

        #[test]
        fn general_tier_agrees_on_pop_free(b in seq_system(false)) {
            let ps = PrefixSystem::from_brs(&b).unwrap();
            let g = summary_graph(&ps);
            for x in b.vars() {
                let from = g.heads.iter().position(|h| *h == (0, x.clone())).unwrap();
                for mode in [RunMode::AcceptingInfinitelyOften, RunMode::NoAccepting, RunMode::FinitelyManyNonNullAccepting] {
                    let fast = infinite_run_seq(&b, x, mode).unwrap().is_yes();
                    let general = graph_lasso(g.heads.len(), &g.edges, from, mode, &|_| true).is_some();
                    prop_assert_eq!(fast, general);
                }
            }
        }
    }
}

//! Bounded brute force over the transition system of a term: exploration,
//! lasso search for Problems 1 to 3, and ground truth for tests.

use std::collections::{BTreeSet, HashMap, VecDeque};

use petgraph::algo::kosaraju_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::brs::{successors, Brs, Derivation, RuleId};
use crate::checker::Problem;
use crate::decision::Tri;
use crate::terms::{embeds, Context, ProcessTerm, Variable};
use crate::witness::{pump_context, LassoWitness};

pub use crate::witness::replay;

pub const DEFAULT_DEPTH: usize = 12;
pub const DEFAULT_NODES: usize = 100_000;

#[derive(Clone, Debug, Serialize)]
pub struct LtsFragment {
    pub root: ProcessTerm,
    /// Canonical terms in discovery order.
    pub nodes: Vec<ProcessTerm>,
    pub edges: Vec<(usize, RuleId, usize)>,
    /// Nodes whose successors were not computed.
    pub frontier: BTreeSet<usize>,
    pub depth: usize,
    /// BFS tree: parent node and the edge index into `edges`.
    #[serde(skip)]
    pub parent: Vec<Option<(usize, usize)>>,
}

impl LtsFragment {
    pub fn saturated(&self) -> bool {
        self.frontier.is_empty()
    }

    pub fn index_of(&self, t: &ProcessTerm) -> Option<usize> {
        self.nodes.iter().position(|n| n == t)
    }

    /// Edge indices of the tree path from `from` down to `to`.
    fn tree_path(&self, from: usize, mut to: usize) -> Vec<usize> {
        let mut p = Vec::new();
        while to != from {
            let (u, e) = self.parent[to].expect("tree path");
            p.push(e);
            to = u;
        }
        p.reverse();
        p
    }

    fn derivation(&self, b: &Brs, start: usize, path: &[usize]) -> Option<Derivation> {
        let steps: Vec<(RuleId, ProcessTerm)> =
            path.iter().map(|&e| (self.edges[e].1, self.nodes[self.edges[e].2].clone())).collect();
        Derivation::from_rule_terms(b, self.nodes[start].clone(), &steps).ok()
    }
}

pub fn explore(b: &Brs, x: &Variable, depth: usize, node_budget: usize) -> LtsFragment {
    explore_from(b, &ProcessTerm::atom(x), depth, node_budget)
}

pub fn explore_from(b: &Brs, root: &ProcessTerm, depth: usize, node_budget: usize) -> LtsFragment {
    let mut f = LtsFragment {
        root: root.clone(),
        nodes: vec![root.clone()],
        edges: Vec::new(),
        frontier: BTreeSet::new(),
        depth,
        parent: vec![None],
    };
    let mut ids: HashMap<ProcessTerm, usize> = HashMap::from([(root.clone(), 0)]);
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    let mut full = false;
    while let Some((u, d)) = queue.pop_front() {
        if d >= depth || full {
            f.frontier.insert(u);
            continue;
        }
        let succ = successors(&f.nodes[u], b);
        // all-or-nothing expansion keeps non-frontier nodes complete
        let fresh = succ.iter().filter(|s| !ids.contains_key(&s.result)).count();
        if f.nodes.len() + fresh > node_budget {
            full = true;
            f.frontier.insert(u);
            continue;
        }
        for s in succ {
            let v = match ids.get(&s.result) {
                Some(&v) => v,
                None => {
                    let v = f.nodes.len();
                    ids.insert(s.result.clone(), v);
                    f.nodes.push(s.result.clone());
                    f.parent.push(Some((u, f.edges.len())));
                    queue.push_back((v, d + 1));
                    v
                }
            };
            f.edges.push((u, s.rule, v));
        }
    }
    f
}

fn counts(b: &Brs, f: &LtsFragment, path: &[usize]) -> usize {
    path.iter().filter(|&&e| b.rule(f.edges[e].1).accepting).count()
}

/// Pumps along tree paths: an edge `u -> v` where `v` contains a tree
/// ancestor of `u` as an occurrence.
fn tree_pump(b: &Brs, f: &LtsFragment, problem: Problem) -> Option<LassoWitness> {
    for (ei, &(u, _, v)) in f.edges.iter().enumerate() {
        let mut a = Some(u);
        while let Some(anc) = a {
            let (big, small) = (&f.nodes[v], &f.nodes[anc]);
            if embeds(small, big) {
                let mut pump = f.tree_path(anc, u);
                pump.push(ei);
                let prefix = f.tree_path(0, anc);
                if problem.pattern_ok(counts(b, f, &prefix), counts(b, f, &pump)) {
                    if let Some(grow) = pump_context(small, big) {
                        if let Some(w) = build(b, f, &prefix, anc, &pump, grow) {
                            return Some(w);
                        }
                    }
                }
            }
            a = f.parent[anc].map(|(p, _)| p);
        }
    }
    None
}

fn build(
    b: &Brs,
    f: &LtsFragment,
    prefix: &[usize],
    anc: usize,
    pump: &[usize],
    grow: Context,
) -> Option<LassoWitness> {
    let pd = f.derivation(b, 0, prefix)?;
    let md = f.derivation(b, anc, pump)?;
    LassoWitness::new(pd, Context::Hole, md, grow).ok()
}

/// Cycles of the explored graph: the lasso repeats exactly.
fn graph_cycle(b: &Brs, f: &LtsFragment, problem: Problem) -> Option<LassoWitness> {
    let n = f.nodes.len();
    let acc = |e: usize| b.rule(f.edges[e].1).accepting;
    // layer 1 = an accepting edge has been taken
    let layered = matches!(problem, Problem::Three);
    let nl = if layered { 2 * n } else { n };
    let lift = |x: usize, seen: bool| if layered && seen { x + n } else { x };
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nl];
    for (ei, &(u, _, v)) in f.edges.iter().enumerate() {
        let a = acc(ei);
        if problem == Problem::Two && a {
            continue;
        }
        if layered {
            adj[u].push((ei, lift(v, a)));
            adj[u + n].push((ei, v + n));
        } else {
            adj[u].push((ei, v));
        }
    }
    // which edges may lie on the cycle
    let cyc_ok = |ei: usize, x: usize| match problem {
        Problem::One | Problem::Two => true,
        Problem::Three => x >= n && !acc(ei),
    };
    let mut g: DiGraph<(), usize> = DiGraph::with_capacity(nl, 0);
    for _ in 0..nl {
        g.add_node(());
    }
    for (x, out) in adj.iter().enumerate() {
        for &(ei, y) in out {
            if cyc_ok(ei, x) {
                g.add_edge(NodeIndex::new(x), NodeIndex::new(y), ei);
            }
        }
    }
    let mut comp = vec![usize::MAX; nl];
    for (c, scc) in kosaraju_scc(&g).into_iter().enumerate() {
        for v in scc {
            comp[v.index()] = c;
        }
    }
    // reachability from the root over all (allowed) layered edges
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; nl];
    let mut seen = vec![false; nl];
    seen[0] = true;
    let mut q = VecDeque::from([0usize]);
    while let Some(x) = q.pop_front() {
        for &(ei, y) in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                prev[y] = Some((x, ei));
                q.push_back(y);
            }
        }
    }
    let unwind = |prev: &[Option<(usize, usize)>], mut y: usize, stop: usize| {
        let mut p = Vec::new();
        while y != stop {
            let (x, ei) = prev[y].expect("path");
            p.push(ei);
            y = x;
        }
        p.reverse();
        p
    };
    for e in g.edge_indices() {
        let (x, y) = g.edge_endpoints(e).map(|(x, y)| (x.index(), y.index())).expect("edge");
        let ei = g[e];
        if comp[x] != comp[y] || !seen[x] {
            continue;
        }
        if problem == Problem::One && !acc(ei) {
            continue;
        }
        // y ~> x inside the component
        let mut p2: Vec<Option<(usize, usize)>> = vec![None; nl];
        let mut s2 = vec![false; nl];
        s2[y] = true;
        let mut q = VecDeque::from([y]);
        while let Some(z) = q.pop_front() {
            for &(ej, w) in &adj[z] {
                if cyc_ok(ej, z) && comp[w] == comp[x] && !s2[w] {
                    s2[w] = true;
                    p2[w] = Some((z, ej));
                    q.push_back(w);
                }
            }
        }
        if !s2[x] {
            continue;
        }
        let prefix = unwind(&prev, x, 0);
        let mut pump = vec![ei];
        pump.extend(unwind(&p2, x, y));
        let base = |z: usize| if z >= n { z - n } else { z };
        let start = base(x);
        if let Some(w) = build(b, f, &prefix, start, &pump, Context::Hole) {
            if problem.pattern_ok(w.accepting_in_prefix(b), w.accepting_in_pump(b)) {
                return Some(w);
            }
        }
    }
    None
}

/// A lasso witness for the problem inside the explored fragment, if any.
/// Absence is not a negative answer unless the fragment is saturated.
pub fn find_witness(b: &Brs, x: &Variable, problem: Problem, depth: usize) -> Option<LassoWitness> {
    find_witness_in(b, &explore(b, x, depth, DEFAULT_NODES), problem)
}

pub fn find_witness_in(b: &Brs, f: &LtsFragment, problem: Problem) -> Option<LassoWitness> {
    tree_pump(b, f, problem).or_else(|| graph_cycle(b, f, problem))
}

#[derive(Clone, Debug)]
pub struct OracleAnswer {
    pub truth: Tri,
    pub witness: Option<LassoWitness>,
    pub saturated: bool,
    pub nodes: usize,
}

/// Yes with a witness; No when the fragment is saturated without one;
/// Unknown otherwise.
pub fn ground_truth(b: &Brs, x: &Variable, problem: Problem, depth: usize, budget: usize) -> OracleAnswer {
    let f = explore(b, x, depth, budget);
    let witness = find_witness_in(b, &f, problem);
    let truth = match (&witness, f.saturated()) {
        (Some(_), _) => Tri::Yes,
        (None, true) => Tri::No,
        (None, false) => Tri::Unknown,
    };
    OracleAnswer { truth, witness, saturated: f.saturated(), nodes: f.nodes.len() }
}

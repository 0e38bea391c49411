//! Restricted dynamic hierarchical automata: validation, the structural
//! operational semantics over configuration terms, and translation into a
//! normal-form rewrite system.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::brs::{successors, Brs, Rule};
use crate::terms::{Action, ProcessTerm, Variable};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SyAction {
    Nil,
    Halt,
    Chan(String),
    New { machine: usize, entry: String },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Node(String),
    /// `(box, node)`: a node of the machine plugged into the box.
    Boxed(String, String),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Node(q) => f.write_str(q),
            Endpoint::Boxed(b, q) => write!(f, "({b},{q})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: Endpoint,
    pub input: String,
    pub action: SyAction,
    pub to: Endpoint,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Machine {
    pub name: String,
    pub nodes: BTreeSet<String>,
    pub boxes: BTreeSet<String>,
    pub initial: BTreeSet<String>,
    pub exits: BTreeSet<String>,
    /// Box to machine index.
    pub hierarchy: BTreeMap<String, usize>,
    pub delta: Vec<Transition>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Rdha {
    pub machines: Vec<Machine>,
    pub inputs: BTreeSet<String>,
    pub channels: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub machine: String,
    pub transition: Option<usize>,
    pub clause: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.transition {
            Some(i) => write!(f, "machine {}, transition {}: {}", self.machine, i, self.clause),
            None => write!(f, "machine {}: {}", self.machine, self.clause),
        }
    }
}

impl Rdha {
    pub fn all_nodes(&self) -> impl Iterator<Item = &String> {
        self.machines.iter().flat_map(|m| m.nodes.iter())
    }

    pub fn initial_nodes(&self) -> impl Iterator<Item = &String> {
        self.machines.iter().flat_map(|m| m.initial.iter())
    }

    fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.machines.iter().flat_map(|m| m.delta.iter())
    }
}

pub fn validate(r: &Rdha) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for m in &r.machines {
        for s in m.nodes.iter().chain(m.boxes.iter()) {
            if let Some(prev) = owner.insert(s, &m.name) {
                out.push(Violation {
                    machine: m.name.clone(),
                    transition: None,
                    clause: format!("symbol {s} also declared in machine {prev}; node and box sets must be disjoint"),
                });
            }
        }
    }
    for m in &r.machines {
        let v = |i: Option<usize>, clause: String| Violation { machine: m.name.clone(), transition: i, clause };
        for q in m.initial.difference(&m.nodes) {
            out.push(v(None, format!("initial node {q} is not a node")));
        }
        for q in m.exits.difference(&m.nodes) {
            out.push(v(None, format!("exit node {q} is not a node")));
        }
        for b in &m.boxes {
            match m.hierarchy.get(b) {
                None => out.push(v(None, format!("box {b} has no machine assigned"))),
                Some(&j) if j >= r.machines.len() => {
                    out.push(v(None, format!("box {b} refers to machine index {j}")))
                }
                _ => {}
            }
        }
        for (i, t) in m.delta.iter().enumerate() {
            let mut bad = |c: String| out.push(v(Some(i), c));
            if !r.inputs.contains(&t.input) {
                bad(format!("input {} is not declared", t.input));
            }
            match &t.action {
                SyAction::Chan(g) if !r.channels.contains(g) => bad(format!("channel {g} is not declared")),
                SyAction::New { machine, entry } => match r.machines.get(*machine) {
                    None => bad(format!("NEW refers to machine index {machine}")),
                    Some(mj) if !mj.initial.contains(entry) => {
                        bad(format!("NEW entry {entry} is not an initial node of {}", mj.name))
                    }
                    _ => {}
                },
                _ => {}
            }
            let boxed_machine = |b: &str| m.hierarchy.get(b).and_then(|&j| r.machines.get(j));
            match &t.from {
                Endpoint::Node(q) => {
                    if !m.nodes.contains(q) {
                        bad(format!("source {q} is not a node of the machine"));
                    } else if m.exits.contains(q) {
                        bad(format!("source {q} is an exit node"));
                    }
                }
                Endpoint::Boxed(b, q) => match boxed_machine(b) {
                    None => bad(format!("source box {b} is not a box of the machine")),
                    Some(mj) if !mj.exits.contains(q) => {
                        bad(format!("source ({b},{q}) requires {q} to be an exit node of {}", mj.name))
                    }
                    _ => {}
                },
            }
            match &t.to {
                Endpoint::Node(q) => {
                    if !m.nodes.contains(q) {
                        bad(format!("target {q} is not a node of the machine"));
                    }
                }
                Endpoint::Boxed(b, q) => match boxed_machine(b) {
                    None => bad(format!("target box {b} is not a box of the machine")),
                    Some(mj) if !mj.initial.contains(q) => {
                        bad(format!("target ({b},{q}) requires {q} to be an initial node of {}", mj.name))
                    }
                    _ => {}
                },
            }
            let from_node = matches!(t.from, Endpoint::Node(_));
            let to_node = matches!(t.to, Endpoint::Node(_));
            if !matches!(t.action, SyAction::Nil | SyAction::Halt) && !(from_node && to_node) {
                bad("action other than NIL/HALT requires u,v to be nodes".to_string());
            }
            if t.action == SyAction::Halt {
                match &t.to {
                    Endpoint::Node(q) if m.exits.contains(q) => {}
                    _ => bad("HALT requires v to be an exit node".to_string()),
                }
            }
            if !from_node && !to_node {
                bad("source and target cannot both be box endpoints".to_string());
            }
        }
    }
    out
}

fn sym(name: &str) -> Variable {
    Variable::new(name).expect("validated symbol")
}

fn node_steps(r: &Rdha, q: &str, out: &mut BTreeSet<(String, ProcessTerm)>) {
    for t in r.transitions() {
        if t.from != Endpoint::Node(q.to_string()) {
            continue;
        }
        let res = match (&t.action, &t.to) {
            (SyAction::Nil, Endpoint::Node(q2)) => ProcessTerm::Atom(sym(q2)),
            (SyAction::Nil, Endpoint::Boxed(b, p)) => ProcessTerm::seq(sym(b), ProcessTerm::Atom(sym(p))),
            (SyAction::Halt, _) => ProcessTerm::Epsilon,
            (SyAction::New { entry, .. }, Endpoint::Node(q2)) => {
                ProcessTerm::par2(ProcessTerm::Atom(sym(q2)), ProcessTerm::Atom(sym(entry)))
            }
            _ => continue,
        };
        out.insert((t.input.clone(), res));
    }
}

fn conf_steps(r: &Rdha, c: &ProcessTerm, out: &mut BTreeSet<(String, ProcessTerm)>) {
    match c {
        ProcessTerm::Epsilon => {}
        ProcessTerm::Atom(q) => node_steps(r, q.name(), out),
        ProcessTerm::Seq(b, inner) => {
            if let ProcessTerm::Atom(q) = &**inner {
                let from = Endpoint::Boxed(b.name().to_string(), q.name().to_string());
                for t in r.transitions() {
                    if let (true, SyAction::Nil, Endpoint::Node(q2)) = (t.from == from, &t.action, &t.to) {
                        out.insert((t.input.clone(), ProcessTerm::Atom(sym(q2))));
                    }
                }
            }
            let mut sub = BTreeSet::new();
            conf_steps(r, inner, &mut sub);
            for (a, t2) in sub {
                out.insert((a, ProcessTerm::seq(b.clone(), t2)));
            }
        }
        ProcessTerm::Par(fs) => {
            let rest = |skip: &[usize]| -> Vec<ProcessTerm> {
                fs.iter().enumerate().filter(|(k, _)| !skip.contains(k)).map(|(_, f)| f.clone()).collect()
            };
            for i in 0..fs.len() {
                for j in i + 1..fs.len() {
                    let (ProcessTerm::Atom(q1), ProcessTerm::Atom(q2)) = (&fs[i], &fs[j]) else { continue };
                    for t1 in r.transitions() {
                        if !matches!(t1.action, SyAction::Chan(_))
                            || t1.from != Endpoint::Node(q1.name().to_string())
                        {
                            continue;
                        }
                        for t2 in r.transitions() {
                            if t2.action != t1.action
                                || t2.input != t1.input
                                || t2.from != Endpoint::Node(q2.name().to_string())
                            {
                                continue;
                            }
                            let (Endpoint::Node(v1), Endpoint::Node(v2)) = (&t1.to, &t2.to) else { continue };
                            let mut fs2 = rest(&[i, j]);
                            fs2.push(ProcessTerm::Atom(sym(v1)));
                            fs2.push(ProcessTerm::Atom(sym(v2)));
                            out.insert((t1.input.clone(), ProcessTerm::par(fs2)));
                        }
                    }
                }
            }
            for (i, f) in fs.iter().enumerate() {
                let mut sub = BTreeSet::new();
                conf_steps(r, f, &mut sub);
                for (a, f2) in sub {
                    let mut fs2 = rest(&[i]);
                    fs2.push(f2);
                    out.insert((a, ProcessTerm::par(fs2)));
                }
            }
        }
    }
}

/// One-step successors of a configuration, as (input, configuration).
pub fn conf_successors(c: &ProcessTerm, r: &Rdha) -> Vec<(String, ProcessTerm)> {
    let mut out = BTreeSet::new();
    conf_steps(r, c, &mut out);
    out.into_iter().collect()
}

/// The variable standing for a node or box.
pub fn var_of(symbol: &str) -> Variable {
    sym(&format!("X_{symbol}"))
}

/// Renames every node/box symbol `s` of a configuration to `X_s`.
pub fn map_config(c: &ProcessTerm) -> ProcessTerm {
    match c {
        ProcessTerm::Epsilon => ProcessTerm::Epsilon,
        ProcessTerm::Atom(q) => ProcessTerm::Atom(var_of(q.name())),
        ProcessTerm::Seq(b, t) => ProcessTerm::seq(var_of(b.name()), map_config(t)),
        ProcessTerm::Par(fs) => ProcessTerm::par(fs.iter().map(map_config)),
    }
}

pub fn to_prs(r: &Rdha) -> Brs {
    let x = |s: &str| ProcessTerm::Atom(var_of(s));
    let mut vars = BTreeSet::new();
    for m in &r.machines {
        for s in m.nodes.iter().chain(m.boxes.iter()) {
            vars.insert(var_of(s));
        }
    }
    let alphabet: BTreeSet<Action> = r.inputs.iter().map(|a| Action::new(a).expect("input symbol")).collect();
    let mut seen = BTreeSet::new();
    let mut rules = Vec::new();
    let mut add = |lhs: ProcessTerm, a: &str, rhs: ProcessTerm| {
        let label = Action::new(a).expect("input symbol");
        if seen.insert((lhs.clone(), label.clone(), rhs.clone())) {
            let name = format!("r{}", rules.len() + 1);
            rules.push(Rule::new(&name, lhs, label, rhs, false));
        }
    };
    for t in r.transitions() {
        match (&t.from, &t.action, &t.to) {
            (Endpoint::Node(q), SyAction::Nil, Endpoint::Node(q2)) => add(x(q), &t.input, x(q2)),
            (Endpoint::Node(q), SyAction::Halt, _) => add(x(q), &t.input, ProcessTerm::Epsilon),
            (Endpoint::Node(q), SyAction::Nil, Endpoint::Boxed(b, p)) => {
                add(x(q), &t.input, ProcessTerm::seq(var_of(b), x(p)))
            }
            (Endpoint::Boxed(b, p), SyAction::Nil, Endpoint::Node(q)) => {
                add(ProcessTerm::seq(var_of(b), x(p)), &t.input, x(q))
            }
            (Endpoint::Node(q), SyAction::New { entry, .. }, Endpoint::Node(q2)) => {
                add(x(q), &t.input, ProcessTerm::par2(x(q2), x(entry)))
            }
            _ => {}
        }
    }
    let chans: Vec<&Transition> = r.transitions().filter(|t| matches!(t.action, SyAction::Chan(_))).collect();
    for t1 in &chans {
        for t2 in &chans {
            if t1.action != t2.action || t1.input != t2.input {
                continue;
            }
            if let (Endpoint::Node(q1), Endpoint::Node(v1), Endpoint::Node(q2), Endpoint::Node(v2)) =
                (&t1.from, &t1.to, &t2.from, &t2.to)
            {
                add(ProcessTerm::par2(x(q1), x(q2)), &t1.input, ProcessTerm::par2(x(v1), x(v2)));
            }
        }
    }
    Brs::new(vars, alphabet, rules).expect("translation declares every symbol")
}

/// Breadth-first comparison of the configuration LTS with the LTS of
/// `prs` under the renaming `s -> X_s`, from every initial node, up to
/// `depth` steps.
pub fn iso_check_against(r: &Rdha, prs: &Brs, depth: usize) -> bool {
    for q0 in r.initial_nodes() {
        let start = ProcessTerm::Atom(sym(q0));
        let mut seen = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([(start, 0usize)]);
        while let Some((c, d)) = queue.pop_front() {
            let left = conf_successors(&c, r);
            let mapped: BTreeSet<(String, ProcessTerm)> =
                left.iter().map(|(a, c2)| (a.clone(), map_config(c2))).collect();
            let right: BTreeSet<(String, ProcessTerm)> = successors(&map_config(&c), prs)
                .into_iter()
                .map(|s| (prs.rule(s.rule).label.name().to_string(), s.result))
                .collect();
            if mapped != right || mapped.len() != left.len() {
                return false;
            }
            if d < depth {
                for (_, c2) in left {
                    if seen.insert(c2.clone()) {
                        queue.push_back((c2, d + 1));
                    }
                }
            }
        }
    }
    true
}

pub fn bounded_iso_check(r: &Rdha, depth: usize) -> bool {
    iso_check_against(r, &to_prs(r), depth)
}

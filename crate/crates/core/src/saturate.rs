//! Decomposition of a normal-form system into a parallel system (with the
//! `Z_ACC`/`Z_NOT_ACC` extension) and a pop-free sequential system.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::brs::{classify_rule, successors, Brs, BrsError, Derivation, Rule, RuleId, RuleKind, Step};
use crate::decision::Decision;
use crate::petri::{
    coverability, exact_reachability, flagged_coverability, par_brs_to_net, FlagMode, Marking, Net,
    NetTransition, ReachMode, DEFAULT_BUDGET,
};
use crate::terms::{embeds, Action, ProcessTerm, Variable, ACC, DOLLAR, HASH, NACC};

pub const FINITE_BUDGET: usize = 20_000;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum QueryKind {
    /// `Z ->σ ε`, σ accepting or the push accepting.
    EpsAccepting,
    /// `Z ->σ ε`, everything non-accepting.
    EpsNonAccepting,
    /// `Z ->σ W` before an accepting-side pop.
    PopAccepting,
    PopNonAccepting,
    FiniteAccepting,
    Unconditional,
    CoverAccepting,
    CoverNonAccepting,
    Copied,
}

/// Why a rule is in one of the synthesized systems. `inner` sequences are
/// rule ids of the parallel system; it only ever grows by appending, so
/// ids taken at any stage stay valid in the final one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Justification {
    Source(RuleId),
    Summary { kind: QueryKind, push: RuleId, pop: Option<RuleId>, inner: Vec<RuleId> },
    AccFlag { push: RuleId, finite: Option<Derivation> },
    NotAccFlag { push: RuleId },
    Cover { kind: QueryKind, inner: Vec<RuleId> },
}

impl Justification {
    pub fn kind(&self) -> QueryKind {
        match self {
            Justification::Source(_) => QueryKind::Copied,
            Justification::Summary { kind, .. } | Justification::Cover { kind, .. } => *kind,
            Justification::AccFlag { finite: Some(_), .. } => QueryKind::FiniteAccepting,
            Justification::AccFlag { finite: None, .. } | Justification::NotAccFlag { .. } => {
                QueryKind::Unconditional
            }
        }
    }

    pub fn witness_len(&self) -> usize {
        match self {
            Justification::Source(_) | Justification::NotAccFlag { .. } => 1,
            Justification::Summary { inner, pop, .. } => 1 + inner.len() + usize::from(pop.is_some()),
            Justification::AccFlag { finite, .. } => 1 + finite.as_ref().map_or(0, |d| d.len()),
            Justification::Cover { inner, .. } => inner.len(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParallelBuild {
    pub rbar: Brs,
    pub just: Vec<Justification>,
    pub any_unknown: bool,
    pub iterations: usize,
    pub unknown: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct DecompositionBundle {
    pub source: Brs,
    pub rpar: Brs,
    pub rseq: Brs,
    pub rpar_just: Vec<Justification>,
    pub rseq_just: Vec<Justification>,
    pub any_unknown: bool,
    pub iterations: usize,
    /// Descriptions of the queries that came back Unknown.
    pub unknown: Vec<String>,
}

#[derive(Copy, Clone, Debug)]
pub struct Budgets {
    pub reach: usize,
    pub finite: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { reach: DEFAULT_BUDGET, finite: FINITE_BUDGET }
    }
}

pub(crate) fn push_parts(r: &Rule) -> Option<(Variable, Variable, Variable)> {
    match (&r.lhs, &r.rhs) {
        (ProcessTerm::Atom(x), ProcessTerm::Seq(y, z)) => match &**z {
            ProcessTerm::Atom(z) => Some((x.clone(), y.clone(), z.clone())),
            _ => None,
        },
        _ => None,
    }
}

pub(crate) fn pop_parts(r: &Rule) -> Option<(Variable, Variable, Variable)> {
    match (&r.lhs, &r.rhs) {
        (ProcessTerm::Seq(y, w), ProcessTerm::Atom(w2)) => match &**w {
            ProcessTerm::Atom(w) => Some((y.clone(), w.clone(), w2.clone())),
            _ => None,
        },
        _ => None,
    }
}

fn push_rules(b: &Brs) -> Vec<(RuleId, Variable, Variable, Variable)> {
    b.ids()
        .filter(|&i| classify_rule(b.rule(i)) == RuleKind::SeqPush)
        .filter_map(|i| push_parts(b.rule(i)).map(|(x, y, z)| (i, x, y, z)))
        .collect()
}

fn pop_rules(b: &Brs) -> Vec<(RuleId, Variable, Variable, Variable)> {
    b.ids()
        .filter(|&i| classify_rule(b.rule(i)) == RuleKind::SeqPop)
        .filter_map(|i| pop_parts(b.rule(i)).map(|(y, w, w2)| (i, y, w, w2)))
        .collect()
}

fn extended_alphabet(b: &Brs) -> BTreeSet<Action> {
    let mut a = b.alphabet().clone();
    for r in [HASH, DOLLAR, ACC, NACC] {
        a.insert(Action::reserved(r));
    }
    a
}

fn summary_rule(x: &Variable, y: &Variable, accepting: bool) -> Rule {
    let (tag, label) = if accepting { (DOLLAR, DOLLAR) } else { (HASH, HASH) };
    Rule::new(
        &format!("{tag}{x}.{y}"),
        ProcessTerm::atom(x),
        Action::reserved(label),
        ProcessTerm::atom(y),
        accepting,
    )
}

fn same_rule(a: &Rule, b: &Rule) -> bool {
    a.lhs == b.lhs && a.label == b.label && a.rhs == b.rhs && a.accepting == b.accepting
}

type QueryKey = (Variable, Option<Variable>, ReachMode);

/// Memo of reachability answers against the current rule set; cleared
/// whenever a rule is added.
#[derive(Default)]
struct QueryCache {
    epoch: usize,
    memo: HashMap<QueryKey, Decision<Vec<usize>>>,
}

impl QueryCache {
    fn bump(&mut self) {
        self.epoch += 1;
        self.memo.clear();
    }
}

struct Saturation<'a> {
    source: &'a Brs,
    vars: BTreeSet<Variable>,
    alphabet: BTreeSet<Action>,
    rules: Vec<Rule>,
    just: Vec<Justification>,
    net: Net,
    cache: QueryCache,
    budget: usize,
}

impl Saturation<'_> {
    fn current(&self) -> Brs {
        Brs::new(self.vars.clone(), self.alphabet.clone(), self.rules.clone())
            .expect("synthesized rules are well formed")
    }

    fn has(&self, r: &Rule) -> bool {
        self.rules.iter().any(|q| same_rule(q, r))
    }

    fn add(&mut self, r: Rule, j: Justification) {
        self.rules.push(r);
        self.just.push(j);
        self.net = par_brs_to_net(&self.current()).expect("parallel by construction");
        self.cache.bump();
    }

    fn query(&mut self, z: &Variable, target: Option<&Variable>, mode: ReachMode) -> Decision<Vec<usize>> {
        let key = (z.clone(), target.cloned(), mode);
        if let Some(d) = self.cache.memo.get(&key) {
            return d.clone();
        }
        let n = self.net.place_count();
        let init = Marking::unit(n, self.net.place_of(z).expect("declared variable"));
        let goal = match target {
            Some(w) => Marking::unit(n, self.net.place_of(w).expect("declared variable")),
            None => Marking::zero(n),
        };
        let d = exact_reachability(&self.net, &init, &goal, mode, self.budget);
        self.cache.memo.insert(key, d.clone());
        d
    }
}

/// Saturation of the parallel system, returning the rule justifications.
pub fn saturate_parallel(b: &Brs, budget: usize) -> Result<ParallelBuild, BrsError> {
    b.check_normal_form()?;
    let rules: Vec<Rule> = b.rules().iter().filter(|r| classify_rule(r) == RuleKind::Par).cloned().collect();
    let just = b
        .ids()
        .filter(|&i| classify_rule(b.rule(i)) == RuleKind::Par)
        .map(Justification::Source)
        .collect();
    let mut s = Saturation {
        source: b,
        vars: b.vars().clone(),
        alphabet: extended_alphabet(b),
        rules,
        just,
        net: Net { places: vec![], vars: vec![], transitions: vec![] },
        cache: QueryCache::default(),
        budget,
    };
    s.net = par_brs_to_net(&s.current())?;
    let pushes = push_rules(b);
    let pops = pop_rules(b);
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut flag = false;
        let mut unknown = Vec::new();
        for (p, x, y, z) in &pushes {
            let p_acc = s.source.rule(*p).accepting;
            let mut attempt = |s: &mut Saturation,
                               target: Option<&Variable>,
                               to: &Variable,
                               accepting: bool,
                               mode: ReachMode,
                               kind: QueryKind,
                               pop: Option<RuleId>| {
                let r = summary_rule(x, to, accepting);
                if s.has(&r) {
                    return;
                }
                match s.query(z, target, mode) {
                    Decision::Yes(w) => {
                        let inner = w.into_iter().map(RuleId).collect();
                        s.add(r, Justification::Summary { kind, push: *p, pop, inner });
                        flag = true;
                    }
                    Decision::No => {}
                    Decision::Unknown(why) => {
                        unknown.push(format!("{kind:?} from {z} for {}: {why}", s.source.rule(*p).name))
                    }
                }
            };
            let mode = if p_acc { ReachMode::Any } else { ReachMode::AcceptingSeen };
            attempt(&mut s, None, y, true, mode, QueryKind::EpsAccepting, None);
            if !p_acc {
                attempt(&mut s, None, y, false, ReachMode::NoneAccepting, QueryKind::EpsNonAccepting, None);
            }
            for (q, y2, w, w2) in &pops {
                if y2 != y {
                    continue;
                }
                let q_acc = s.source.rule(*q).accepting;
                let mode = if p_acc || q_acc { ReachMode::Any } else { ReachMode::AcceptingSeen };
                attempt(&mut s, Some(w), w2, true, mode, QueryKind::PopAccepting, Some(*q));
                if !p_acc && !q_acc {
                    attempt(
                        &mut s,
                        Some(w),
                        w2,
                        false,
                        ReachMode::NoneAccepting,
                        QueryKind::PopNonAccepting,
                        Some(*q),
                    );
                }
            }
        }
        if !flag {
            let rbar = s.current();
            return Ok(ParallelBuild {
                rbar,
                just: s.just,
                any_unknown: !unknown.is_empty(),
                iterations,
                unknown,
            });
        }
    }
}

/// The parallel system of the saturation and whether some query that
/// could have added a rule stayed Unknown.
pub fn build_parallel_brs(b: &Brs) -> Result<(Brs, bool), BrsError> {
    let pb = saturate_parallel(b, DEFAULT_BUDGET)?;
    Ok((pb.rbar, pb.any_unknown))
}

/// Searches the full system from `z` for a derivation whose last step uses
/// an accepting rule. Terms that occur inside one of their ancestors are
/// not expanded.
pub fn finite_accepting_derivation(b: &Brs, z: &Variable) -> Decision<Derivation> {
    finite_accepting_search(b, z, FINITE_BUDGET)
}

pub fn finite_accepting_search(b: &Brs, z: &Variable, budget: usize) -> Decision<Derivation> {
    struct Node {
        term: ProcessTerm,
        parent: Option<(usize, Step)>,
        leaves: usize,
    }
    let root = ProcessTerm::atom(z);
    let mut arena = vec![Node { term: root.clone(), parent: None, leaves: 1 }];
    let mut index: HashMap<ProcessTerm, usize> = HashMap::from([(root.clone(), 0)]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for step in successors(&arena[i].term, b) {
            if b.rule(step.rule).accepting {
                let mut steps = vec![step];
                let mut cur = i;
                while let Some((prev, st)) = &arena[cur].parent {
                    steps.push(st.clone());
                    cur = *prev;
                }
                steps.reverse();
                return Decision::Yes(Derivation { start: root, steps });
            }
            if index.contains_key(&step.result) {
                continue;
            }
            let size = step.result.leaves();
            let mut anc = Some(i);
            let mut subsumed = false;
            while let Some(a) = anc {
                if arena[a].leaves >= size && embeds(&step.result, &arena[a].term) {
                    subsumed = true;
                    break;
                }
                anc = arena[a].parent.as_ref().map(|(p, _)| *p);
            }
            if subsumed {
                continue;
            }
            if arena.len() >= budget {
                return Decision::Unknown(format!("finite accepting search exceeded {budget} terms"));
            }
            index.insert(step.result.clone(), arena.len());
            queue.push_back(arena.len());
            arena.push(Node { term: step.result.clone(), parent: Some((i, step)), leaves: size });
        }
    }
    Decision::No
}

/// Complete refutation used when the bounded search gives up: with a
/// finished parallel saturation, an accepting occurrence is reachable from
/// `z` iff in `rbar` plus "enter" transitions `X -> Z'` for every push
/// `X -> Y.(Z')` some accepting transition, or the left side of an
/// accepting push, becomes coverable.
fn accepting_refuted(b: &Brs, rbar: &Brs, z: &Variable) -> bool {
    let Ok(mut net) = par_brs_to_net(rbar) else { return false };
    let n = net.place_count();
    let pushes = push_rules(b);
    for (p, x, _, z2) in &pushes {
        let mut pre = vec![0; n];
        let mut post = vec![0; n];
        pre[net.place_of(x).expect("declared")] += 1;
        post[net.place_of(z2).expect("declared")] += 1;
        net.transitions.push(NetTransition {
            pre,
            post,
            label: Action::reserved(HASH),
            accepting: false,
            origin: *p,
        });
    }
    let init = Marking::unit(n, net.place_of(z).expect("declared"));
    let mut targets: Vec<Marking> =
        net.transitions.iter().filter(|t| t.accepting).map(|t| Marking(t.pre.clone())).collect();
    for (p, x, _, _) in &pushes {
        if b.rule(*p).accepting {
            targets.push(Marking::unit(n, net.place_of(x).expect("declared")));
        }
    }
    targets.iter().all(|m| coverability(&net, &init, m).is_no())
}

#[derive(Clone, Debug)]
pub struct FlagBuild {
    pub rpar: Brs,
    pub just: Vec<Justification>,
    pub any_unknown: bool,
    pub unknown: Vec<String>,
}

pub fn extend_with_flags(b: &Brs, rbar: &Brs) -> Brs {
    let just = vec![Justification::Source(RuleId(0)); rbar.rules().len()];
    flags_with(b, rbar, just, false, FINITE_BUDGET).rpar
}

/// Adds `X -@acc-> Z_ACC` and `X -@nacc-> Z_NOT_ACC` for the push rules.
/// `rbar_unknown` tells whether `rbar` may be missing rules, in which case
/// the complete refutation is not available.
pub fn flags_with(
    b: &Brs,
    rbar: &Brs,
    mut just: Vec<Justification>,
    rbar_unknown: bool,
    budget: usize,
) -> FlagBuild {
    let mut vars = rbar.vars().clone();
    vars.insert(Variable::z_acc());
    vars.insert(Variable::z_not_acc());
    let mut alphabet = rbar.alphabet().clone();
    alphabet.extend(extended_alphabet(b));
    let mut rules = rbar.rules().to_vec();
    let mut unknown = Vec::new();
    let mut finite: HashMap<Variable, Decision<Derivation>> = HashMap::new();
    for (p, x, _, z) in push_rules(b) {
        let acc = Rule::new(
            &format!("{ACC}.{x}"),
            ProcessTerm::atom(&x),
            Action::reserved(ACC),
            ProcessTerm::atom(&Variable::z_acc()),
            true,
        );
        let nacc = Rule::new(
            &format!("{NACC}.{x}"),
            ProcessTerm::atom(&x),
            Action::reserved(NACC),
            ProcessTerm::atom(&Variable::z_not_acc()),
            false,
        );
        if b.rule(p).accepting {
            if !rules.iter().any(|q| same_rule(q, &acc)) {
                rules.push(acc);
                just.push(Justification::AccFlag { push: p, finite: None });
            }
            continue;
        }
        let d = finite
            .entry(z.clone())
            .or_insert_with(|| {
                if !rbar_unknown && accepting_refuted(b, rbar, &z) {
                    Decision::No
                } else {
                    finite_accepting_search(b, &z, budget)
                }
            })
            .clone();
        match d {
            Decision::Yes(w) => {
                if !rules.iter().any(|q| same_rule(q, &acc)) {
                    rules.push(acc);
                    just.push(Justification::AccFlag { push: p, finite: Some(w) });
                }
            }
            Decision::No => {}
            Decision::Unknown(why) => unknown.push(format!("FiniteAccepting from {z}: {why}")),
        }
        if !rules.iter().any(|q| same_rule(q, &nacc)) {
            rules.push(nacc);
            just.push(Justification::NotAccFlag { push: p });
        }
    }
    let rpar = Brs::new(vars, alphabet, rules).expect("synthesized rules are well formed");
    FlagBuild { rpar, just, any_unknown: !unknown.is_empty(), unknown }
}

pub fn build_sequential_brs(b: &Brs, rpar: &Brs) -> Result<(Brs, bool), BrsError> {
    let (rseq, _) = sequential_with(b, rpar)?;
    Ok((rseq, false))
}

/// Push rules of `b` plus `X -#-> Y` / `X -$-> Y` from coverability in the
/// parallel system. Coverability is complete, so nothing is ever Unknown.
pub fn sequential_with(b: &Brs, rpar: &Brs) -> Result<(Brs, Vec<Justification>), BrsError> {
    let net = par_brs_to_net(rpar)?;
    let n = net.place_count();
    let mut rules = Vec::new();
    let mut just = Vec::new();
    for (p, ..) in push_rules(b) {
        rules.push(b.rule(p).clone());
        just.push(Justification::Source(p));
    }
    for x in b.vars() {
        let init = Marking::unit(n, net.place_of(x).expect("declared"));
        for y in b.vars() {
            let target = Marking::unit(n, net.place_of(y).expect("declared"));
            for (mode, accepting, kind) in [
                (FlagMode::NoneAcceptingAndNonNull, false, QueryKind::CoverNonAccepting),
                (FlagMode::AcceptingSeen, true, QueryKind::CoverAccepting),
            ] {
                if let Decision::Yes(w) = flagged_coverability(&net, &init, &target, mode) {
                    rules.push(summary_rule(x, y, accepting));
                    just.push(Justification::Cover { kind, inner: w.into_iter().map(RuleId).collect() });
                }
            }
        }
    }
    let mut alphabet = b.alphabet().clone();
    alphabet.insert(Action::reserved(HASH));
    alphabet.insert(Action::reserved(DOLLAR));
    Ok((Brs::new(b.vars().clone(), alphabet, rules)?, just))
}

pub fn decompose(b: &Brs) -> Result<DecompositionBundle, BrsError> {
    decompose_with(b, Budgets::default())
}

pub fn decompose_with(b: &Brs, budgets: Budgets) -> Result<DecompositionBundle, BrsError> {
    let pb = saturate_parallel(b, budgets.reach)?;
    let fb = flags_with(b, &pb.rbar, pb.just, pb.any_unknown, budgets.finite);
    let (rseq, rseq_just) = sequential_with(b, &fb.rpar)?;
    let mut unknown = pb.unknown;
    unknown.extend(fb.unknown);
    Ok(DecompositionBundle {
        source: b.clone(),
        rpar: fb.rpar,
        rseq,
        rpar_just: fb.just,
        rseq_just,
        any_unknown: pb.any_unknown || fb.any_unknown,
        iterations: pb.iterations,
        unknown,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProvenanceEntry {
    pub system: &'static str,
    pub rule: String,
    pub kind: QueryKind,
    #[serde(rename = "witnessLength")]
    pub witness_length: usize,
    pub justification: Justification,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub entries: Vec<ProvenanceEntry>,
    #[serde(rename = "anyUnknown")]
    pub any_unknown: bool,
    pub iterations: usize,
    pub unknown: Vec<String>,
}

impl DecompositionBundle {
    /// Synthesized `#`/`$` rules of the parallel system.
    pub fn summary_count(&self) -> usize {
        self.rpar_just.iter().filter(|j| matches!(j, Justification::Summary { .. })).count()
    }

    pub fn flag_count(&self) -> usize {
        self.rpar_just
            .iter()
            .filter(|j| matches!(j, Justification::AccFlag { .. } | Justification::NotAccFlag { .. }))
            .count()
    }

    pub fn provenance(&self) -> Provenance {
        let mut entries = Vec::new();
        for (system, b, js) in [("rpar", &self.rpar, &self.rpar_just), ("rseq", &self.rseq, &self.rseq_just)] {
            for (r, j) in b.rules().iter().zip(js) {
                if matches!(j, Justification::Source(_)) {
                    continue;
                }
                entries.push(ProvenanceEntry {
                    system,
                    rule: r.to_string(),
                    kind: j.kind(),
                    witness_length: j.witness_len(),
                    justification: j.clone(),
                });
            }
        }
        Provenance {
            entries,
            any_unknown: self.any_unknown,
            iterations: self.iterations,
            unknown: self.unknown.clone(),
        }
    }

    /// Re-runs every saturation query against the final parallel system and
    /// lists the mismatches between "rule present" and "query Yes".
    /// Unknown answers are skipped.
    pub fn recheck(&self, budget: usize) -> Vec<String> {
        let b = &self.source;
        let rbar_rules: Vec<Rule> = self
            .rpar
            .rules()
            .iter()
            .zip(&self.rpar_just)
            .filter(|(_, j)| matches!(j, Justification::Source(_) | Justification::Summary { .. }))
            .map(|(r, _)| r.clone())
            .collect();
        let rbar = Brs::new(b.vars().clone(), extended_alphabet(b), rbar_rules.clone())
            .expect("subset of a valid system");
        let net = par_brs_to_net(&rbar).expect("parallel");
        let n = net.place_count();
        let unit = |v: &Variable| Marking::unit(n, net.place_of(v).expect("declared"));
        let mut bad = Vec::new();
        let mut check = |z: &Variable, target: Option<&Variable>, mode, r: Rule| {
            let goal = target.map_or(Marking::zero(n), &unit);
            let d = exact_reachability(&net, &unit(z), &goal, mode, budget);
            let present = rbar_rules.iter().any(|q| same_rule(q, &r));
            match d {
                Decision::Yes(_) if !present => bad.push(format!("missing {r}")),
                Decision::No if present => {
                    // present but not justified by this query; another
                    // push/pop pair may justify it
                }
                _ => {}
            }
        };
        for (p, x, y, z) in push_rules(b) {
            let p_acc = b.rule(p).accepting;
            check(&z, None, if p_acc { ReachMode::Any } else { ReachMode::AcceptingSeen }, summary_rule(&x, &y, true));
            if !p_acc {
                check(&z, None, ReachMode::NoneAccepting, summary_rule(&x, &y, false));
            }
            for (q, y2, w, w2) in pop_rules(b) {
                if y2 != y {
                    continue;
                }
                let q_acc = b.rule(q).accepting;
                let mode = if p_acc || q_acc { ReachMode::Any } else { ReachMode::AcceptingSeen };
                check(&z, Some(&w), mode, summary_rule(&x, &w2, true));
                if !p_acc && !q_acc {
                    check(&z, Some(&w), ReachMode::NoneAccepting, summary_rule(&x, &w2, false));
                }
            }
        }
        // every present summary rule must be re-justified by some query
        for (r, j) in self.rpar.rules().iter().zip(&self.rpar_just) {
            let Justification::Summary { push, pop, .. } = j else { continue };
            let (_, _, z) = push_parts(b.rule(*push)).expect("push");
            let target = pop.map(|q| pop_parts(b.rule(q)).expect("pop").1);
            let p_acc = b.rule(*push).accepting;
            let q_acc = pop.is_some_and(|q| b.rule(q).accepting);
            let mode = if !r.accepting {
                ReachMode::NoneAccepting
            } else if p_acc || q_acc {
                ReachMode::Any
            } else {
                ReachMode::AcceptingSeen
            };
            let goal = target.as_ref().map_or(Marking::zero(n), &unit);
            if exact_reachability(&net, &unit(&z), &goal, mode, budget).is_no() {
                bad.push(format!("unjustified {r}"));
            }
        }
        bad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqeng::is_pop_free;

    fn brs(src: &str) -> Brs {
        src.parse().unwrap()
    }

    fn has(b: &Brs, lhs: &str, label: &str, rhs: &str, acc: bool) -> bool {
        b.rules().iter().any(|r| {
            r.lhs.to_string() == lhs && r.label.name() == label && r.rhs.to_string() == rhs && r.accepting == acc
        })
    }

    #[test]
    fn hash_from_erasing_callee() {
        let b = brs("brs { vars: X, Y, Z; alphabet: a, b; rule p1: X -a-> Y.(Z); rule p2: Z -b-> eps; }");
        let (r, unk) = build_parallel_brs(&b).unwrap();
        assert!(!unk);
        assert!(has(&r, "X", "#", "Y", false));
        assert!(!has(&r, "X", "$", "Y", true));
    }

    #[test]
    fn dollar_from_accepting_push() {
        let b = brs("brs { vars: X, Y, Z; alphabet: a, b; accepting rule p1: X -a-> Y.(Z); rule p2: Z -b-> eps; }");
        let (r, _) = build_parallel_brs(&b).unwrap();
        assert!(has(&r, "X", "$", "Y", true));
        assert!(!has(&r, "X", "#", "Y", false));
    }

    #[test]
    fn no_push_rules_one_iteration() {
        let b = brs("brs { vars: X, Y; alphabet: a; rule r: X -a-> X || Y; }");
        let pb = saturate_parallel(&b, DEFAULT_BUDGET).unwrap();
        assert_eq!(pb.iterations, 1);
        assert_eq!(pb.rbar.rules(), b.rules());
    }

    #[test]
    fn pop_summaries() {
        let b = brs(
            "brs { vars: X, Y, Z, W, V; alphabet: a, b, c;
               rule p1: X -a-> Y.(Z); rule p2: Z -b-> W; accepting rule p3: Y.(W) -c-> V; }",
        );
        let (r, _) = build_parallel_brs(&b).unwrap();
        assert!(has(&r, "X", "$", "V", true));
        assert!(!has(&r, "X", "#", "V", false));
    }

    #[test]
    fn nested_summaries_need_iterations() {
        let b = brs(
            "brs { vars: X, Y, Z, U, V; alphabet: a, b;
               rule p1: X -a-> Y.(Z); rule p2: Z -a-> U.(V); rule p3: V -b-> eps; rule p4: U -b-> eps; }",
        );
        let pb = saturate_parallel(&b, DEFAULT_BUDGET).unwrap();
        assert!(has(&pb.rbar, "Z", "#", "U", false));
        assert!(has(&pb.rbar, "X", "#", "Y", false));
        assert!(pb.iterations >= 2);
    }

    #[test]
    fn finite_accepting_examples() {
        let b = brs("brs { vars: Z, W; alphabet: a; accepting rule r: Z -a-> W; }");
        let z = b.var("Z").unwrap();
        assert_eq!(finite_accepting_derivation(&b, &z).witness().unwrap().len(), 1);
        let b = brs("brs { vars: Z; alphabet: a; rule r: Z -a-> Z; }");
        assert!(finite_accepting_derivation(&b, &z).is_no());
        let b = brs("brs { vars: Z, Y, W; alphabet: a, b; rule r1: Z -a-> Y.(W); accepting rule r2: W -b-> eps; }");
        let d = finite_accepting_derivation(&b, &z).witness().cloned().unwrap();
        assert!(d.is_valid(&b));
        assert_eq!(d.len(), 2);
        assert_eq!(d.accepting_count(&b), 1);
    }

    #[test]
    fn finite_accepting_unbounded_growth() {
        let b = brs("brs { vars: Z, Y; alphabet: a; rule r1: Z -a-> Z || Y; }");
        let z = b.var("Z").unwrap();
        assert!(finite_accepting_search(&b, &z, 500).is_unknown());
        let pb = saturate_parallel(&b, DEFAULT_BUDGET).unwrap();
        assert!(accepting_refuted(&b, &pb.rbar, &z));
    }

    #[test]
    fn flag_rules() {
        let b = brs("brs { vars: X, Y, Z; alphabet: a; accepting rule p: X -a-> Y.(Z); }");
        let (r, _) = build_parallel_brs(&b).unwrap();
        let f = extend_with_flags(&b, &r);
        assert!(has(&f, "X", ACC, "Z_ACC", true));
        assert!(!has(&f, "X", NACC, "Z_NOT_ACC", false));

        let b = brs("brs { vars: X, Y, Z; alphabet: a; rule p: X -a-> Y.(Z); }");
        let (r, _) = build_parallel_brs(&b).unwrap();
        let f = extend_with_flags(&b, &r);
        assert!(!has(&f, "X", ACC, "Z_ACC", true));
        assert!(has(&f, "X", NACC, "Z_NOT_ACC", false));

        let b = brs("brs { vars: X, Y, Z; alphabet: a, b; rule p: X -a-> Y.(Z); accepting rule q: Z -b-> eps; }");
        let (r, _) = build_parallel_brs(&b).unwrap();
        let f = extend_with_flags(&b, &r);
        assert!(has(&f, "X", ACC, "Z_ACC", true));
        assert!(has(&f, "X", NACC, "Z_NOT_ACC", false));
    }

    #[test]
    fn sequential_examples() {
        let b = brs("brs { vars: X, Y; alphabet: a; rule r: X -a-> Y; }");
        let (r, _) = build_parallel_brs(&b).unwrap();
        let f = extend_with_flags(&b, &r);
        let (s, unk) = build_sequential_brs(&b, &f).unwrap();
        assert!(!unk);
        assert!(has(&s, "X", "#", "Y", false));
        assert!(!has(&s, "Y", "#", "X", false));
        assert!(!has(&s, "X", "#", "X", false));

        let b = brs("brs { vars: Y, W; alphabet: c; accepting rule p3: Y -c-> Y || W; }");
        let bundle = decompose(&b).unwrap();
        assert!(has(&bundle.rseq, "Y", "$", "Y", true));
        assert!(has(&bundle.rseq, "Y", "$", "W", true));
        assert!(!has(&bundle.rseq, "W", "$", "Y", true));
    }

    #[test]
    fn e3_bundle() {
        let b = brs(
            "brs { vars: X, Y, Z, W; alphabet: a, b, c;
               rule p1: X -a-> Y.(Z); rule p2: Z -b-> eps; accepting rule p3: Y -c-> Y || W; }",
        );
        let d = decompose(&b).unwrap();
        assert!(!d.any_unknown);
        assert!(has(&d.rpar, "Z", "b", "eps", false));
        assert!(has(&d.rpar, "Y", "c", "Y || W", true) || has(&d.rpar, "Y", "c", "W || Y", true));
        assert!(has(&d.rpar, "X", "#", "Y", false));
        assert!(has(&d.rpar, "X", NACC, "Z_NOT_ACC", false));
        assert!(!has(&d.rpar, "X", ACC, "Z_ACC", true));
        assert!(has(&d.rseq, "X", "a", "Y.(Z)", false));
        assert!(has(&d.rseq, "X", "#", "Y", false));
        assert!(has(&d.rseq, "Y", "$", "Y", true));
        assert!(d.rpar.is_parallel());
        assert!(d.rseq.is_sequential() && is_pop_free(&d.rseq));
        assert!(d.recheck(DEFAULT_BUDGET).is_empty());
    }

    #[test]
    fn purely_parallel_and_push_only() {
        let b = brs("brs { vars: X, Y; alphabet: a; rule r: X -a-> X || Y; }");
        let d = decompose(&b).unwrap();
        assert_eq!(d.rpar.rules(), b.rules());
        assert!(d.rseq.rules().iter().all(|r| r.label.is_reserved()));

        let b = brs("brs { vars: X, Y, Z; alphabet: a; rule p: X -a-> Y.(Z); rule q: Z -a-> X.(Y); }");
        let d = decompose(&b).unwrap();
        assert!(d.rpar.rules().iter().all(|r| r.label.name() == NACC));
        assert_eq!(d.rseq.rules().iter().filter(|r| !r.label.is_reserved()).count(), 2);
        assert_eq!(d.summary_count(), 0);
    }

    #[test]
    fn idempotent() {
        let b = brs(
            "brs { vars: X, Y, Z, W; alphabet: a, b, c;
               rule p1: X -a-> Y.(Z); rule p2: Z -b-> eps; accepting rule p3: Y -c-> Y || W; }",
        );
        let d1 = decompose(&b).unwrap();
        let d2 = decompose(&d1.source).unwrap();
        assert_eq!(d1.rpar, d2.rpar);
        assert_eq!(d1.rseq, d2.rseq);
    }

    #[test]
    fn rejects_non_normal_form() {
        let b = brs("brs { vars: X, Y; alphabet: a; rule r: X -a-> X.(Y.(X)); }");
        assert!(decompose(&b).is_err());
    }

    #[test]
    fn summary_inner_sequences_replay() {
        let b = brs(
            "brs { vars: X, Y, Z, U, V; alphabet: a, b;
               rule p1: X -a-> Y.(Z); rule p2: Z -a-> U.(V); rule p3: V -b-> eps; rule p4: U -b-> eps; }",
        );
        let d = decompose(&b).unwrap();
        let net = par_brs_to_net(&d.rpar).unwrap();
        for j in &d.rpar_just {
            if let Justification::Summary { push, pop, inner, .. } = j {
                let (_, _, z) = push_parts(b.rule(*push)).unwrap();
                let n = net.place_count();
                let init = Marking::unit(n, net.place_of(&z).unwrap());
                let end = net.fire_all(&init, &inner.iter().map(|r| r.0).collect::<Vec<_>>()).unwrap();
                match pop {
                    None => assert_eq!(end, Marking::zero(n)),
                    Some(q) => {
                        let w = pop_parts(b.rule(*q)).unwrap().1;
                        assert_eq!(end, Marking::unit(n, net.place_of(&w).unwrap()));
                    }
                }
            }
        }
    }
}

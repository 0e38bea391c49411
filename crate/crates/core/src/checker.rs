//! Problems 1 to 3 from a process variable via the decomposition, and the
//! `F` / `GF` fragment model checker built on them.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::brs::{Brs, BrsError, Derivation, RuleId};
use crate::decision::{Decision, Tri};
use crate::petri::{infinite_run, par_brs_to_net, Marking, RunMode, DEFAULT_BUDGET};
use crate::saturate::{decompose_with, pop_parts, push_parts, Budgets, DecompositionBundle, Justification};
use crate::seqeng::{head_path, head_reachable, infinite_run_seq, Constraint};
use crate::terms::{Action, Context, ProcessTerm, Variable};
use crate::witness::LassoWitness;

pub use crate::syntax::{FragmentFormula, PropFormula};

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("undeclared action `{0}` in formula")]
    UndeclaredAtom(String),
    #[error(transparent)]
    Brs(#[from] BrsError),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Problem {
    /// Infinitely many accepting occurrences.
    One,
    /// No accepting occurrence.
    Two,
    /// Finitely many, at least one.
    Three,
}

impl Problem {
    pub const ALL: [Problem; 3] = [Problem::One, Problem::Two, Problem::Three];

    pub fn from_number(n: u8) -> Option<Problem> {
        match n {
            1 => Some(Problem::One),
            2 => Some(Problem::Two),
            3 => Some(Problem::Three),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Problem::One => 1,
            Problem::Two => 2,
            Problem::Three => 3,
        }
    }

    pub fn constraint(self) -> Constraint {
        match self {
            Problem::Two => Constraint::NonAccepting,
            _ => Constraint::Any,
        }
    }

    pub fn run_mode(self) -> RunMode {
        match self {
            Problem::One => RunMode::AcceptingInfinitelyOften,
            Problem::Two => RunMode::NoAccepting,
            Problem::Three => RunMode::FinitelyManyNonNullAccepting,
        }
    }

    /// Whether accepting counts in prefix and pump have this problem's
    /// pattern.
    pub fn pattern_ok(self, in_prefix: usize, in_pump: usize) -> bool {
        match self {
            Problem::One => in_pump >= 1,
            Problem::Two => in_prefix == 0 && in_pump == 0,
            Problem::Three => in_prefix >= 1 && in_pump == 0,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Condition {
    Cond1(Variable),
    Cond2,
    None,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Cond1(y) => write!(f, "cond1({y})"),
            Condition::Cond2 => f.write_str("cond2"),
            Condition::None => f.write_str("none"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProblemVerdict {
    pub problem: Problem,
    pub from: Variable,
    pub decision: Tri,
    pub condition: Condition,
    pub witness: Option<LassoWitness>,
    /// Some saturation query or run search exhausted its budget.
    pub any_unknown: bool,
    /// Unknown reasons, and witness assembly failures.
    pub notes: Vec<String>,
}

#[derive(Copy, Clone, Debug)]
pub struct CheckOptions {
    pub budgets: Budgets,
    pub run_budget: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { budgets: Budgets::default(), run_budget: DEFAULT_BUDGET }
    }
}

/// The set of actions satisfying `psi`.
pub fn prop_action_set(psi: &PropFormula, sigma: &BTreeSet<Action>) -> Result<BTreeSet<Action>, CheckError> {
    Ok(match psi {
        PropFormula::Atom(a) => {
            if !sigma.contains(a) {
                return Err(CheckError::UndeclaredAtom(a.to_string()));
            }
            BTreeSet::from([a.clone()])
        }
        PropFormula::Not(p) => sigma.difference(&prop_action_set(p, sigma)?).cloned().collect(),
        PropFormula::And(p, q) => {
            prop_action_set(p, sigma)?.intersection(&prop_action_set(q, sigma)?).cloned().collect()
        }
        PropFormula::Or(p, q) => prop_action_set(p, sigma)?.union(&prop_action_set(q, sigma)?).cloned().collect(),
    })
}

/// Rules whose label satisfies `psi`.
pub fn ac_set(b: &Brs, psi: &PropFormula) -> Result<BTreeSet<RuleId>, CheckError> {
    let acts = prop_action_set(psi, b.alphabet())?;
    Ok(b.ids().filter(|&i| acts.contains(&b.rule(i).label)).collect())
}

pub fn decide_problem(
    bundle: &DecompositionBundle,
    x: &Variable,
    problem: Problem,
) -> Result<ProblemVerdict, CheckError> {
    decide_problem_with(bundle, x, problem, CheckOptions::default())
}

pub fn decide_problem_with(
    bundle: &DecompositionBundle,
    x: &Variable,
    problem: Problem,
    opts: CheckOptions,
) -> Result<ProblemVerdict, CheckError> {
    if !bundle.source.vars().contains(x) {
        return Err(BrsError::UnknownVariable(x.to_string()).into());
    }
    let mut notes: Vec<String> = bundle.unknown.clone();
    let mut unknown = bundle.any_unknown;
    let net = par_brs_to_net(&bundle.rpar)?;
    let n = net.place_count();
    let ex = Expander { bundle };
    let verdict = |condition: Condition, witness: Result<LassoWitness, String>, mut notes: Vec<String>, any_unknown| {
        let witness = match witness {
            Ok(w) => Some(w),
            Err(e) => {
                notes.push(format!("witness assembly failed: {e}"));
                None
            }
        };
        ProblemVerdict { problem, from: x.clone(), decision: Tri::Yes, condition, witness, any_unknown, notes }
    };

    for y in head_reachable(&bundle.rseq, x, problem.constraint())? {
        let init = Marking::unit(n, net.place_of(&y).expect("variable place"));
        match infinite_run(&net, &init, problem.run_mode(), opts.run_budget) {
            Decision::Yes(lasso) => {
                let path = head_path(&bundle.rseq, x, &y, problem.constraint())?.unwrap_or_default();
                let prefix: Vec<RuleId> = lasso.prefix.iter().map(|&t| net.transitions[t].origin).collect();
                let pump: Vec<RuleId> = lasso.pump.iter().map(|&t| net.transitions[t].origin).collect();
                let w = ex.cond1(x, &path, &prefix, &pump);
                return Ok(verdict(Condition::Cond1(y), w, notes, unknown));
            }
            Decision::No => {}
            Decision::Unknown(why) => {
                unknown = true;
                notes.push(format!("parallel run from {y}: {why}"));
            }
        }
    }
    match infinite_run_seq(&bundle.rseq, x, problem.run_mode())? {
        Decision::Yes(l) => {
            let w = ex.cond2(x, &l.prefix, &l.pump);
            return Ok(verdict(Condition::Cond2, w, notes, unknown));
        }
        Decision::No => {}
        Decision::Unknown(why) => {
            unknown = true;
            notes.push(format!("sequential run: {why}"));
        }
    }
    Ok(ProblemVerdict {
        problem,
        from: x.clone(),
        decision: if unknown { Tri::Unknown } else { Tri::No },
        condition: Condition::None,
        witness: None,
        any_unknown: unknown,
        notes,
    })
}

#[derive(Clone, Debug)]
pub struct FragmentVerdict {
    pub formula: FragmentFormula,
    pub from: Variable,
    /// `Yes` = holds.
    pub holds: Tri,
    /// No infinite derivation from the variable exists at all.
    pub vacuous: bool,
    pub problems: Vec<ProblemVerdict>,
    /// A derivation violating the formula, when it fails.
    pub counterexample: Option<LassoWitness>,
}

/// Strips double negations; returns the base formula and whether it is
/// negated.
fn polarity(phi: &FragmentFormula) -> (&FragmentFormula, bool) {
    match phi {
        FragmentFormula::Not(inner) => {
            let (base, neg) = polarity(inner);
            (base, !neg)
        }
        _ => (phi, false),
    }
}

pub fn model_check_fragment(b: &Brs, x: &Variable, phi: &FragmentFormula) -> Result<FragmentVerdict, CheckError> {
    model_check_fragment_with(b, x, phi, CheckOptions::default())
}

pub fn model_check_fragment_with(
    b: &Brs,
    x: &Variable,
    phi: &FragmentFormula,
    opts: CheckOptions,
) -> Result<FragmentVerdict, CheckError> {
    b.check_normal_form()?;
    let (base, negated) = polarity(phi);
    let psi = match base {
        FragmentFormula::F(p) | FragmentFormula::GF(p) => p,
        FragmentFormula::Not(_) => unreachable!("negations stripped"),
    };
    let acc = ac_set(b, psi)?;
    let relabeled = b.with_accepting(|i, _| acc.contains(&i));
    let bundle = decompose_with(&relabeled, opts.budgets)?;
    let problems = Problem::ALL
        .iter()
        .map(|&p| decide_problem_with(&bundle, x, p, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let tri = |p: Problem| problems[p.number() as usize - 1].decision;
    let needed: &[Problem] = match (base, negated) {
        (FragmentFormula::F(_), false) => &[Problem::Two],
        (FragmentFormula::F(_), true) => &[Problem::One, Problem::Three],
        (FragmentFormula::GF(_), false) => &[Problem::Two, Problem::Three],
        (FragmentFormula::GF(_), true) => &[Problem::One],
        _ => unreachable!(),
    };
    let holds = needed.iter().fold(Tri::Yes, |acc, &p| acc.and(tri(p).not()));
    let counterexample = needed
        .iter()
        .find(|&&p| tri(p) == Tri::Yes)
        .and_then(|&p| problems[p.number() as usize - 1].witness.clone());
    let vacuous = problems.iter().all(|p| p.decision == Tri::No);
    Ok(FragmentVerdict { formula: phi.clone(), from: x.clone(), holds, vacuous, problems, counterexample })
}

// ---------------------------------------------------------------------------
// witness expansion

/// Multiset of parallel-system atoms, plus the source terms standing for
/// the `Z_ACC` / `Z_NOT_ACC` atoms among them.
#[derive(Clone, Debug)]
struct ParState {
    atoms: Vec<Variable>,
    ghosts: Vec<ProcessTerm>,
}

impl ParState {
    fn of(x: &Variable) -> Self {
        ParState { atoms: vec![x.clone()], ghosts: Vec::new() }
    }

    fn real_factors(&self) -> Vec<ProcessTerm> {
        self.atoms
            .iter()
            .filter(|v| !v.is_reserved())
            .map(ProcessTerm::atom)
            .chain(self.ghosts.iter().cloned())
            .collect()
    }

    fn real(&self) -> ProcessTerm {
        ProcessTerm::par(self.real_factors())
    }

    fn take(&mut self, t: &ProcessTerm) -> Result<(), String> {
        for f in t.factors() {
            let ProcessTerm::Atom(v) = f else { return Err(format!("non-atomic factor {f}")) };
            let i = self.atoms.iter().position(|a| a == v).ok_or_else(|| format!("{v} not present"))?;
            self.atoms.swap_remove(i);
        }
        Ok(())
    }

    fn give(&mut self, t: &ProcessTerm) {
        for f in t.factors() {
            if let ProcessTerm::Atom(v) = f {
                self.atoms.push(v.clone());
            }
        }
    }
}

type Emitted = Vec<(RuleId, ProcessTerm)>;

struct Expander<'a> {
    bundle: &'a DecompositionBundle,
}

impl Expander<'_> {
    fn src(&self) -> &Brs {
        &self.bundle.source
    }

    fn push_of(&self, p: RuleId) -> Result<(Variable, Variable, Variable), String> {
        push_parts(self.src().rule(p)).ok_or_else(|| format!("rule {p} is not a push"))
    }

    fn par(&self, ctx: &Context, st: &mut ParState, seq: &[RuleId], out: &mut Emitted) -> Result<(), String> {
        let rpar = &self.bundle.rpar;
        for &k in seq {
            let r = rpar.rule(k);
            st.take(&r.lhs)?;
            let outer = ctx.then(&Context::par_with(st.real_factors()));
            match &self.bundle.rpar_just[k.0] {
                Justification::Source(s) => {
                    st.give(&r.rhs);
                    out.push((*s, ctx.fill(&st.real())));
                }
                Justification::Summary { push, pop, inner, .. } => {
                    let (_, y, z) = self.push_of(*push)?;
                    out.push((*push, outer.fill(&ProcessTerm::seq(y.clone(), ProcessTerm::atom(&z)))));
                    let inner_ctx = outer.then(&Context::Seq(y.clone(), Box::new(Context::Hole)));
                    let mut inner_st = ParState::of(&z);
                    self.par(&inner_ctx, &mut inner_st, inner, out)?;
                    if let Some(q) = pop {
                        let (_, _, w2) = pop_parts(self.src().rule(*q)).ok_or("not a pop")?;
                        out.push((*q, outer.fill(&ProcessTerm::atom(&w2))));
                    }
                    st.give(&r.rhs);
                }
                Justification::AccFlag { push, finite } => {
                    let (_, y, z) = self.push_of(*push)?;
                    let called = ProcessTerm::seq(y.clone(), ProcessTerm::atom(&z));
                    out.push((*push, outer.fill(&called)));
                    let inner_ctx = outer.then(&Context::Seq(y.clone(), Box::new(Context::Hole)));
                    let ghost = match finite {
                        Some(d) => {
                            for s in &d.steps {
                                out.push((s.rule, inner_ctx.fill(&s.result)));
                            }
                            ProcessTerm::seq(y, d.end().clone())
                        }
                        None => called,
                    };
                    st.give(&r.rhs);
                    st.ghosts.push(ghost);
                }
                Justification::NotAccFlag { push } => {
                    let (_, y, z) = self.push_of(*push)?;
                    let called = ProcessTerm::seq(y, ProcessTerm::atom(&z));
                    out.push((*push, outer.fill(&called)));
                    st.give(&r.rhs);
                    st.ghosts.push(called);
                }
                Justification::Cover { .. } => return Err("cover justification in parallel system".into()),
            }
        }
        Ok(())
    }

    /// Runs sequential-system rules on the variable in focus, returning
    /// the accumulated context and the final focus.
    fn seq(
        &self,
        mut ctx: Context,
        mut focus: Variable,
        seq: &[RuleId],
        out: &mut Emitted,
    ) -> Result<(Context, Variable), String> {
        let rseq = &self.bundle.rseq;
        for &k in seq {
            let r = rseq.rule(k);
            if r.lhs != ProcessTerm::atom(&focus) {
                return Err(format!("rule {} does not apply to {focus}", r.name));
            }
            match &self.bundle.rseq_just[k.0] {
                Justification::Source(p) => {
                    let (_, y, z) = self.push_of(*p)?;
                    out.push((*p, ctx.fill(&ProcessTerm::seq(y.clone(), ProcessTerm::atom(&z)))));
                    ctx = ctx.then(&Context::Seq(y, Box::new(Context::Hole)));
                    focus = z;
                }
                Justification::Cover { inner, .. } => {
                    let ProcessTerm::Atom(y) = &r.rhs else { return Err("cover rule rhs".into()) };
                    let mut st = ParState::of(&focus);
                    self.par(&ctx, &mut st, inner, out)?;
                    st.take(&r.rhs)?;
                    ctx = ctx.then(&Context::par_with(st.real_factors()));
                    focus = y.clone();
                }
                j => return Err(format!("unexpected justification {j:?} in sequential system")),
            }
        }
        Ok((ctx, focus))
    }

    fn derivation(&self, start: ProcessTerm, steps: &Emitted) -> Result<Derivation, String> {
        Derivation::from_rule_terms(self.src(), start, steps).map_err(|e| e.to_string())
    }

    fn cond1(&self, x: &Variable, path: &[RuleId], prefix: &[RuleId], pump: &[RuleId]) -> Result<LassoWitness, String> {
        let mut pre = Emitted::new();
        let (anchor, y) = self.seq(Context::Hole, x.clone(), path, &mut pre)?;
        let mut st = ParState::of(&y);
        self.par(&anchor, &mut st, prefix, &mut pre)?;
        let before = st.clone();
        let mut pm = Emitted::new();
        self.par(&Context::Hole, &mut st, pump, &mut pm)?;
        let mut extra_atoms = st.atoms.clone();
        for v in &before.atoms {
            let i = extra_atoms.iter().position(|a| a == v).ok_or("pump is not self-covering")?;
            extra_atoms.swap_remove(i);
        }
        let extra = ParState { atoms: extra_atoms, ghosts: st.ghosts[before.ghosts.len()..].to_vec() };
        let grow = Context::par_with(extra.real_factors());
        let prefix_d = self.derivation(ProcessTerm::atom(x), &pre)?;
        let pump_d = self.derivation(before.real(), &pm)?;
        LassoWitness::new(prefix_d, anchor, pump_d, grow)
    }

    fn cond2(&self, x: &Variable, prefix: &[RuleId], pump: &[RuleId]) -> Result<LassoWitness, String> {
        let mut pre = Emitted::new();
        let (anchor, y) = self.seq(Context::Hole, x.clone(), prefix, &mut pre)?;
        let mut pm = Emitted::new();
        let (grow, y2) = self.seq(Context::Hole, y.clone(), pump, &mut pm)?;
        if y2 != y {
            return Err(format!("pump ends at head {y2}, expected {y}"));
        }
        let prefix_d = self.derivation(ProcessTerm::atom(x), &pre)?;
        let pump_d = self.derivation(ProcessTerm::atom(&y), &pm)?;
        LassoWitness::new(prefix_d, anchor, pump_d, grow)
    }
}

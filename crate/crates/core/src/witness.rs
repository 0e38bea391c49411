//! Lasso-shaped witnesses for infinite derivations and their replay.

use std::fmt;

use serde::Serialize;

use crate::brs::{Brs, BrsError, Derivation, RuleId};
use crate::terms::{Context, ProcessTerm};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PumpKind {
    /// The pump returns to its start term.
    ExactRepeat,
    /// The pump ends at `s || p`.
    ParPump,
    /// The pump ends at `X1.(... Xk.(s))`.
    SeqPump,
    /// Growth through both sequential and parallel frames.
    Nested,
}

impl fmt::Display for PumpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// `prefix` reaches `anchor[s]`; `pump` runs from `s` to `grow[s]`. Every
/// frame of a context keeps its hole in a rewritable position, so the pump
/// can be replayed at `anchor[grow^j[s]]` for every `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LassoWitness {
    pub prefix: Derivation,
    pub anchor: Context,
    pub pump: Derivation,
    pub grow: Context,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessStep {
    pub rule: String,
    pub position: String,
    pub term: String,
}

fn is_par_frame(c: &Context) -> bool {
    matches!(c, Context::Par(_, inner) if inner.is_hole())
}

fn only_seq(c: &Context) -> bool {
    match c {
        Context::Hole => true,
        Context::Seq(_, inner) => only_seq(inner),
        Context::Par(..) => false,
    }
}

impl LassoWitness {
    pub fn new(prefix: Derivation, anchor: Context, pump: Derivation, grow: Context) -> Result<Self, String> {
        if pump.is_empty() {
            return Err("empty pump".into());
        }
        if prefix.end() != &anchor.fill(&pump.start) {
            return Err(format!("prefix ends at {}, expected {}", prefix.end(), anchor.fill(&pump.start)));
        }
        if pump.end() != &grow.fill(&pump.start) {
            return Err(format!("pump ends at {}, expected {}", pump.end(), grow.fill(&pump.start)));
        }
        Ok(LassoWitness { prefix, anchor, pump, grow })
    }

    pub fn kind(&self) -> PumpKind {
        if self.grow.is_hole() {
            PumpKind::ExactRepeat
        } else if is_par_frame(&self.grow) {
            PumpKind::ParPump
        } else if only_seq(&self.grow) {
            PumpKind::SeqPump
        } else {
            PumpKind::Nested
        }
    }

    pub fn accepting_in_prefix(&self, b: &Brs) -> usize {
        self.prefix.accepting_count(b)
    }

    pub fn accepting_in_pump(&self, b: &Brs) -> usize {
        self.pump.accepting_count(b)
    }

    /// The prefix followed by `pumps` copies of the pump, each checked
    /// against the successor relation.
    pub fn unfold(&self, b: &Brs, pumps: usize) -> Result<Derivation, BrsError> {
        if !self.prefix.is_valid(b) || !self.pump.is_valid(b) {
            return Err(BrsError::InvalidStep(0));
        }
        let mut steps = Vec::new();
        let mut ctx = self.anchor.clone();
        for _ in 0..pumps {
            for s in &self.pump.steps {
                steps.push((s.rule, ctx.fill(&s.result)));
            }
            ctx = ctx.then(&self.grow);
        }
        let tail = Derivation::from_rule_terms(b, self.prefix.end().clone(), &steps)?;
        Ok(self.prefix.clone().concat(tail))
    }

    pub fn steps(&self, b: &Brs) -> Vec<WitnessStep> {
        let mut out = Vec::new();
        let mut push = |d: &Derivation, ctx: &Context, tag: &str| {
            for s in &d.steps {
                out.push(WitnessStep {
                    rule: format!("{}{}", tag, b.rule(s.rule).name),
                    position: s.position.to_string(),
                    term: ctx.fill(&s.result).to_string(),
                });
            }
        };
        push(&self.prefix, &Context::Hole, "");
        push(&self.pump, &self.anchor, "pump:");
        out
    }

    pub fn rules(&self) -> (Vec<RuleId>, Vec<RuleId>) {
        (self.prefix.rules(), self.pump.rules())
    }
}

/// Whether the prefix and `pumps` copies of the pump replay step by step.
pub fn replay(b: &Brs, w: &LassoWitness, pumps: usize) -> bool {
    !w.pump.is_empty()
        && w.prefix.end() == &w.anchor.fill(&w.pump.start)
        && w.pump.end() == &w.grow.fill(&w.pump.start)
        && w.unfold(b, pumps).is_ok()
}

/// Searches for a pump between two terms of one derivation: `later`
/// contains `earlier` as an occurrence, with the occurrence's context as
/// the growth context.
pub fn pump_context(earlier: &ProcessTerm, later: &ProcessTerm) -> Option<Context> {
    if earlier == later {
        return Some(Context::Hole);
    }
    crate::terms::occurrences(later)
        .into_iter()
        .filter(|(s, _)| s == earlier)
        .map(|(_, c)| c)
        .min_by_key(|c| (c.seq_depth(), format!("{c}").len()))
}

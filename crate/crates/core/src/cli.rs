//! The `prsmc` command line.
//!
//! Exit codes: 0 holds / yes, 1 fails / no, 2 unknown, 3 input or
//! validation error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::brs::Brs;
use crate::checker::{decide_problem_with, model_check_fragment_with, CheckOptions, Problem, ProblemVerdict};
use crate::decision::Tri;
use crate::oracle::{self, explore, ground_truth, replay};
use crate::rdha::{self, Rdha};
use crate::saturate::decompose_with;
use crate::syntax::{parse_fragment, parse_model, Model};
use crate::terms::Variable;
use crate::witness::LassoWitness;

pub const EXIT_YES: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

const AFTER_HELP: &str = "\
Verdicts concern infinite derivations from the single variable given by --from.
Finite maximal derivations are ignored: a formula holds vacuously when no
infinite derivation exists.

Exit codes: 0 holds/yes, 1 fails/no, 2 unknown (a budget ran out), 3 input error.";

#[derive(Parser, Debug)]
#[command(name = "prsmc", version, about = "Model checker for Büchi process rewrite systems", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Print the verdict as JSON.
    #[arg(long)]
    pub json: bool,
    /// Budget for reachability and run searches (oracle: explored nodes).
    #[arg(long)]
    pub node_budget: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide Problem 1, 2 or 3 from a variable.
    Check {
        #[arg(long)]
        problem: u8,
        #[arg(long)]
        from: String,
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check a formula `F psi`, `GF psi` or their negations.
    Mc {
        #[arg(long)]
        formula: String,
        #[arg(long)]
        from: String,
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write the parallel and sequential systems and their provenance.
    Decompose {
        model: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Translate an automaton into an equivalent rewrite system.
    Rdha2prs {
        model: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Explore the transition system breadth-first.
    Sim {
        #[arg(long)]
        from: String,
        #[arg(long, default_value_t = oracle::DEFAULT_DEPTH)]
        depth: usize,
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Bounded explicit-state answer for one problem.
    Oracle {
        #[arg(long)]
        problem: u8,
        #[arg(long)]
        from: String,
        #[arg(long, default_value_t = oracle::DEFAULT_DEPTH)]
        depth: usize,
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the engine with the oracle on all three problems.
    Xcheck {
        #[arg(long)]
        from: String,
        #[arg(long, default_value_t = oracle::DEFAULT_DEPTH)]
        depth: usize,
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

/// Exit code and the text for each stream.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(code: i32, stdout: String) -> Self {
        Outcome { code, stdout, stderr: String::new() }
    }

    fn input_error(msg: String) -> Self {
        Outcome { code: EXIT_INPUT, stdout: String::new(), stderr: format!("error: {msg}\n") }
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: EXIT_INPUT, stdout: String::new(), stderr: text }
            } else {
                Outcome::ok(EXIT_YES, text)
            };
        }
    };
    match dispatch(cli.command) {
        Ok(o) => o,
        Err(msg) => Outcome::input_error(msg),
    }
}

struct Loaded {
    brs: Brs,
    /// Set when the file held an automaton.
    rdha: Option<Rdha>,
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load(path: &Path) -> Result<Loaded, String> {
    let src = read(path)?;
    match parse_model(&src).map_err(|e| format!("{}:{e}", path.display()))? {
        Model::Brs(brs) => Ok(Loaded { brs, rdha: None }),
        Model::Rdha(r) => {
            let v = rdha::validate(&r);
            if let Some(first) = v.first() {
                return Err(format!("{}: invalid automaton: {first}", path.display()));
            }
            Ok(Loaded { brs: rdha::to_prs(&r), rdha: Some(r) })
        }
    }
}

fn load_normal(path: &Path) -> Result<Loaded, String> {
    let l = load(path)?;
    l.brs.check_normal_form().map_err(|e| format!("{}: not in normal form: {e}", path.display()))?;
    Ok(l)
}

fn resolve(l: &Loaded, name: &str) -> Result<Variable, String> {
    if let Ok(v) = l.brs.var(name) {
        return Ok(v);
    }
    if l.rdha.is_some() {
        if let Ok(v) = l.brs.var(&rdha::var_of(name).to_string()) {
            return Ok(v);
        }
    }
    Err(format!("unknown variable `{name}`"))
}

fn problem_of(n: u8) -> Result<Problem, String> {
    Problem::from_number(n).ok_or_else(|| format!("problem must be 1, 2 or 3, got {n}"))
}

fn options(common: &Common) -> CheckOptions {
    let mut o = CheckOptions::default();
    if let Some(n) = common.node_budget {
        o.run_budget = n;
        o.budgets.reach = n;
    }
    o
}

fn budgets_json(o: &CheckOptions) -> Value {
    json!({"reach": o.budgets.reach, "finite": o.budgets.finite, "run": o.run_budget})
}

fn tri_word(t: Tri) -> &'static str {
    match t {
        Tri::Yes => "yes",
        Tri::No => "no",
        Tri::Unknown => "unknown",
    }
}

fn tri_code(t: Tri) -> i32 {
    match t {
        Tri::Yes => EXIT_YES,
        Tri::No => EXIT_NO,
        Tri::Unknown => EXIT_UNKNOWN,
    }
}

fn witness_json(b: &Brs, w: Option<&LassoWitness>) -> Value {
    match w {
        Some(w) => serde_json::to_value(w.steps(b)).expect("witness steps serialize"),
        None => json!([]),
    }
}

fn witness_text(out: &mut String, b: &Brs, w: &LassoWitness) {
    let _ = writeln!(out, "witness ({} pump, start {}):", w.kind(), w.prefix.start);
    for s in w.steps(b) {
        let _ = writeln!(out, "  {} at {} -> {}", s.rule, s.position, s.term);
    }
}

fn dispatch(cmd: Command) -> Result<Outcome, String> {
    match cmd {
        Command::Check { problem, from, model, common } => check(problem, &from, &model, &common),
        Command::Mc { formula, from, model, common } => mc(&formula, &from, &model, &common),
        Command::Decompose { model, out, common } => decompose(&model, &out, &common),
        Command::Rdha2prs { model, out } => rdha2prs(&model, &out),
        Command::Sim { from, depth, model, common } => sim(&from, depth, &model, &common),
        Command::Oracle { problem, from, depth, model, common } => oracle_cmd(problem, &from, depth, &model, &common),
        Command::Xcheck { from, depth, model, common } => xcheck(&from, depth, &model, &common),
    }
}

fn check(problem: u8, from: &str, model: &Path, common: &Common) -> Result<Outcome, String> {
    let p = problem_of(problem)?;
    let l = load_normal(model)?;
    let x = resolve(&l, from)?;
    let opts = options(common);
    let bundle = decompose_with(&l.brs, opts.budgets).map_err(|e| e.to_string())?;
    let v = decide_problem_with(&bundle, &x, p, opts).map_err(|e| e.to_string())?;
    let code = tri_code(v.decision);
    if common.json {
        let j = json!({
            "command": "check",
            "model": model.display().to_string(),
            "from": x.to_string(),
            "problem": p.number(),
            "verdict": tri_word(v.decision),
            "condition": v.condition.to_string(),
            "pumpKind": v.witness.as_ref().map(|w| w.kind().to_string()),
            "witness": witness_json(&l.brs, v.witness.as_ref()),
            "anyUnknown": v.any_unknown,
            "budgets": budgets_json(&opts),
            "notes": v.notes,
        });
        return Ok(Outcome::ok(code, format!("{j:#}\n")));
    }
    let mut out = String::new();
    let _ = writeln!(out, "problem {} from {}: {} ({})", p.number(), x, tri_word(v.decision), v.condition);
    if let Some(w) = &v.witness {
        witness_text(&mut out, &l.brs, w);
    }
    for n in &v.notes {
        let _ = writeln!(out, "note: {n}");
    }
    Ok(Outcome::ok(code, out))
}

fn mc(formula: &str, from: &str, model: &Path, common: &Common) -> Result<Outcome, String> {
    let phi = parse_fragment(formula).map_err(|e| format!("formula:{e}"))?;
    let l = load_normal(model)?;
    let x = resolve(&l, from)?;
    let opts = options(common);
    let v = model_check_fragment_with(&l.brs, &x, &phi, opts).map_err(|e| e.to_string())?;
    let code = tri_code(v.holds);
    let word = match v.holds {
        Tri::Yes => "holds",
        Tri::No => "fails",
        Tri::Unknown => "unknown",
    };
    let culprit: Option<&ProblemVerdict> = v
        .problems
        .iter()
        .find(|p| p.decision == Tri::Yes && v.holds == Tri::No && p.witness.as_ref() == v.counterexample.as_ref());
    let condition = culprit.map(|p| p.condition.to_string()).unwrap_or_else(|| "none".into());
    let any_unknown = v.problems.iter().any(|p| p.any_unknown);
    if common.json {
        let problems: serde_json::Map<String, Value> =
            v.problems.iter().map(|p| (p.problem.number().to_string(), json!(tri_word(p.decision)))).collect();
        let j = json!({
            "command": "mc",
            "model": model.display().to_string(),
            "from": x.to_string(),
            "formula": v.formula.to_string(),
            "verdict": word,
            "condition": condition,
            "vacuous": v.vacuous,
            "problems": problems,
            "witness": witness_json(&l.brs, v.counterexample.as_ref()),
            "anyUnknown": any_unknown,
            "budgets": budgets_json(&opts),
        });
        return Ok(Outcome::ok(code, format!("{j:#}\n")));
    }
    let mut out = String::new();
    let _ = writeln!(out, "{} from {}: {}", v.formula, x, word);
    if v.vacuous {
        let _ = writeln!(out, "vacuous: no infinite derivation from {x}");
    }
    for p in &v.problems {
        let _ = writeln!(out, "  problem {}: {} ({})", p.problem.number(), tri_word(p.decision), p.condition);
    }
    if let Some(w) = &v.counterexample {
        let _ = writeln!(out, "counterexample:");
        witness_text(&mut out, &l.brs, w);
    }
    Ok(Outcome::ok(code, out))
}

fn decompose(model: &Path, dir: &Path, common: &Common) -> Result<Outcome, String> {
    let l = load_normal(model)?;
    let opts = options(common);
    let bundle = decompose_with(&l.brs, opts.budgets).map_err(|e| e.to_string())?;
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let prov = bundle.provenance();
    let prov_json = serde_json::to_string_pretty(&prov).expect("provenance serializes");
    for (name, text) in
        [("rpar.brs", bundle.rpar.to_string()), ("rseq.brs", bundle.rseq.to_string()), ("provenance.json", prov_json)]
    {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    let summary = json!({
        "command": "decompose",
        "model": model.display().to_string(),
        "rpar": bundle.rpar.rules().len(),
        "rseq": bundle.rseq.rules().len(),
        "summaries": bundle.summary_count(),
        "flags": bundle.flag_count(),
        "iterations": bundle.iterations,
        "anyUnknown": bundle.any_unknown,
        "budgets": budgets_json(&opts),
    });
    let out = if common.json {
        format!("{summary:#}\n")
    } else {
        format!(
            "wrote {} ({} parallel rules, {} sequential rules, {} iterations{})\n",
            dir.display(),
            bundle.rpar.rules().len(),
            bundle.rseq.rules().len(),
            bundle.iterations,
            if bundle.any_unknown { ", some queries unknown" } else { "" }
        )
    };
    Ok(Outcome::ok(EXIT_YES, out))
}

fn rdha2prs(model: &Path, out: &Path) -> Result<Outcome, String> {
    let l = load(model)?;
    if l.rdha.is_none() {
        return Err(format!("{}: expected an rdha model", model.display()));
    }
    fs::write(out, l.brs.to_string()).map_err(|e| format!("{}: {e}", out.display()))?;
    Ok(Outcome::ok(EXIT_YES, format!("wrote {} ({} rules)\n", out.display(), l.brs.rules().len())))
}

fn sim(from: &str, depth: usize, model: &Path, common: &Common) -> Result<Outcome, String> {
    let l = load(model)?;
    let x = resolve(&l, from)?;
    let budget = common.node_budget.unwrap_or(oracle::DEFAULT_NODES);
    let f = explore(&l.brs, &x, depth, budget);
    let level = |mut i: usize| {
        let mut d = 0;
        while let Some((p, _)) = f.parent[i] {
            i = p;
            d += 1;
        }
        d
    };
    if common.json {
        let nodes: Vec<Value> =
            f.nodes.iter().enumerate().map(|(i, t)| json!({"id": i, "depth": level(i), "term": t.to_string()})).collect();
        let edges: Vec<Value> =
            f.edges.iter().map(|&(u, r, v)| json!({"from": u, "rule": l.brs.rule(r).name, "to": v})).collect();
        let j = json!({
            "command": "sim",
            "model": model.display().to_string(),
            "from": x.to_string(),
            "depth": depth,
            "saturated": f.saturated(),
            "nodes": nodes,
            "edges": edges,
            "budgets": {"nodes": budget},
        });
        return Ok(Outcome::ok(EXIT_YES, format!("{j:#}\n")));
    }
    let mut out = String::new();
    for (i, t) in f.nodes.iter().enumerate() {
        let _ = writeln!(out, "{:>3} {t}", level(i));
    }
    let _ = writeln!(
        out,
        "{} terms, {} edges, {}",
        f.nodes.len(),
        f.edges.len(),
        if f.saturated() { "saturated" } else { "frontier left" }
    );
    Ok(Outcome::ok(EXIT_YES, out))
}

fn oracle_cmd(problem: u8, from: &str, depth: usize, model: &Path, common: &Common) -> Result<Outcome, String> {
    let p = problem_of(problem)?;
    let l = load(model)?;
    let x = resolve(&l, from)?;
    let budget = common.node_budget.unwrap_or(oracle::DEFAULT_NODES);
    let a = ground_truth(&l.brs, &x, p, depth, budget);
    let code = tri_code(a.truth);
    if common.json {
        let j = json!({
            "command": "oracle",
            "model": model.display().to_string(),
            "from": x.to_string(),
            "problem": p.number(),
            "verdict": tri_word(a.truth),
            "condition": "none",
            "pumpKind": a.witness.as_ref().map(|w| w.kind().to_string()),
            "witness": witness_json(&l.brs, a.witness.as_ref()),
            "anyUnknown": !a.saturated && a.witness.is_none(),
            "saturated": a.saturated,
            "nodes": a.nodes,
            "budgets": {"depth": depth, "nodes": budget},
        });
        return Ok(Outcome::ok(code, format!("{j:#}\n")));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "oracle problem {} from {}: {} ({} nodes, {})",
        p.number(),
        x,
        tri_word(a.truth),
        a.nodes,
        if a.saturated { "saturated" } else { "bounded" }
    );
    if let Some(w) = &a.witness {
        witness_text(&mut out, &l.brs, w);
    }
    Ok(Outcome::ok(code, out))
}

/// Engine and oracle disagree on a definite answer, or an engine witness
/// fails to replay.
fn conflict(b: &Brs, p: Problem, engine: &ProblemVerdict, truth: Tri) -> Option<String> {
    match (engine.decision, truth) {
        (Tri::Yes, Tri::No) => return Some("engine yes, oracle no".into()),
        (Tri::No, Tri::Yes) => return Some("engine no, oracle yes".into()),
        _ => {}
    }
    if let Some(w) = &engine.witness {
        if !replay(b, w, 3) {
            return Some("engine witness does not replay".into());
        }
        if !p.pattern_ok(w.accepting_in_prefix(b), w.accepting_in_pump(b)) {
            return Some("engine witness has the wrong accepting pattern".into());
        }
    }
    None
}

fn xcheck(from: &str, depth: usize, model: &Path, common: &Common) -> Result<Outcome, String> {
    let l = load_normal(model)?;
    let x = resolve(&l, from)?;
    let opts = options(common);
    let nodes = oracle::DEFAULT_NODES;
    let bundle = decompose_with(&l.brs, opts.budgets).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    let mut conflicts = 0;
    for p in Problem::ALL {
        let e = decide_problem_with(&bundle, &x, p, opts).map_err(|e| e.to_string())?;
        let o = ground_truth(&l.brs, &x, p, depth, nodes);
        let c = conflict(&l.brs, p, &e, o.truth);
        conflicts += c.is_some() as usize;
        rows.push((p, e, o, c));
    }
    let code = if conflicts == 0 { EXIT_YES } else { EXIT_NO };
    if common.json {
        let rs: Vec<Value> = rows
            .iter()
            .map(|(p, e, o, c)| {
                json!({
                    "problem": p.number(),
                    "engine": tri_word(e.decision),
                    "condition": e.condition.to_string(),
                    "oracle": tri_word(o.truth),
                    "saturated": o.saturated,
                    "conflict": c,
                })
            })
            .collect();
        let j = json!({
            "command": "xcheck",
            "model": model.display().to_string(),
            "from": x.to_string(),
            "verdict": if conflicts == 0 { "agree" } else { "disagree" },
            "results": rs,
            "anyUnknown": rows.iter().any(|(_, e, _, _)| e.any_unknown),
            "budgets": {"reach": opts.budgets.reach, "finite": opts.budgets.finite, "run": opts.run_budget, "depth": depth, "nodes": nodes},
        });
        return Ok(Outcome::ok(code, format!("{j:#}\n")));
    }
    let mut out = String::new();
    for (p, e, o, c) in &rows {
        let _ = writeln!(
            out,
            "problem {}: engine {} ({}), oracle {}{}",
            p.number(),
            tri_word(e.decision),
            e.condition,
            tri_word(o.truth),
            c.as_ref().map(|c| format!("  CONFLICT: {c}")).unwrap_or_default()
        );
    }
    let _ = writeln!(out, "{}", if conflicts == 0 { "agree" } else { "disagree" });
    Ok(Outcome::ok(code, out))
}

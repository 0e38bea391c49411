//! Python bindings: parse systems and automata, normalize terms, decide
//! the three problems, model check the fragment and query the oracle.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::{json, Value};

use prsmc_core::brs::{successors, Brs};
use prsmc_core::checker::{decide_problem_with, model_check_fragment_with, CheckOptions, Problem};
use prsmc_core::decision::Tri;
use prsmc_core::oracle::{ground_truth, DEFAULT_DEPTH, DEFAULT_NODES};
use prsmc_core::rdha::{to_prs, validate, var_of};
use prsmc_core::saturate::decompose_with;
use prsmc_core::syntax::{parse_brs, parse_fragment, parse_model, parse_raw_term, parse_rdha, Model};
use prsmc_core::terms::{self, ProcessTerm, Variable};
use prsmc_core::witness::LassoWitness;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any().unbind(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(xs) => {
            let l = PyList::empty(py);
            for x in xs {
                l.append(to_py(py, x)?)?;
            }
            l.into_any().unbind()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any().unbind()
        }
    })
}

fn word(t: Tri) -> &'static str {
    match t {
        Tri::Yes => "yes",
        Tri::No => "no",
        Tri::Unknown => "unknown",
    }
}

fn witness(b: &Brs, w: Option<&LassoWitness>) -> Value {
    match w {
        Some(w) => json!({
            "kind": w.kind().to_string(),
            "steps": serde_json::to_value(w.steps(b)).unwrap_or(Value::Null),
        }),
        None => Value::Null,
    }
}

fn problem(n: u8) -> PyResult<Problem> {
    Problem::from_number(n).ok_or_else(|| value_err(format!("problem must be 1, 2 or 3, got {n}")))
}

fn options(node_budget: Option<usize>) -> CheckOptions {
    let mut o = CheckOptions::default();
    if let Some(n) = node_budget {
        o.run_budget = n;
        o.budgets.reach = n;
    }
    o
}

/// A Büchi rewrite system.
#[pyclass(name = "Brs", module = "prsmc", frozen)]
struct PyBrs {
    inner: Brs,
}

impl PyBrs {
    fn var(&self, name: &str) -> PyResult<Variable> {
        if let Ok(x) = self.inner.var(name) {
            return Ok(x);
        }
        // node names of a translated automaton
        let x = var_of(name);
        if self.inner.vars().contains(&x) {
            return Ok(x);
        }
        Err(value_err(format!("unknown variable `{name}`")))
    }
}

#[pymethods]
impl PyBrs {
    /// Parses a `brs { ... }` or `rdha { ... }` source; automata are
    /// translated.
    #[staticmethod]
    fn parse(src: &str) -> PyResult<Self> {
        match parse_model(src).map_err(value_err)? {
            Model::Brs(b) => Ok(PyBrs { inner: b }),
            Model::Rdha(r) => {
                let v = validate(&r);
                if let Some(first) = v.first() {
                    return Err(value_err(first));
                }
                Ok(PyBrs { inner: to_prs(&r) })
            }
        }
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))?;
        Self::parse(&src).map_err(|e| value_err(format!("{path}:{e}")))
    }

    #[getter]
    fn vars(&self) -> Vec<String> {
        self.inner.vars().iter().map(|v| v.to_string()).collect()
    }

    #[getter]
    fn alphabet(&self) -> Vec<String> {
        self.inner.alphabet().iter().map(|a| a.to_string()).collect()
    }

    #[getter]
    fn rules(&self) -> Vec<String> {
        self.inner.rules().iter().map(|r| r.to_string()).collect()
    }

    fn is_normal_form(&self) -> bool {
        self.inner.is_normal_form()
    }

    fn is_parallel(&self) -> bool {
        self.inner.is_parallel()
    }

    fn is_sequential(&self) -> bool {
        self.inner.is_sequential()
    }

    /// One-step successors of a term as `(rule, position, term)`.
    fn successors(&self, term: &str) -> PyResult<Vec<(String, String, String)>> {
        let t: ProcessTerm = term.parse().map_err(value_err)?;
        Ok(successors(&t, &self.inner)
            .into_iter()
            .map(|s| (self.inner.rule(s.rule).name.clone(), s.position.to_string(), s.result.to_string()))
            .collect())
    }

    /// Decides problem 1, 2 or 3 from a variable.
    #[pyo3(signature = (var, problem, node_budget=None))]
    fn check(&self, py: Python<'_>, var: &str, problem: u8, node_budget: Option<usize>) -> PyResult<Py<PyAny>> {
        let p = self::problem(problem)?;
        let x = self.var(var)?;
        self.inner.check_normal_form().map_err(value_err)?;
        let opts = options(node_budget);
        let b = &self.inner;
        let v = py
            .detach(|| {
                let bundle = decompose_with(b, opts.budgets)?;
                decide_problem_with(&bundle, &x, p, opts).map_err(|e| e.to_string().into())
            })
            .map_err(|e: Box<dyn std::error::Error + Send + Sync>| value_err(e))?;
        to_py(
            py,
            &json!({
                "verdict": word(v.decision),
                "condition": v.condition.to_string(),
                "any_unknown": v.any_unknown,
                "witness": witness(b, v.witness.as_ref()),
                "notes": v.notes,
            }),
        )
    }

    /// Model checks `F psi`, `GF psi` or a negation of either.
    #[pyo3(signature = (var, formula, node_budget=None))]
    fn model_check(&self, py: Python<'_>, var: &str, formula: &str, node_budget: Option<usize>) -> PyResult<Py<PyAny>> {
        let phi = parse_fragment(formula).map_err(value_err)?;
        let x = self.var(var)?;
        let b = &self.inner;
        let v = py.detach(|| model_check_fragment_with(b, &x, &phi, options(node_budget))).map_err(value_err)?;
        let problems: serde_json::Map<String, Value> =
            v.problems.iter().map(|p| (p.problem.number().to_string(), json!(word(p.decision)))).collect();
        let verdict = match v.holds {
            Tri::Yes => "holds",
            Tri::No => "fails",
            Tri::Unknown => "unknown",
        };
        to_py(
            py,
            &json!({
                "verdict": verdict,
                "formula": v.formula.to_string(),
                "vacuous": v.vacuous,
                "problems": problems,
                "counterexample": witness(b, v.counterexample.as_ref()),
            }),
        )
    }

    /// Builds the parallel and sequential systems.
    fn decompose(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let b = &self.inner;
        let d = py.detach(|| decompose_with(b, Default::default())).map_err(value_err)?;
        to_py(
            py,
            &json!({
                "rpar": d.rpar.to_string(),
                "rseq": d.rseq.to_string(),
                "iterations": d.iterations,
                "any_unknown": d.any_unknown,
                "summaries": d.summary_count(),
                "flags": d.flag_count(),
            }),
        )
    }

    /// Bounded explicit-state answer for one problem.
    #[pyo3(signature = (var, problem, depth=DEFAULT_DEPTH, nodes=DEFAULT_NODES))]
    fn oracle(&self, py: Python<'_>, var: &str, problem: u8, depth: usize, nodes: usize) -> PyResult<Py<PyAny>> {
        let p = self::problem(problem)?;
        let x = self.var(var)?;
        let b = &self.inner;
        let o = py.detach(|| ground_truth(b, &x, p, depth, nodes));
        to_py(
            py,
            &json!({
                "verdict": word(o.truth),
                "saturated": o.saturated,
                "nodes": o.nodes,
                "witness": witness(b, o.witness.as_ref()),
            }),
        )
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("<Brs: {} vars, {} rules>", self.inner.vars().len(), self.inner.rules().len())
    }
}

/// Canonical form of a term.
#[pyfunction]
fn normalize(term: &str) -> PyResult<String> {
    Ok(terms::normalize(&parse_raw_term(term).map_err(value_err)?).to_string())
}

#[pyfunction]
fn equivalent(a: &str, b: &str) -> PyResult<bool> {
    Ok(terms::equivalent(&parse_raw_term(a).map_err(value_err)?, &parse_raw_term(b).map_err(value_err)?))
}

/// Translates an automaton source to rewrite-system text.
#[pyfunction]
fn rdha_to_brs(src: &str) -> PyResult<String> {
    let r = parse_rdha(src).map_err(value_err)?;
    if let Some(v) = validate(&r).first() {
        return Err(value_err(v));
    }
    Ok(to_prs(&r).to_string())
}

/// Parses a `brs { ... }` source only.
#[pyfunction]
fn parse(src: &str) -> PyResult<PyBrs> {
    Ok(PyBrs { inner: parse_brs(src).map_err(value_err)? })
}

#[pymodule]
fn prsmc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBrs>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(equivalent, m)?)?;
    m.add_function(wrap_pyfunction!(rdha_to_brs, m)?)?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    Ok(())
}

//! Python bindings: parse, check, generate and simulate models from Python.

use std::sync::Arc;

use fsmforge::sim::run_scenario_with;
use fsmforge::{
    emit_dsl, emit_json, generate as gen_solidity, parse_dsl, parse_json, validate, weave, AdminAction,
    ContractModel, Diagnostic, Invocation, PluginConfig, SimConfig, SimError, SimSession,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn diag_error(diags: &[Diagnostic]) -> PyErr {
    let lines: Vec<String> = diags.iter().map(|d| d.render("<input>")).collect();
    PyValueError::new_err(lines.join("\n"))
}

fn sim_error(e: SimError) -> PyErr {
    PyRuntimeError::new_err(format!("{}: {e}", e.code()))
}

fn load(source: &str, format: &str, plugins: Option<&str>) -> PyResult<ContractModel> {
    let mut model = match format {
        "dsl" => parse_dsl(source),
        "json" => parse_json(source),
        other => return Err(PyValueError::new_err(format!("unknown format `{other}`"))),
    }
    .map_err(|d| diag_error(&d))?;
    if let Some(list) = plugins {
        model.plugins = PluginConfig::from_list(list).map_err(PyValueError::new_err)?;
    }
    Ok(model)
}

fn load_valid(source: &str, format: &str, plugins: Option<&str>) -> PyResult<ContractModel> {
    let model = load(source, format, plugins)?;
    let diags = validate(&model);
    if diags.iter().any(Diagnostic::is_error) {
        return Err(diag_error(&diags));
    }
    Ok(model)
}

fn to_python<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Diagnostics for a model as `(severity, code, message)` tuples.
#[pyfunction]
#[pyo3(signature = (source, format = "dsl"))]
fn check(source: &str, format: &str) -> PyResult<Vec<(String, String, String)>> {
    let diags = match load(source, format, None) {
        Ok(model) => validate(&model),
        Err(e) => return Err(e),
    };
    Ok(diags
        .iter()
        .map(|d| (d.severity.to_string(), d.code.to_string(), d.message.clone()))
        .collect())
}

/// Solidity source for a valid model.
#[pyfunction]
#[pyo3(signature = (source, plugins = None, format = "dsl"))]
fn generate(source: &str, plugins: Option<&str>, format: &str) -> PyResult<String> {
    let model = load_valid(source, format, plugins)?;
    Ok(gen_solidity(&weave(&model)))
}

/// Canonical DSL text.
#[pyfunction]
#[pyo3(signature = (source, format = "dsl"))]
fn to_dsl(source: &str, format: &str) -> PyResult<String> {
    Ok(emit_dsl(&load(source, format, None)?))
}

/// Canonical JSON text.
#[pyfunction]
#[pyo3(signature = (source, format = "dsl"))]
fn to_json(source: &str, format: &str) -> PyResult<String> {
    Ok(emit_json(&load(source, format, None)?))
}

/// Run a scenario script; returns `(passed, report_text)`.
#[pyfunction]
#[pyo3(signature = (source, script, plugins = None, format = "dsl"))]
fn run_scenario(source: &str, script: &str, plugins: Option<&str>, format: &str) -> PyResult<(bool, String)> {
    let model = load_valid(source, format, plugins)?;
    let report = run_scenario_with(Arc::new(weave(&model)), script).map_err(sim_error)?;
    Ok((report.passed(), report.to_string()))
}

/// A live simulated contract.
#[pyclass(name = "Session", unsendable)]
struct PySession {
    inner: SimSession,
}

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (source, plugins = None, format = "dsl", deployer = "deployer"))]
    fn new(source: &str, plugins: Option<&str>, format: &str, deployer: &str) -> PyResult<Self> {
        let model = load_valid(source, format, plugins)?;
        let config = SimConfig {
            deployer: deployer.to_string(),
            ..SimConfig::default()
        };
        let inner = SimSession::new(weave(&model), &config).map_err(sim_error)?;
        Ok(Self { inner })
    }

    /// Invoke a transition; returns the outcome as a dict.
    #[pyo3(signature = (transition, sender, n = None, overrides = None, probe = None))]
    fn invoke(
        &mut self,
        py: Python<'_>,
        transition: &str,
        sender: &str,
        n: Option<u64>,
        overrides: Option<Vec<(usize, bool)>>,
        probe: Option<(String, String, Option<u64>)>,
    ) -> PyResult<Py<PyAny>> {
        let mut call = Invocation::new(transition, sender);
        call.next_transition_number = n;
        for (i, v) in overrides.unwrap_or_default() {
            call = call.with_override(i, v);
        }
        if let Some((t, s, pn)) = probe {
            let mut inner = Invocation::new(t, s);
            inner.next_transition_number = pn;
            call = call.with_probe(inner);
        }
        let outcome = self.inner.invoke(&call).map_err(sim_error)?;
        to_python(py, &outcome)
    }

    fn add_admin(&mut self, py: Python<'_>, target: &str, sender: &str) -> PyResult<Py<PyAny>> {
        let o = self.inner.admin_call(AdminAction::Add, target, sender).map_err(sim_error)?;
        to_python(py, &o)
    }

    fn remove_admin(&mut self, py: Python<'_>, target: &str, sender: &str) -> PyResult<Py<PyAny>> {
        let o = self.inner.admin_call(AdminAction::Remove, target, sender).map_err(sim_error)?;
        to_python(py, &o)
    }

    fn advance_time(&mut self, to: u64) -> PyResult<()> {
        self.inner.advance_time(to).map_err(sim_error)
    }

    fn set_env(&mut self, name: &str, value: i64) {
        self.inner.set_env(name, value);
    }

    #[getter]
    fn state(&self) -> String {
        self.inner.current_state().to_string()
    }

    #[getter]
    fn counter(&self) -> u64 {
        self.inner.transition_counter()
    }

    #[getter]
    fn now(&self) -> u64 {
        self.inner.now()
    }

    fn snapshot<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let snap = self.inner.snapshot();
        let d = PyDict::new(py);
        d.set_item("state", snap.state)?;
        d.set_item("counter", snap.counter)?;
        d.set_item("admins", snap.admins)?;
        d.set_item("now", snap.now)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Session({})", self.inner.snapshot())
    }
}

/// Bundled example files as `(name, text)` pairs.
#[pyfunction]
fn examples() -> Vec<(&'static str, &'static str)> {
    fsmforge::corpus::FILES.to_vec()
}

#[pymodule]
#[pyo3(name = "fsmforge")]
fn fsmforge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(to_dsl, m)?)?;
    m.add_function(wrap_pyfunction!(to_json, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(examples, m)?)?;
    m.add_class::<PySession>()?;
    Ok(())
}

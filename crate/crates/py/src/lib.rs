//! `multibot` Python module.
//!
//! Structured values (turns, snapshots, metrics, commands) cross the boundary
//! as plain dicts and lists; logs and corpora as JSONL strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::{json, Value};

use multibot_core::dialogue::{self, generate_corpus, AddressingMode};
use multibot_core::orchestrator::{
    self as orch, parse_log, parse_script, parse_tbs_value, to_jsonl, DmMode, Outbound,
};
use multibot_core::sim::ScenarioConfig;
use multibot_core::tbs;
use multibot_core::world::load_map;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn ser<'py, T: serde::Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &serde_json::to_value(x).map_err(err)?)
}

/// Python object -> JSON value, by way of the `json` module.
fn from_py(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(err)
}

fn outbound_json(out: &[Outbound]) -> Value {
    out.iter()
        .map(|o| match o {
            Outbound::Chat(t) => json!({ "kind": "chat", "turn": t }),
            Outbound::WizardInbox(t) => json!({ "kind": "wizard_inbox", "turn": t }),
            Outbound::WizardError(m) => json!({ "kind": "error", "message": m }),
        })
        .collect()
}

/// Map, corpus and scenario for a session.
#[pyclass(name = "SessionConfig", module = "multibot", from_py_object)]
#[derive(Clone)]
struct PySessionConfig {
    inner: orch::SessionConfig,
}

#[pymethods]
impl PySessionConfig {
    /// The bundled demo town with Husky and Snapdragon.
    #[staticmethod]
    fn demo() -> Self {
        Self { inner: orch::SessionConfig::demo() }
    }

    #[staticmethod]
    fn from_paths(map: &str, corpus: &str, config: &str) -> PyResult<Self> {
        let inner = orch::SessionConfig::from_paths(map.as_ref(), corpus.as_ref(), config.as_ref()).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_texts(map_json: &str, corpus_jsonl: &str, config_json: &str) -> PyResult<Self> {
        let inner = orch::SessionConfig::from_texts(map_json, corpus_jsonl, config_json).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.scenario.seed
    }
    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.scenario.seed = seed;
    }

    #[getter]
    fn dm_mode(&self) -> &'static str {
        self.inner.dm_mode.as_str()
    }
    #[setter]
    fn set_dm_mode(&mut self, mode: &str) -> PyResult<()> {
        self.inner.dm_mode = mode.parse::<DmMode>().map_err(err)?;
        Ok(())
    }

    #[getter]
    fn addressing(&self) -> &'static str {
        match self.inner.addressing {
            AddressingMode::Explicit => "explicit",
            AddressingMode::Implicit => "implicit",
        }
    }
    #[setter]
    fn set_addressing(&mut self, mode: &str) -> PyResult<()> {
        self.inner.addressing = mode.parse().map_err(err)?;
        Ok(())
    }

    #[getter]
    fn robots(&self) -> Vec<String> {
        self.inner.scenario.robots.iter().map(|r| r.id.clone()).collect()
    }

    #[getter]
    fn corpus_sha256(&self) -> &str {
        &self.inner.corpus_sha256
    }

    fn __repr__(&self) -> String {
        format!(
            "SessionConfig(map={:?}, robots={:?}, seed={}, dm_mode={:?})",
            self.inner.map.name(),
            self.robots(),
            self.seed(),
            self.dm_mode()
        )
    }
}

/// A live session driven step by step from Python.
#[pyclass(name = "Session", module = "multibot")]
struct PySession {
    inner: orch::Session,
    wizard_msgs: u64,
}

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (config, id = "py".to_string()))]
    fn new(config: PySessionConfig, id: String) -> PyResult<Self> {
        let wizard = config.inner.dm_mode == DmMode::Wizard;
        let mut inner = orch::Session::new(id, config.inner).map_err(err)?;
        inner.attach_wizard(wizard);
        Ok(Self { inner, wizard_msgs: 0 })
    }

    /// Sends an operator utterance; returns the resulting messages.
    fn say<'py>(&mut self, py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &outbound_json(&self.inner.say(text)))
    }

    /// Answers as the wizard, optionally issuing a command (a dict or TBS line).
    #[pyo3(signature = (reply, tbs = None))]
    fn wizard<'py>(
        &mut self,
        py: Python<'py>,
        reply: &str,
        tbs: Option<&Bound<'py, PyAny>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        self.wizard_msgs += 1;
        let fallback = format!("wiz-{:04}", self.wizard_msgs);
        let tbs = match tbs {
            Some(obj) => Some(parse_tbs_value(&from_py(obj)?, &fallback, self.inner.clock()).map_err(err)?),
            None => None,
        };
        let out = self.inner.wizard_submit(reply, tbs).map_err(err)?;
        to_py(py, &outbound_json(&out))
    }

    /// Advances the simulation by `n` ticks; returns robot reports.
    #[pyo3(signature = (n = 1))]
    fn tick<'py>(&mut self, py: Python<'py>, n: usize) -> PyResult<Bound<'py, PyAny>> {
        let mut out = Vec::new();
        for _ in 0..n {
            out.extend(self.inner.tick());
        }
        to_py(py, &outbound_json(&out))
    }

    /// Ticks until every robot is idle or `max_time` sim-seconds pass.
    #[pyo3(signature = (max_time = 600.0))]
    fn run_until_idle<'py>(&mut self, py: Python<'py>, max_time: f64) -> PyResult<Bound<'py, PyAny>> {
        let end = self.inner.clock() + max_time;
        let mut out = Vec::new();
        while !self.inner.sim().all_idle() && self.inner.clock() < end {
            out.extend(self.inner.tick());
        }
        to_py(py, &outbound_json(&out))
    }

    #[getter]
    fn clock(&self) -> f64 {
        self.inner.clock()
    }

    #[getter]
    fn dm_mode(&self) -> &'static str {
        self.inner.dm_mode().as_str()
    }

    fn snapshot<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        ser(py, &self.inner.snapshot())
    }

    fn transcript<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        ser(py, &self.inner.transcript())
    }

    fn log_jsonl(&self) -> String {
        to_jsonl(self.inner.log())
    }

    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        ser(py, &orch::compute_metrics(self.inner.log()).map_err(err)?)
    }
}

/// Runs a JSONL script headlessly; returns `(log_jsonl, metrics)`.
#[pyfunction]
fn run_headless<'py>(
    py: Python<'py>,
    config: PySessionConfig,
    script_jsonl: &str,
) -> PyResult<(String, Bound<'py, PyAny>)> {
    let script = parse_script(script_jsonl).map_err(err)?;
    let (log, metrics) = orch::run_headless(config.inner, &script).map_err(err)?;
    Ok((to_jsonl(&log), ser(py, &metrics)?))
}

#[pyfunction]
fn compute_metrics<'py>(py: Python<'py>, log_jsonl: &str) -> PyResult<Bound<'py, PyAny>> {
    let log = parse_log(log_jsonl).map_err(err)?;
    ser(py, &orch::compute_metrics(&log).map_err(err)?)
}

/// Frames a console would have seen, as `{"type": ..., "payload": ...}` dicts.
#[pyfunction]
fn replay<'py>(py: Python<'py>, log_jsonl: &str) -> PyResult<Bound<'py, PyAny>> {
    let frames = orch::replay(&parse_log(log_jsonl).map_err(err)?).map_err(err)?;
    ser(py, &frames)
}

/// Canonical wire line for a command dict. Missing `id`, `t`, `v` and
/// optional fields are filled with defaults.
#[pyfunction]
fn encode_tbs(msg: &Bound<'_, PyAny>) -> PyResult<String> {
    let msg = parse_tbs_value(&from_py(msg)?, "py-0001", 0.0).map_err(err)?;
    Ok(tbs::encode(&msg))
}

/// Parses a wire line into a dict with every field present.
#[pyfunction]
fn decode_tbs<'py>(py: Python<'py>, line: &str) -> PyResult<Bound<'py, PyAny>> {
    let canonical = tbs::encode(&tbs::decode(line).map_err(err)?);
    to_py(py, &serde_json::from_str(&canonical).map_err(err)?)
}

/// Builds a corpus for a map; the roster defaults to the demo team.
#[pyfunction]
#[pyo3(signature = (map_json, config_json = None))]
fn gen_corpus(map_json: &str, config_json: Option<&str>) -> PyResult<String> {
    let map = load_map(map_json).map_err(err)?;
    let scenario = match config_json {
        Some(c) => ScenarioConfig::from_json(c).map_err(err)?,
        None => multibot_core::demo::config(),
    };
    Ok(dialogue::to_jsonl(&generate_corpus(&map, &scenario.robots)))
}

#[pymodule]
fn multibot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Adds the module's classes and functions to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySessionConfig>()?;
    m.add_class::<PySession>()?;
    m.add_function(wrap_pyfunction!(run_headless, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(encode_tbs, m)?)?;
    m.add_function(wrap_pyfunction!(decode_tbs, m)?)?;
    m.add_function(wrap_pyfunction!(gen_corpus, m)?)?;
    Ok(())
}

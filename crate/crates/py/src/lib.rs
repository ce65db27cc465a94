//! Python bindings: load or generate instances, compute dimensions and
//! game values, and play games. Transcripts come back as JSON text.

use std::collections::BTreeMap;
use std::sync::Arc;

use pyo3::exceptions::{PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use improve_core::dimensions::{DimensionKind, Dimensions};
use improve_core::engine::{check_transcript, play, AdversaryKind, GameConfig, Setting};
use improve_core::gen::GenParams;
use improve_core::io::{instance_from_json, instance_to_json, transcript_to_json};
use improve_core::learners::LearnerKind;
use improve_core::oracle::{certify_dimension, minimax_value};
use improve_core::{fixtures, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Parse(_) | Error::Invalid(_) | Error::SettingMismatch(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::ResourceLimit(_) => PyMemoryError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// An improvement graph, a label space and a finite hypothesis class.
#[pyclass(name = "Instance", frozen)]
struct PyInstance {
    dims: Arc<Dimensions>,
}

impl PyInstance {
    fn wrap(inst: improve_core::model::Instance) -> Self {
        PyInstance {
            dims: Arc::new(Dimensions::new(Arc::new(inst))),
        }
    }
}

#[pymethods]
impl PyInstance {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        instance_from_json(text).map(Self::wrap).map_err(to_py)
    }

    /// Built-in examples: f1, f2, f3, f4 and pairsN for the family of N
    /// improvement pairs.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        let inst = match name {
            "f1" => fixtures::f1(),
            "f2" => fixtures::f2(),
            "f3" => fixtures::f3(),
            "f4" => fixtures::f4(),
            _ => match name.strip_prefix("pairs").and_then(|n| n.parse().ok()) {
                Some(n @ 1..=6) => fixtures::pairs(n),
                _ => return Err(PyValueError::new_err(format!("unknown fixture {name:?}"))),
            },
        };
        Ok(Self::wrap(inst))
    }

    fn to_json(&self) -> String {
        instance_to_json(self.dims.instance())
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.dims.instance().num_nodes()
    }

    #[getter]
    fn num_labels(&self) -> usize {
        self.dims.instance().num_labels()
    }

    #[getter]
    fn num_hypotheses(&self) -> usize {
        self.dims.instance().num_hypotheses()
    }

    #[getter]
    fn max_degree(&self) -> usize {
        self.dims.instance().max_degree()
    }

    fn dimension(&self, kind: &str) -> PyResult<i32> {
        let kind: DimensionKind = parse(kind)?;
        self.dims.ensure_applies(kind).map_err(to_py)?;
        Ok(self.dims.dim(kind, &self.dims.instance().full()))
    }

    /// Every dimension defined on this label space, by name.
    fn dimensions(&self) -> BTreeMap<&'static str, i32> {
        let inst = self.dims.instance();
        let full = inst.full();
        DimensionKind::ALL
            .into_iter()
            .filter(|k| k.applies_to(inst))
            .map(|k| (k.as_str(), self.dims.dim(k, &full)))
            .collect()
    }

    #[pyo3(signature = (setting = "binary-full"))]
    fn minimax(&self, py: Python<'_>, setting: &str) -> PyResult<i32> {
        let setting: Setting = parse(setting)?;
        let inst = self.dims.instance().clone();
        py.detach(move || minimax_value(&inst, setting))
            .map_err(to_py)
    }

    /// Returns `(game value, dimension, equal)`.
    #[pyo3(signature = (setting = "binary-full"))]
    fn certify(&self, py: Python<'_>, setting: &str) -> PyResult<(i32, i32, bool)> {
        let setting: Setting = parse(setting)?;
        let dims = self.dims.clone();
        let c = py
            .detach(move || certify_dimension(&dims, setting))
            .map_err(to_py)?;
        Ok((c.value, c.dim, c.holds()))
    }

    /// Plays one game and returns `(mistakes, transcript JSON)`.
    #[pyo3(signature = (setting = "binary-full", learner = None, adversary = "tree", seed = 0, horizon = None))]
    fn run(
        &self,
        setting: &str,
        learner: Option<&str>,
        adversary: &str,
        seed: u64,
        horizon: Option<usize>,
    ) -> PyResult<(usize, String)> {
        let config = GameConfig {
            learner: learner.map(parse::<LearnerKind>).transpose()?,
            adversary: parse::<AdversaryKind>(adversary)?,
            seed,
            horizon,
            ..GameConfig::for_setting(parse(setting)?)
        };
        let t = play(&self.dims, &config).map_err(to_py)?;
        let inst = self.dims.instance();
        let report = check_transcript(inst, &t);
        if !report.is_clean() {
            return Err(PyRuntimeError::new_err(report.violations.join("; ")));
        }
        Ok((t.mistakes, transcript_to_json(inst, &t).to_string()))
    }

    fn __repr__(&self) -> String {
        let inst = self.dims.instance();
        format!(
            "Instance(nodes={}, labels={}, hypotheses={})",
            inst.num_nodes(),
            inst.num_labels(),
            inst.num_hypotheses()
        )
    }
}

/// Seeded random instance; `degree` counts neighbors besides the node itself.
#[pyfunction]
#[pyo3(signature = (nodes = 4, degree = 2, labels = 2, hyps = 8, weighted = false, seed = 0))]
fn generate(
    nodes: usize,
    degree: usize,
    labels: usize,
    hyps: usize,
    weighted: bool,
    seed: u64,
) -> PyResult<PyInstance> {
    let params = GenParams {
        nodes,
        degree,
        labels,
        hyps,
        weighted,
        seed,
    };
    improve_core::gen::generate(&params)
        .map(PyInstance::wrap)
        .map_err(to_py)
}

#[pymodule]
fn improvement_learning(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}

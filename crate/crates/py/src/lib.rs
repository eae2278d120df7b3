//! Python bindings: `import vwsd`.

use std::path::{Path, PathBuf};

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use vwsd_core::metrics::{self, ConfusionReport, MetricsReport};
use vwsd_core::scoring::{self, ScoreKind};
use vwsd_core::{AuxKind, EmbeddingSpace, Kind, QuerySource, SampleMetric};

create_exception!(vwsd, VwsdError, PyException, "Data, validation or scoring error.");

fn err(e: vwsd_core::Error) -> PyErr {
    VwsdError::new_err(e.to_string())
}

fn io_err(path: &Path, e: std::io::Error) -> PyErr {
    VwsdError::new_err(format!("cannot read {}: {e}", path.display()))
}

fn parse_kind(kind: &str) -> PyResult<Kind> {
    match kind {
        "text" => Ok(Kind::Text),
        "image" => Ok(Kind::Image),
        other => Err(PyValueError::new_err(format!("kind must be 'text' or 'image', not {other:?}"))),
    }
}

fn kind_name(kind: Option<ScoreKind>) -> Option<&'static str> {
    kind.map(|k| match k {
        ScoreKind::Cosine => "cosine",
        ScoreKind::MaxCosine => "max_cosine",
        ScoreKind::NegL2 => "neg_l2",
        ScoreKind::Probability => "probability",
    })
}

#[pyclass(name = "Dataset", module = "vwsd", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyDataset(vwsd_core::Dataset);

#[pymethods]
impl PyDataset {
    /// Parses dataset TSV text, optionally attaching gold labels.
    #[staticmethod]
    #[pyo3(signature = (tsv, split = "data", gold = None))]
    fn parse(tsv: &str, split: &str, gold: Option<&str>) -> PyResult<Self> {
        let ds = vwsd_core::Dataset::parse(tsv, split).map_err(err)?;
        Ok(PyDataset(match gold {
            Some(g) => ds.with_gold(g).map_err(err)?,
            None => ds,
        }))
    }

    /// Reads a dataset file; the split name defaults to the file stem.
    #[staticmethod]
    #[pyo3(signature = (path, gold = None, split = None))]
    fn load(path: PathBuf, gold: Option<PathBuf>, split: Option<String>) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let split = split.unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "data".into())
        });
        let gold = gold
            .map(|g| std::fs::read_to_string(&g).map_err(|e| io_err(&g, e)))
            .transpose()?;
        Self::parse(&text, &split, gold.as_deref())
    }

    fn with_gold(&self, gold: &str) -> PyResult<Self> {
        Ok(PyDataset(self.0.with_gold(gold).map_err(err)?))
    }

    #[getter]
    fn split(&self) -> &str {
        &self.0.split_name
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.0.instances.iter().map(|i| i.id.clone()).collect()
    }

    #[getter]
    fn is_labeled(&self) -> bool {
        self.0.is_labeled()
    }

    /// One instance as a dict with `id`, `target_word`, `full_phrase`,
    /// `candidates` and `gold`.
    fn instance<'py>(&self, py: Python<'py>, id: &str) -> PyResult<Bound<'py, PyDict>> {
        let inst = self
            .0
            .get(id)
            .ok_or_else(|| PyValueError::new_err(format!("no instance {id:?}")))?;
        let d = PyDict::new(py);
        d.set_item("id", &inst.id)?;
        d.set_item("target_word", &inst.target_word)?;
        d.set_item("full_phrase", &inst.full_phrase)?;
        d.set_item("candidates", &inst.candidates)?;
        d.set_item("gold", &inst.gold)?;
        Ok(d)
    }

    fn warnings(&self) -> Vec<String> {
        self.0.warnings()
    }

    fn to_tsv(&self) -> String {
        self.0.to_tsv()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(split={:?}, instances={})", self.0.split_name, self.0.len())
    }
}

#[pyclass(name = "AuxQueryFile", module = "vwsd", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyAuxQueryFile(vwsd_core::AuxQueryFile);

#[pymethods]
impl PyAuxQueryFile {
    /// `kind` is `"text"` (one row per instance) or `"samples"`.
    #[staticmethod]
    fn parse(tag: &str, kind: &str, tsv: &str, dataset: &PyDataset) -> PyResult<Self> {
        let kind = match kind {
            "text" => AuxKind::Text,
            "samples" => AuxKind::Samples,
            other => return Err(PyValueError::new_err(format!("kind must be 'text' or 'samples', not {other:?}"))),
        };
        Ok(PyAuxQueryFile(
            vwsd_core::AuxQueryFile::parse(tag, kind, tsv, &dataset.0).map_err(err)?,
        ))
    }

    #[getter]
    fn tag(&self) -> &str {
        &self.0.tag
    }

    fn text(&self, id: &str) -> Option<String> {
        self.0.text(id).map(str::to_string)
    }

    fn samples(&self, id: &str) -> Option<Vec<String>> {
        self.0.samples(id).map(<[String]>::to_vec)
    }
}

#[pyclass(name = "EmbeddingStore", module = "vwsd", skip_from_py_object)]
#[derive(Clone, Default)]
pub struct PyEmbeddingStore(vwsd_core::EmbeddingStore);

#[pymethods]
impl PyEmbeddingStore {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    /// Reads a binary or JSONL store file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let bytes = std::fs::read(&path).map_err(|e| io_err(&path, e))?;
        Ok(PyEmbeddingStore(vwsd_core::EmbeddingStore::from_any(&bytes).map_err(err)?))
    }

    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        Ok(PyEmbeddingStore(vwsd_core::EmbeddingStore::from_jsonl(text).map_err(err)?))
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(PyEmbeddingStore(vwsd_core::EmbeddingStore::from_binary(data).map_err(err)?))
    }

    fn to_jsonl(&self) -> PyResult<String> {
        self.0.to_jsonl().map_err(err)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &self.0.to_binary().map_err(err)?))
    }

    #[pyo3(signature = (name, dim, normalized = true))]
    fn add_space(&mut self, name: &str, dim: usize, normalized: bool) -> PyResult<()> {
        let space = EmbeddingSpace::new(name, dim, normalized).map_err(err)?;
        self.0.add_space(space).map_err(err)
    }

    /// `(name, dim, normalized)` per space.
    fn spaces(&self) -> Vec<(String, usize, bool)> {
        self.0
            .spaces()
            .map(|s| (s.name.clone(), s.dim, s.normalized))
            .collect()
    }

    /// Adds a vector; vectors in normalized spaces that are slightly off unit
    /// length are rescaled, larger deviations are rejected.
    fn insert(&mut self, space: &str, kind: &str, key: &str, vector: Vec<f32>) -> PyResult<()> {
        self.0
            .insert_normalizing(space, parse_kind(kind)?, key, vector)
            .map_err(err)
    }

    fn get(&self, space: &str, kind: &str, key: &str) -> PyResult<Option<Vec<f32>>> {
        Ok(self.0.get(space, parse_kind(kind)?, key).map(<[f32]>::to_vec))
    }

    fn merge(&mut self, other: &PyEmbeddingStore) -> PyResult<()> {
        self.0.merge(&other.0).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __contains__(&self, item: (String, String, String)) -> PyResult<bool> {
        Ok(self.0.contains(&item.0, parse_kind(&item.1)?, &item.2))
    }

    fn __repr__(&self) -> String {
        format!("EmbeddingStore(spaces={}, entries={})", self.0.spaces().count(), self.0.len())
    }
}

#[pyclass(name = "SystemSpec", module = "vwsd", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySystemSpec(vwsd_core::SystemSpec);

#[pymethods]
impl PySystemSpec {
    /// `query` is one of `phrase`, `context`, `translation`, `sd_samples`;
    /// all but `phrase` need the aux `tag`.
    #[new]
    #[pyo3(signature = (name, space, query = "phrase", tag = None, metric = "max_cosine",
                        logit_scale = scoring::DEFAULT_LOGIT_SCALE,
                        l2_temperature = scoring::DEFAULT_L2_TEMPERATURE))]
    fn new(
        name: &str,
        space: &str,
        query: &str,
        tag: Option<String>,
        metric: &str,
        logit_scale: f64,
        l2_temperature: f64,
    ) -> PyResult<Self> {
        let tag = |q: &str| {
            tag.clone()
                .ok_or_else(|| PyValueError::new_err(format!("query {q:?} needs a tag")))
        };
        let query = match query {
            "phrase" => QuerySource::Phrase,
            "context" => QuerySource::Context { tag: tag(query)? },
            "translation" => QuerySource::Translation { tag: tag(query)? },
            "sd_samples" => QuerySource::SdSamples {
                tag: tag(query)?,
                metric: match metric {
                    "max_cosine" => SampleMetric::MaxCosine,
                    "min_l2" => SampleMetric::MinL2,
                    other => return Err(PyValueError::new_err(format!("unknown metric {other:?}"))),
                },
            },
            other => return Err(PyValueError::new_err(format!("unknown query {other:?}"))),
        };
        let spec = vwsd_core::SystemSpec::new(name, space, query)
            .with_logit_scale(logit_scale)
            .with_l2_temperature(l2_temperature);
        spec.validate().map_err(err)?;
        Ok(PySystemSpec(spec))
    }

    #[getter]
    fn name(&self) -> &str {
        &self.0.name
    }

    fn __repr__(&self) -> String {
        format!("SystemSpec(name={:?}, space={:?}, query={:?})", self.0.name, self.0.space, self.0.query)
    }
}

#[pyclass(name = "ScoreTable", module = "vwsd", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyScoreTable(vwsd_core::ScoreTable);

impl PyScoreTable {
    fn row(&self, id: &str) -> PyResult<&vwsd_core::ScoreRow> {
        self.0
            .rows
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| PyValueError::new_err(format!("no row for instance {id:?}")))
    }
}

#[pymethods]
impl PyScoreTable {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyScoreTable(vwsd_core::ScoreTable::from_json(text).map_err(err)?))
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    #[getter]
    fn system(&self) -> &str {
        &self.0.system
    }

    #[getter]
    fn kind(&self) -> Option<&'static str> {
        kind_name(self.0.kind)
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.0.rows.iter().map(|r| r.id.clone()).collect()
    }

    #[getter]
    fn predictions(&self) -> Vec<String> {
        self.0.rows.iter().map(|r| r.predicted.clone()).collect()
    }

    fn raw(&self, id: &str) -> PyResult<Vec<f64>> {
        Ok(self.row(id)?.raw.clone())
    }

    fn probs(&self, id: &str) -> PyResult<Vec<f64>> {
        Ok(self.row(id)?.probs.clone())
    }

    fn ranking(&self, id: &str) -> PyResult<Vec<String>> {
        Ok(self.row(id)?.ranking.clone())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("ScoreTable(system={:?}, rows={})", self.0.system, self.0.len())
    }
}

/// Scores every instance of `dataset` with one system.
#[pyfunction]
#[pyo3(signature = (dataset, system, store, aux = Vec::new(), jobs = None))]
fn score_system(
    py: Python<'_>,
    dataset: &PyDataset,
    system: &PySystemSpec,
    store: &PyEmbeddingStore,
    aux: Vec<PyRef<'_, PyAuxQueryFile>>,
    jobs: Option<usize>,
) -> PyResult<PyScoreTable> {
    let aux: Vec<vwsd_core::AuxQueryFile> = aux.iter().map(|a| a.0.clone()).collect();
    let (ds, spec, store) = (&dataset.0, &system.0, &store.0);
    py.detach(|| vwsd_core::score_system(ds, spec, store, &aux, jobs))
        .map(PyScoreTable)
        .map_err(err)
}

/// Weighted average of member probabilities; members default to every
/// table given, weights to equal.
#[pyfunction]
#[pyo3(signature = (tables, name, members = None, weights = None))]
fn ensemble(
    tables: Vec<PyRef<'_, PyScoreTable>>,
    name: &str,
    members: Option<Vec<String>>,
    weights: Option<Vec<f64>>,
) -> PyResult<PyScoreTable> {
    let tables: Vec<vwsd_core::ScoreTable> = tables.iter().map(|t| t.0.clone()).collect();
    let members = members.unwrap_or_else(|| tables.iter().map(|t| t.system.clone()).collect());
    let spec = vwsd_core::EnsembleSpec::new(name, members, weights).map_err(err)?;
    vwsd_core::ensemble_tables(&tables, &spec)
        .map(PyScoreTable)
        .map_err(err)
}

fn metrics_dict<'py>(py: Python<'py>, r: &MetricsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("system", &r.system)?;
    d.set_item("n", r.n)?;
    d.set_item("hits", r.hits)?;
    d.set_item("hit_rate", r.hit_rate)?;
    d.set_item("mrr", r.mrr)?;
    d.set_item("hit_fraction", r.hit_fraction)?;
    d.set_item("mrr_fraction", r.mrr_fraction)?;
    Ok(d)
}

/// Hit rate and MRR (percent, two decimals) plus the unrounded fractions.
#[pyfunction]
fn evaluate<'py>(py: Python<'py>, table: &PyScoreTable, dataset: &PyDataset) -> PyResult<Bound<'py, PyDict>> {
    metrics_dict(py, &vwsd_core::evaluate(&table.0, &dataset.0).map_err(err)?)
}

fn confusion_dict<'py>(py: Python<'py>, r: &ConfusionReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("system_a", &r.system_a)?;
    d.set_item("system_b", &r.system_b)?;
    d.set_item("n", r.n)?;
    d.set_item("counts", r.counts)?;
    d.set_item("quadrant_means", r.quadrant_means)?;
    Ok(d)
}

/// 2x2 correct/incorrect counts (rows: `a`, columns: `b`). With
/// `sim_gap=True` both tables must hold text-image cosines and the
/// per-quadrant mean gold-similarity difference (b minus a) is added.
#[pyfunction]
#[pyo3(signature = (a, b, dataset, sim_gap = false))]
fn confusion<'py>(
    py: Python<'py>,
    a: &PyScoreTable,
    b: &PyScoreTable,
    dataset: &PyDataset,
    sim_gap: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let ds = &dataset.0;
    let report = if sim_gap {
        let sa = metrics::gold_similarities(&a.0, ds).map_err(err)?;
        let sb = metrics::gold_similarities(&b.0, ds).map_err(err)?;
        metrics::sim_gap_quadrants(&a.0, &b.0, &sa, &sb, ds)
    } else {
        metrics::confusion(&a.0, &b.0, ds)
    }
    .map_err(err)?;
    confusion_dict(py, &report)
}

/// Mean cosine to the gold image and to all candidates.
#[pyfunction]
fn mean_sim(table: &PyScoreTable, dataset: &PyDataset) -> PyResult<(f64, f64)> {
    let s = metrics::mean_sim_stats(&table.0, &dataset.0).map_err(err)?;
    Ok((s.mean_sim_gold, s.mean_sim_all))
}

/// Groups instances by whether the round trip reproduced the phrase up to
/// case; returns `{"identical": (count, mean), "different": (count, mean)}`.
#[pyfunction]
fn roundtrip<'py>(
    py: Python<'py>,
    dataset: &PyDataset,
    round_trip: &PyAuxQueryFile,
    foreign: &PyScoreTable,
) -> PyResult<Bound<'py, PyDict>> {
    let pairs = metrics::roundtrip_pairs(&dataset.0, &round_trip.0).map_err(err)?;
    let r = metrics::roundtrip_stats(&pairs, &foreign.0, &dataset.0).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("identical", (r.identical.count, r.identical.mean_sim_gold))?;
    d.set_item("different", (r.different.count, r.different.mean_sim_gold))?;
    Ok(d)
}

#[pyfunction]
fn softmax(logits: Vec<f64>) -> PyResult<Vec<f64>> {
    scoring::softmax(&logits).map_err(err)
}

#[pymodule]
fn vwsd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("VwsdError", m.py().get_type::<VwsdError>())?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyAuxQueryFile>()?;
    m.add_class::<PyEmbeddingStore>()?;
    m.add_class::<PySystemSpec>()?;
    m.add_class::<PyScoreTable>()?;
    m.add_function(wrap_pyfunction!(score_system, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(confusion, m)?)?;
    m.add_function(wrap_pyfunction!(mean_sim, m)?)?;
    m.add_function(wrap_pyfunction!(roundtrip, m)?)?;
    m.add_function(wrap_pyfunction!(softmax, m)?)?;
    Ok(())
}

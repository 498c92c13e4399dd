//! Python bindings: datasets, representations, rankers, metrics and
//! protocol runs. Reports cross the boundary as parsed JSON (dicts).

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use expertbench::corpus::{self, Candidate, Document, PreprocessConfig, SyntheticConfig};
use expertbench::evalproto::{self, Protocol, ReportLabels};
use expertbench::rankers::{self, FusionRule, PropagationParams, RankerEngine, RankerSpec};
use expertbench::textrep::{self, DocMatrix, RepConfig, RepKind};
use expertbench::Error;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(err: Error) -> PyErr {
    let mut message = err.to_string();
    let mut source = std::error::Error::source(&err);
    while let Some(s) = source {
        message.push_str(&format!(": {s}"));
        source = s.source();
    }
    match err {
        Error::Io { .. } | Error::Stream(_) => PyIOError::new_err(message),
        _ => PyValueError::new_err(message),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// Candidate/document graph with expert labels.
#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    inner: Arc<corpus::Dataset>,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (candidates, documents, edges, topics=BTreeMap::new()))]
    fn new(
        candidates: Vec<(String, String)>,
        documents: Vec<(String, String)>,
        edges: Vec<(String, String)>,
        topics: BTreeMap<String, BTreeSet<String>>,
    ) -> PyResult<Self> {
        let cands = candidates
            .into_iter()
            .map(|(id, name)| Candidate { id, name })
            .collect();
        let docs = documents
            .into_iter()
            .map(|(id, text)| Document { id, text })
            .collect();
        let ds = corpus::Dataset::from_parts(cands, docs, edges, topics).map_err(to_py)?;
        Ok(Self { inner: Arc::new(ds) })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let ds = corpus::load_dataset(&path).map_err(to_py)?;
        Ok(Self { inner: Arc::new(ds) })
    }

    #[staticmethod]
    #[pyo3(signature = (
        num_topics=4, experts_per_topic=5, docs_per_expert=10, noise_candidates=20,
        vocab_per_topic=30, shared_vocab=60, words_per_doc=40, topical_fraction=0.8, seed=42
    ))]
    #[allow(clippy::too_many_arguments)]
    fn synthetic(
        num_topics: usize,
        experts_per_topic: usize,
        docs_per_expert: usize,
        noise_candidates: usize,
        vocab_per_topic: usize,
        shared_vocab: usize,
        words_per_doc: usize,
        topical_fraction: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let ds = corpus::generate_synthetic(&SyntheticConfig {
            num_topics,
            experts_per_topic,
            docs_per_expert,
            noise_candidates,
            vocab_per_topic,
            shared_vocab,
            words_per_doc,
            topical_fraction,
            rng_seed: seed,
        })
        .map_err(to_py)?;
        Ok(Self { inner: Arc::new(ds) })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        corpus::save_dataset(&self.inner, &path).map_err(to_py)
    }

    #[pyo3(signature = (max_docs=100, min_docs=1, min_text_length=50))]
    fn preprocess(&self, max_docs: usize, min_docs: usize, min_text_length: usize) -> PyResult<Self> {
        let cfg = PreprocessConfig {
            max_docs_per_author: max_docs,
            min_docs_per_author: min_docs,
            min_text_length,
        };
        let ds = corpus::preprocess(&self.inner, &cfg).map_err(to_py)?;
        Ok(Self { inner: Arc::new(ds) })
    }

    fn fingerprint(&self) -> String {
        corpus::dataset_fingerprint(&self.inner)
    }

    #[getter]
    fn num_candidates(&self) -> usize {
        self.inner.num_candidates()
    }

    #[getter]
    fn num_documents(&self) -> usize {
        self.inner.num_documents()
    }

    #[getter]
    fn candidate_ids(&self) -> Vec<String> {
        self.inner.candidates().iter().map(|c| c.id.clone()).collect()
    }

    #[getter]
    fn document_ids(&self) -> Vec<String> {
        self.inner.documents().iter().map(|d| d.id.clone()).collect()
    }

    #[getter]
    fn topics(&self) -> BTreeMap<String, BTreeSet<String>> {
        self.inner.topic_ids()
    }

    fn text(&self, document_id: &str) -> PyResult<String> {
        let d = self
            .inner
            .document_index(document_id)
            .ok_or_else(|| PyValueError::new_err(format!("unknown document `{document_id}`")))?;
        Ok(self.inner.documents()[d].text.clone())
    }

    fn authors(&self, document_id: &str) -> PyResult<Vec<String>> {
        let d = self
            .inner
            .document_index(document_id)
            .ok_or_else(|| PyValueError::new_err(format!("unknown document `{document_id}`")))?;
        Ok(self
            .inner
            .authors_of(d)
            .iter()
            .map(|&c| self.inner.candidates()[c].id.clone())
            .collect())
    }

    fn __len__(&self) -> usize {
        self.inner.num_documents()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(candidates={}, documents={}, topics={})",
            self.inner.num_candidates(),
            self.inner.num_documents(),
            self.inner.topics().len()
        )
    }
}

/// Fitted document representation (tf, tfidf or lsi).
#[pyclass(name = "Representation", frozen)]
struct PyRepresentation {
    inner: Arc<DocMatrix>,
}

#[pymethods]
impl PyRepresentation {
    #[new]
    #[pyo3(signature = (dataset, kind="tfidf", lsi_rank=300, seed=0, min_term_count=3, max_doc_fraction=0.5))]
    fn new(
        dataset: &PyDataset,
        kind: &str,
        lsi_rank: usize,
        seed: u64,
        min_term_count: u64,
        max_doc_fraction: f64,
    ) -> PyResult<Self> {
        let mut config = RepConfig {
            kind: parse::<RepKind>(kind)?,
            lsi_rank,
            seed,
            ..Default::default()
        };
        config.vocab.min_term_count = min_term_count;
        config.vocab.max_doc_fraction = max_doc_fraction;
        let texts: Vec<&str> = dataset.inner.documents().iter().map(|d| d.text.as_str()).collect();
        let m = textrep::fit_representation(&texts, &config).map_err(to_py)?;
        Ok(Self { inner: Arc::new(m) })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().as_str()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.model().dim()
    }

    #[getter]
    fn vocabulary(&self) -> Vec<String> {
        self.inner.model().vocab().terms().to_vec()
    }

    fn tokenize(&self, text: &str) -> Vec<String> {
        self.inner.model().tokenize(text)
    }

    /// Cosine similarity of `query` to every document, in document order.
    fn similarities(&self, query: &str) -> Vec<f64> {
        textrep::similarities(&textrep::vectorize_query(query, &self.inner), &self.inner)
    }
}

/// A ranker bound to a dataset and representation.
#[pyclass(name = "Ranker", frozen)]
struct PyRanker {
    dataset: Arc<corpus::Dataset>,
    engine: RankerEngine,
    representation: String,
}

#[pymethods]
impl PyRanker {
    #[new]
    #[pyo3(signature = (dataset, representation, ranker="propagation", fusion="rr", eta=0.5, tol=1e-6, max_iters=1000))]
    fn new(
        dataset: &PyDataset,
        representation: &PyRepresentation,
        ranker: &str,
        fusion: &str,
        eta: f64,
        tol: f64,
        max_iters: usize,
    ) -> PyResult<Self> {
        let spec = match ranker {
            "panoptic" => RankerSpec::Panoptic,
            "vote" => RankerSpec::Vote { fusion: parse::<FusionRule>(fusion)? },
            "propagation" => RankerSpec::Propagation(PropagationParams { eta, tol, max_iters }),
            other => return Err(PyValueError::new_err(format!("unknown ranker `{other}`"))),
        };
        let engine = RankerEngine::new(dataset.inner.clone(), representation.inner.clone(), spec)
            .map_err(to_py)?;
        Ok(Self {
            dataset: dataset.inner.clone(),
            engine,
            representation: representation.inner.kind().to_string(),
        })
    }

    #[getter]
    fn label(&self) -> String {
        self.engine.spec().label()
    }

    /// `(candidate id, score)` pairs, best first.
    #[pyo3(signature = (query, leave_out=None))]
    fn rank(&self, py: Python<'_>, query: &str, leave_out: Option<&str>) -> PyResult<Vec<(String, f64)>> {
        let leave_out = match leave_out {
            Some(id) => Some(
                self.dataset
                    .document_index(id)
                    .ok_or_else(|| PyValueError::new_err(format!("unknown document `{id}`")))?,
            ),
            None => None,
        };
        let ranking = py.detach(|| rankers::Ranker::rank_text(&self.engine, query, leave_out));
        Ok(ranking
            .entries()
            .iter()
            .map(|&(c, s)| (self.dataset.candidates()[c].id.clone(), s))
            .collect())
    }

    /// Runs a protocol and returns the report as a dict.
    #[pyo3(signature = (protocol="topic", k=10))]
    fn evaluate<'py>(&self, py: Python<'py>, protocol: &str, k: usize) -> PyResult<Bound<'py, PyAny>> {
        let protocol = parse::<Protocol>(protocol)?;
        let labels = ReportLabels {
            ranker: self.engine.spec().label(),
            representation: self.representation.clone(),
        };
        let report =
            py.detach(|| evalproto::run_protocol(protocol, &self.dataset, &self.engine, k, &labels));
        let json = serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))?;
        py.import("json")?.call_method1("loads", (json,))
    }
}

fn ranking_and_set(scores: Vec<f64>, relevant: Vec<usize>) -> PyResult<(rankers::Ranking, BTreeSet<usize>)> {
    if let Some(&bad) = relevant.iter().find(|&&r| r >= scores.len()) {
        return Err(PyValueError::new_err(format!("relevant index {bad} out of range")));
    }
    Ok((rankers::Ranking::from_scores(&scores), relevant.into_iter().collect()))
}

/// Metrics take per-item scores and the indices of relevant items.
#[pyfunction]
fn precision_at_k(scores: Vec<f64>, relevant: Vec<usize>, k: usize) -> PyResult<f64> {
    let (r, rel) = ranking_and_set(scores, relevant)?;
    Ok(evalproto::precision_at_k(&r, &rel, k))
}

#[pyfunction]
fn average_precision(scores: Vec<f64>, relevant: Vec<usize>) -> PyResult<Option<f64>> {
    let (r, rel) = ranking_and_set(scores, relevant)?;
    Ok(evalproto::average_precision(&r, &rel))
}

#[pyfunction]
fn first_relevant_rank(scores: Vec<f64>, relevant: Vec<usize>) -> PyResult<Option<usize>> {
    let (r, rel) = ranking_and_set(scores, relevant)?;
    Ok(evalproto::first_relevant_rank(&r, &rel))
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, relevant: Vec<usize>) -> PyResult<Option<f64>> {
    let (r, rel) = ranking_and_set(scores, relevant)?;
    Ok(evalproto::roc_auc(&r, &rel).map(|c| c.auc))
}

/// Merges report dicts into a markdown table.
#[pyfunction]
fn report_table(py: Python<'_>, reports: Vec<Bound<'_, PyDict>>) -> PyResult<String> {
    let json = py.import("json")?;
    let parsed = reports
        .iter()
        .map(|r| {
            let text: String = json.call_method1("dumps", (r,))?.extract()?;
            serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
        })
        .collect::<PyResult<Vec<evalproto::EvalReport>>>()?;
    Ok(evalproto::merge_reports(&parsed).map_err(to_py)?.to_markdown())
}

#[pymodule]
#[pyo3(name = "expertbench")]
fn expertbench_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyRepresentation>()?;
    m.add_class::<PyRanker>()?;
    m.add_function(wrap_pyfunction!(precision_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(first_relevant_rank, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(report_table, m)?)?;
    Ok(())
}

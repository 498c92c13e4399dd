//! Document representations: term frequency, TF-IDF and LSI.
//!
//! Fitting produces a [`DocMatrix`]: one feature row per document plus the
//! shared [`RepModel`] (stopwords, phrase table, vocabulary, idf weights and
//! LSI projection) used to vectorize queries and meta-documents the same way.

mod cache;
mod sparse;
mod svd;
mod tokenize;
mod vocab;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use cache::{load_doc_matrix, save_doc_matrix, CACHE_FORMAT_VERSION};
pub use sparse::{cosine_from_parts, dense_dot, dense_norm, SparseVec};
pub use svd::{truncated_svd, SvdConfig, TruncatedSvd};
pub use tokenize::{
    default_stopwords, learn_phrases, parse_stopwords, tokenize, PhraseTable, PHRASE_JOINER,
};
pub use vocab::{fit_vocabulary, vectorize_tf, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VocabConfig {
    pub min_term_count: u64,
    pub max_doc_fraction: f64,
    /// Number of phrase-merging passes; 2 yields bigrams then trigrams.
    pub phrase_passes: usize,
    pub phrase_min_count: u64,
    pub phrase_threshold: f64,
    pub stopwords: BTreeSet<String>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            min_term_count: 3,
            max_doc_fraction: 0.5,
            phrase_passes: 2,
            phrase_min_count: 5,
            phrase_threshold: 10.0,
            stopwords: default_stopwords(),
        }
    }
}

impl VocabConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_doc_fraction > 0.0 && self.max_doc_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "max_doc_fraction must lie in (0, 1], got {}",
                self.max_doc_fraction
            )));
        }
        if self.min_term_count < 1 {
            return Err(Error::InvalidConfig("min_term_count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepKind {
    Tf,
    TfIdf,
    Lsi,
}

impl RepKind {
    pub const ALL: [RepKind; 3] = [RepKind::Tf, RepKind::TfIdf, RepKind::Lsi];

    pub fn as_str(&self) -> &'static str {
        match self {
            RepKind::Tf => "tf",
            RepKind::TfIdf => "tfidf",
            RepKind::Lsi => "lsi",
        }
    }
}

impl fmt::Display for RepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tf" => Ok(RepKind::Tf),
            "tfidf" | "tf-idf" => Ok(RepKind::TfIdf),
            "lsi" => Ok(RepKind::Lsi),
            other => Err(Error::InvalidConfig(format!("unknown representation `{other}`"))),
        }
    }
}

/// Which weighting LSI factorizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LsiInput {
    Tf,
    TfIdf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepConfig {
    pub kind: RepKind,
    pub vocab: VocabConfig,
    pub lsi_rank: usize,
    pub lsi_input: LsiInput,
    pub lsi_oversample: usize,
    pub lsi_power_iters: usize,
    pub seed: u64,
}

impl Default for RepConfig {
    fn default() -> Self {
        Self {
            kind: RepKind::TfIdf,
            vocab: VocabConfig::default(),
            lsi_rank: 300,
            lsi_input: LsiInput::TfIdf,
            lsi_oversample: 10,
            lsi_power_iters: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsiModel {
    /// Term projection `V_k`, row-major `N x k`.
    components: Vec<f64>,
    rank: usize,
    singular_values: Vec<f64>,
}

impl LsiModel {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Row `t` of `V_k`.
    pub fn term_factors(&self, term: usize) -> &[f64] {
        &self.components[term * self.rank..(term + 1) * self.rank]
    }

    fn project(&self, x: &SparseVec) -> Vec<f64> {
        let mut out = vec![0.0; self.rank];
        for (t, v) in x.iter() {
            for (o, f) in out.iter_mut().zip(self.term_factors(t)) {
                *o += v * f;
            }
        }
        out
    }
}

/// A sparse (TF, TF-IDF) or dense (LSI) feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureVec {
    Sparse(SparseVec),
    Dense(Vec<f64>),
}

impl FeatureVec {
    pub fn norm(&self) -> f64 {
        match self {
            FeatureVec::Sparse(s) => s.norm(),
            FeatureVec::Dense(d) => dense_norm(d),
        }
    }

    pub fn dot(&self, other: &FeatureVec) -> f64 {
        match (self, other) {
            (FeatureVec::Sparse(a), FeatureVec::Sparse(b)) => a.dot(b),
            (FeatureVec::Dense(a), FeatureVec::Dense(b)) => dense_dot(a, b),
            (FeatureVec::Sparse(s), FeatureVec::Dense(d))
            | (FeatureVec::Dense(d), FeatureVec::Sparse(s)) => {
                s.iter().map(|(i, v)| v * d[i]).sum()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FeatureVec::Sparse(s) => s.nnz() == 0,
            FeatureVec::Dense(d) => d.iter().all(|&v| v == 0.0),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        match self {
            FeatureVec::Dense(d) => d.clone(),
            FeatureVec::Sparse(s) => {
                let mut out = vec![0.0; dim];
                for (i, v) in s.iter() {
                    out[i] = v;
                }
                out
            }
        }
    }
}

pub fn cosine(a: &FeatureVec, b: &FeatureVec) -> f64 {
    cosine_from_parts(a.dot(b), a.norm(), b.norm())
}

/// Everything needed to vectorize new text consistently with a fitted
/// corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepModel {
    kind: RepKind,
    config: VocabConfig,
    vocab: Vocabulary,
    idf: Option<Vec<f64>>,
    lsi: Option<LsiModel>,
}

impl RepModel {
    pub fn kind(&self) -> RepKind {
        self.kind
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_config(&self) -> &VocabConfig {
        &self.config
    }

    pub fn idf(&self) -> Option<&[f64]> {
        self.idf.as_deref()
    }

    pub fn lsi(&self) -> Option<&LsiModel> {
        self.lsi.as_ref()
    }

    /// Feature dimension: vocabulary size, or LSI rank.
    pub fn dim(&self) -> usize {
        match &self.lsi {
            Some(l) => l.rank,
            None => self.vocab.len(),
        }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        tokenize(text, &self.config, Some(self.vocab.phrases()))
    }

    pub fn count(&self, text: &str) -> SparseVec {
        vectorize_tf(&self.tokenize(text), &self.vocab)
    }

    /// Maps raw term counts into this representation's feature space. The
    /// map is linear in the counts.
    pub fn transform(&self, counts: &SparseVec) -> FeatureVec {
        let weighted = match &self.idf {
            Some(idf) => counts.weighted(idf),
            None => counts.clone(),
        };
        match &self.lsi {
            Some(lsi) => FeatureVec::Dense(lsi.project(&weighted)),
            None => FeatureVec::Sparse(weighted),
        }
    }

    pub fn vectorize(&self, text: &str) -> FeatureVec {
        self.transform(&self.count(text))
    }
}

/// Document feature rows plus the model that produced them.
#[derive(Debug, Clone)]
pub struct DocMatrix {
    model: Arc<RepModel>,
    rows: Vec<FeatureVec>,
    norms: Vec<f64>,
    /// Per-term (document, value) lists for sparse kinds.
    postings: Option<Vec<Vec<(u32, f64)>>>,
}

impl PartialEq for DocMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.model == other.model && self.rows == other.rows
    }
}

impl DocMatrix {
    fn new(model: Arc<RepModel>, rows: Vec<FeatureVec>) -> Self {
        let norms = rows.iter().map(FeatureVec::norm).collect();
        let postings = model.lsi.is_none().then(|| {
            let mut p = vec![Vec::new(); model.vocab.len()];
            for (d, row) in rows.iter().enumerate() {
                if let FeatureVec::Sparse(s) = row {
                    for (t, v) in s.iter() {
                        p[t].push((d as u32, v));
                    }
                }
            }
            p
        });
        DocMatrix {
            model,
            rows,
            norms,
            postings,
        }
    }

    /// Vectorizes `counts` with an already fitted model.
    pub fn from_counts(model: Arc<RepModel>, counts: &[SparseVec]) -> Self {
        let rows = counts.iter().map(|c| model.transform(c)).collect();
        Self::new(model, rows)
    }

    /// Vectorizes `texts` with an already fitted model (no refitting).
    pub fn from_texts<S: AsRef<str>>(model: Arc<RepModel>, texts: &[S]) -> Self {
        let counts: Vec<SparseVec> = texts.iter().map(|t| model.count(t.as_ref())).collect();
        Self::from_counts(model, &counts)
    }

    pub fn kind(&self) -> RepKind {
        self.model.kind
    }

    pub fn model(&self) -> &Arc<RepModel> {
        &self.model
    }

    pub fn rows(&self) -> &[FeatureVec] {
        &self.rows
    }

    pub fn row(&self, d: usize) -> &FeatureVec {
        &self.rows[d]
    }

    pub fn row_norm(&self, d: usize) -> f64 {
        self.norms[d]
    }

    pub fn num_docs(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn from_parts(model: Arc<RepModel>, rows: Vec<FeatureVec>) -> Self {
        Self::new(model, rows)
    }
}

/// Raw term-frequency matrix for pre-tokenized (phrase-merged) streams.
pub fn fit_tf(streams: &[Vec<String>], vocab: Vocabulary, config: &VocabConfig) -> DocMatrix {
    let counts: Vec<SparseVec> = streams.iter().map(|s| vectorize_tf(s, &vocab)).collect();
    let model = RepModel {
        kind: RepKind::Tf,
        config: config.clone(),
        vocab,
        idf: None,
        lsi: None,
    };
    DocMatrix::from_counts(Arc::new(model), &counts)
}

/// Smoothed inverse document frequency, `ln((1 + n) / (1 + df)) + 1`.
pub fn smoothed_idf(num_docs: usize, df: u64) -> f64 {
    ((1.0 + num_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Reweights a TF matrix by smoothed idf computed from its own rows.
pub fn fit_tfidf(tf: &DocMatrix) -> Result<DocMatrix> {
    if tf.kind() != RepKind::Tf {
        return Err(Error::InvalidConfig(format!(
            "fit_tfidf expects a tf matrix, got {}",
            tf.kind()
        )));
    }
    let n_terms = tf.model.vocab.len();
    let mut df = vec![0u64; n_terms];
    for row in &tf.rows {
        if let FeatureVec::Sparse(s) = row {
            for (t, _) in s.iter() {
                df[t] += 1;
            }
        }
    }
    let idf: Vec<f64> = df.iter().map(|&d| smoothed_idf(tf.num_docs(), d)).collect();
    let model = RepModel {
        kind: RepKind::TfIdf,
        idf: Some(idf),
        ..(*tf.model).clone()
    };
    let model = Arc::new(model);
    let rows = tf
        .rows
        .iter()
        .map(|row| match row {
            FeatureVec::Sparse(s) => FeatureVec::Sparse(s.weighted(model.idf.as_ref().unwrap())),
            FeatureVec::Dense(_) => unreachable!("tf rows are sparse"),
        })
        .collect();
    Ok(DocMatrix::new(model, rows))
}

/// Truncated SVD of a TF or TF-IDF matrix. Documents and queries are both
/// mapped through `x ↦ x V_k`, so document rows equal `U_k Σ_k`.
pub fn fit_lsi(input: &DocMatrix, svd: &SvdConfig) -> Result<DocMatrix> {
    if svd.rank < 1 {
        return Err(Error::InvalidConfig("LSI rank must be at least 1".into()));
    }
    if input.kind() == RepKind::Lsi {
        return Err(Error::InvalidConfig("fit_lsi expects a tf or tfidf matrix".into()));
    }
    let sparse_rows: Vec<SparseVec> = input
        .rows
        .iter()
        .map(|r| match r {
            FeatureVec::Sparse(s) => s.clone(),
            FeatureVec::Dense(_) => unreachable!("tf/tfidf rows are sparse"),
        })
        .collect();
    let n_terms = input.model.vocab.len();
    let result = truncated_svd(&sparse_rows, n_terms, svd);
    let rank = result.singular_values.len();
    let mut components = vec![0.0; n_terms * rank];
    for t in 0..n_terms {
        for j in 0..rank {
            components[t * rank + j] = result.components[(t, j)];
        }
    }
    let lsi = LsiModel {
        components,
        rank,
        singular_values: result.singular_values,
    };
    let rows = sparse_rows
        .iter()
        .map(|x| FeatureVec::Dense(lsi.project(x)))
        .collect();
    let model = RepModel {
        kind: RepKind::Lsi,
        lsi: Some(lsi),
        ..(*input.model).clone()
    };
    Ok(DocMatrix::new(Arc::new(model), rows))
}

/// Full pipeline: tokenize, learn phrases, fit vocabulary, then weight.
pub fn fit_representation<S: AsRef<str>>(texts: &[S], config: &RepConfig) -> Result<DocMatrix> {
    config.vocab.validate()?;
    let raw: Vec<Vec<String>> = texts
        .iter()
        .map(|t| tokenize(t.as_ref(), &config.vocab, None))
        .collect();
    let phrases = learn_phrases(&raw, &config.vocab);
    let merged: Vec<Vec<String>> = raw.into_iter().map(|s| phrases.apply(s)).collect();
    let vocab = fit_vocabulary(&merged, &config.vocab)?.with_phrases(phrases);
    let tf = fit_tf(&merged, vocab, &config.vocab);
    let svd = SvdConfig {
        rank: config.lsi_rank,
        oversample: config.lsi_oversample,
        power_iters: config.lsi_power_iters,
        seed: config.seed,
    };
    match (config.kind, config.lsi_input) {
        (RepKind::Tf, _) => Ok(tf),
        (RepKind::TfIdf, _) => fit_tfidf(&tf),
        (RepKind::Lsi, LsiInput::TfIdf) => fit_lsi(&fit_tfidf(&tf)?, &svd),
        (RepKind::Lsi, LsiInput::Tf) => fit_lsi(&tf, &svd),
    }
}

pub fn vectorize_query(text: &str, matrix: &DocMatrix) -> FeatureVec {
    matrix.model.vectorize(text)
}

/// Cosine similarity of `query` with every document row; zero vectors
/// score 0.
pub fn similarities(query: &FeatureVec, matrix: &DocMatrix) -> Vec<f64> {
    let qn = query.norm();
    let n = matrix.num_docs();
    if qn == 0.0 {
        return vec![0.0; n];
    }
    match (query, &matrix.postings) {
        (FeatureVec::Sparse(q), Some(postings)) => {
            let mut dots = vec![0.0; n];
            for (t, qv) in q.iter() {
                for &(d, v) in &postings[t] {
                    dots[d as usize] += qv * v;
                }
            }
            dots.iter()
                .zip(&matrix.norms)
                .map(|(&dot, &dn)| cosine_from_parts(dot, qn, dn))
                .collect()
        }
        _ => matrix
            .rows
            .iter()
            .zip(&matrix.norms)
            .map(|(row, &dn)| cosine_from_parts(query.dot(row), qn, dn))
            .collect(),
    }
}

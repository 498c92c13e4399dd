//! Candidate rankers: P@noptic meta-documents, document voting and
//! bipartite propagation.
//!
//! All three share one query/document cosine kernel. A left-out document is
//! expressed as a mask over the shared precomputed structures, so nothing is
//! mutated per query.

mod propagation;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::textrep::{cosine, similarities, DocMatrix, FeatureVec, RepModel, SparseVec};
use crate::{Error, Result};

pub use propagation::{build_transition, propagate, PropagationParams, PropagationRun, TransitionMatrix};

/// Candidates in descending score order, ties by ascending candidate id
/// (which is ascending index in a [`Dataset`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    entries: Vec<(usize, f64)>,
    /// False when propagation hit its iteration cap.
    converged: bool,
}

impl Ranking {
    /// Signed zeros are collapsed so that `-0.0` ties with `0.0`.
    pub fn from_scores(scores: &[f64]) -> Self {
        let mut entries: Vec<(usize, f64)> = scores
            .iter()
            .map(|&s| if s == 0.0 { 0.0 } else { s })
            .enumerate()
            .collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ranking {
            entries,
            converged: true,
        }
    }

    /// Wraps already ordered entries.
    pub fn from_entries(entries: Vec<(usize, f64)>) -> Self {
        Ranking {
            entries,
            converged: true,
        }
    }

    pub fn with_converged(mut self, converged: bool) -> Self {
        self.converged = converged;
        self
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn candidates(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn score_of(&self, candidate: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == candidate).map(|e| e.1)
    }
}

/// Keeps only candidates in `keep`, preserving order.
pub fn restrict_to(ranking: &Ranking, keep: &BTreeSet<usize>) -> Ranking {
    Ranking {
        entries: ranking
            .entries
            .iter()
            .filter(|e| keep.contains(&e.0))
            .copied()
            .collect(),
        converged: ranking.converged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionRule {
    #[serde(rename = "rr")]
    ReciprocalRank,
    CombSum,
    CombMnz,
}

impl FusionRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            FusionRule::ReciprocalRank => "rr",
            FusionRule::CombSum => "combsum",
            FusionRule::CombMnz => "combmnz",
        }
    }
}

impl FromStr for FusionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rr" | "reciprocalrank" | "reciprocal-rank" => Ok(FusionRule::ReciprocalRank),
            "combsum" => Ok(FusionRule::CombSum),
            "combmnz" => Ok(FusionRule::CombMnz),
            other => Err(Error::InvalidConfig(format!("unknown fusion rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum RankerSpec {
    Panoptic,
    Vote { fusion: FusionRule },
    Propagation(PropagationParams),
}

impl RankerSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            RankerSpec::Propagation(p) => p.validate(),
            _ => Ok(()),
        }
    }

    /// Short stable label, e.g. `vote-rr` or `propagation-eta0.5`.
    pub fn label(&self) -> String {
        match self {
            RankerSpec::Panoptic => "panoptic".to_string(),
            RankerSpec::Vote { fusion } => format!("vote-{}", fusion.as_str()),
            RankerSpec::Propagation(p) => format!("propagation-eta{}", p.eta),
        }
    }
}

impl fmt::Display for RankerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Anything that turns a query text into a candidate ranking, optionally
/// ignoring one document.
pub trait Ranker: Sync {
    fn rank_text(&self, query: &str, leave_out: Option<usize>) -> Ranking;
}

/// Per-candidate token streams: the candidate's documents tokenized with
/// `model` and concatenated in document order.
pub fn build_meta_documents(
    dataset: &Dataset,
    model: &RepModel,
    leave_out: Option<usize>,
) -> Vec<Vec<String>> {
    (0..dataset.num_candidates())
        .map(|c| {
            dataset
                .documents_of(c)
                .iter()
                .filter(|&&d| Some(d) != leave_out)
                .flat_map(|&d| model.tokenize(&dataset.documents()[d].text))
                .collect()
        })
        .collect()
}

/// Candidate scores from document similarities with the voting model.
///
/// Documents are ranked by descending similarity (ties by ascending index),
/// the left-out document excluded, then fused per candidate.
pub fn vote_scores(
    dataset: &Dataset,
    doc_sims: &[f64],
    fusion: FusionRule,
    leave_out: Option<usize>,
) -> Vec<f64> {
    let rank_of = match fusion {
        FusionRule::ReciprocalRank => {
            let mut order: Vec<usize> = (0..doc_sims.len()).filter(|&d| Some(d) != leave_out).collect();
            order.sort_by(|&a, &b| doc_sims[b].total_cmp(&doc_sims[a]).then(a.cmp(&b)));
            let mut rank = vec![0usize; doc_sims.len()];
            for (r, &d) in order.iter().enumerate() {
                rank[d] = r + 1;
            }
            Some(rank)
        }
        _ => None,
    };

    (0..dataset.num_candidates())
        .map(|c| {
            let docs = dataset
                .documents_of(c)
                .iter()
                .copied()
                .filter(|&d| Some(d) != leave_out);
            match fusion {
                FusionRule::ReciprocalRank => {
                    let rank = rank_of.as_ref().unwrap();
                    docs.map(|d| 1.0 / rank[d] as f64).sum()
                }
                FusionRule::CombSum => docs.map(|d| doc_sims[d]).sum(),
                FusionRule::CombMnz => {
                    let (sum, hits) = docs.fold((0.0, 0usize), |(s, n), d| {
                        (s + doc_sims[d], n + usize::from(doc_sims[d] > 0.0))
                    });
                    sum * hits as f64
                }
            }
        })
        .collect()
}

/// A ranker bound to one dataset and fitted representation.
///
/// The document matrix rows must be aligned with the dataset's documents.
pub struct RankerEngine {
    dataset: Arc<Dataset>,
    docs: Arc<DocMatrix>,
    spec: RankerSpec,
    meta: Option<MetaIndex>,
}

struct MetaIndex {
    doc_counts: Vec<SparseVec>,
    counts: Vec<SparseVec>,
    vectors: Vec<FeatureVec>,
    norms: Vec<f64>,
}

impl RankerEngine {
    pub fn new(dataset: Arc<Dataset>, docs: Arc<DocMatrix>, spec: RankerSpec) -> Result<Self> {
        spec.validate()?;
        if docs.num_docs() != dataset.num_documents() {
            return Err(Error::InvalidConfig(format!(
                "representation has {} rows but dataset has {} documents",
                docs.num_docs(),
                dataset.num_documents()
            )));
        }
        let meta = matches!(spec, RankerSpec::Panoptic).then(|| {
            let model = docs.model();
            let doc_counts: Vec<SparseVec> = dataset
                .documents()
                .iter()
                .map(|d| model.count(&d.text))
                .collect();
            let counts: Vec<SparseVec> = (0..dataset.num_candidates())
                .map(|c| {
                    let pairs = dataset
                        .documents_of(c)
                        .iter()
                        .flat_map(|&d| doc_counts[d].iter().map(|(t, v)| (t as u32, v)))
                        .collect();
                    SparseVec::from_pairs(pairs)
                })
                .collect();
            let vectors: Vec<FeatureVec> = counts.iter().map(|c| model.transform(c)).collect();
            let norms = vectors.iter().map(FeatureVec::norm).collect();
            MetaIndex {
                doc_counts,
                counts,
                vectors,
                norms,
            }
        });
        Ok(RankerEngine {
            dataset,
            docs,
            spec,
            meta,
        })
    }

    pub fn spec(&self) -> RankerSpec {
        self.spec
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    pub fn doc_matrix(&self) -> &Arc<DocMatrix> {
        &self.docs
    }

    pub fn rank(&self, query: &FeatureVec, leave_out: Option<usize>) -> Ranking {
        match self.spec {
            RankerSpec::Panoptic => self.rank_panoptic(query, leave_out),
            RankerSpec::Vote { fusion } => {
                let sims = similarities(query, &self.docs);
                Ranking::from_scores(&vote_scores(&self.dataset, &sims, fusion, leave_out))
            }
            RankerSpec::Propagation(params) => {
                let sims = similarities(query, &self.docs);
                let run = propagate(&self.dataset, &sims, &params, leave_out);
                Ranking::from_scores(&run.candidate_scores).with_converged(run.converged)
            }
        }
    }

    fn rank_panoptic(&self, query: &FeatureVec, leave_out: Option<usize>) -> Ranking {
        let meta = self.meta.as_ref().expect("panoptic engine has meta index");
        let qn = query.norm();
        let mut scores: Vec<f64> = meta
            .vectors
            .iter()
            .zip(&meta.norms)
            .map(|(v, &n)| crate::textrep::cosine_from_parts(query.dot(v), qn, n))
            .collect();
        if let Some(d) = leave_out {
            let model = self.docs.model();
            for &c in self.dataset.authors_of(d) {
                let reduced = meta.counts[c].add_scaled(&meta.doc_counts[d], -1.0);
                scores[c] = cosine(query, &model.transform(&reduced));
            }
        }
        Ranking::from_scores(&scores)
    }
}

impl Ranker for RankerEngine {
    fn rank_text(&self, query: &str, leave_out: Option<usize>) -> Ranking {
        self.rank(&self.docs.model().vectorize(query), leave_out)
    }
}

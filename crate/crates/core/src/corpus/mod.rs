//! Bipartite candidate/document datasets.
//!
//! A [`Dataset`] holds candidates, documents, the authorship edges between
//! them and the topic → expert labels. Candidates and documents are kept
//! sorted by id, so positional indices double as the ascending-id order used
//! for tie-breaking everywhere downstream.

mod aminer;
mod filter;
mod io;
mod synth;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use aminer::{build_dataset, parse_aminer, BuildReport, ParseOutcome, RawRecord};
pub use filter::{preprocess, PreprocessConfig};
pub use io::{dataset_fingerprint, load_dataset, load_expert_list, save_dataset};
pub use synth::{generate_synthetic, SyntheticConfig};

pub const DOCUMENTS_FILE: &str = "documents.jsonl";
pub const EDGES_FILE: &str = "edges.jsonl";
pub const LABELS_FILE: &str = "labels.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

/// Immutable candidate/document graph with expert labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    candidates: Vec<Candidate>,
    documents: Vec<Document>,
    /// (document index, candidate index), sorted and unique.
    edges: Vec<(usize, usize)>,
    doc_authors: Vec<Vec<usize>>,
    cand_docs: Vec<Vec<usize>>,
    topics: BTreeMap<String, BTreeSet<usize>>,
    experts_all: BTreeSet<usize>,
}

impl Dataset {
    /// Builds a dataset from id-keyed parts, validating every invariant.
    ///
    /// Edges are `(document id, candidate id)` pairs; duplicates collapse.
    pub fn from_parts(
        mut candidates: Vec<Candidate>,
        mut documents: Vec<Document>,
        edges: impl IntoIterator<Item = (String, String)>,
        topics: BTreeMap<String, BTreeSet<String>>,
    ) -> Result<Self> {
        candidates.sort_by(|a, b| a.id.cmp(&b.id));
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = candidates.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::InvalidDataset(format!(
                "duplicate candidate id `{}`",
                w[0].id
            )));
        }
        if let Some(w) = documents.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::InvalidDataset(format!(
                "duplicate document id `{}`",
                w[0].id
            )));
        }

        let cand_index: HashMap<&str, usize> = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.as_str(), i))
            .collect();
        let doc_index: HashMap<&str, usize> = documents
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.as_str(), i))
            .collect();

        let mut resolved = Vec::new();
        for (doc, cand) in edges {
            let d = *doc_index.get(doc.as_str()).ok_or_else(|| {
                Error::InvalidDataset(format!("edge references unknown document `{doc}`"))
            })?;
            let c = *cand_index.get(cand.as_str()).ok_or_else(|| {
                Error::InvalidDataset(format!("edge references unknown candidate `{cand}`"))
            })?;
            resolved.push((d, c));
        }

        let mut topic_idx = BTreeMap::new();
        for (topic, experts) in topics {
            let mut set = BTreeSet::new();
            for e in experts {
                let c = *cand_index.get(e.as_str()).ok_or_else(|| {
                    Error::InvalidDataset(format!(
                        "expert `{e}` of topic `{topic}` is not a candidate"
                    ))
                })?;
                set.insert(c);
            }
            topic_idx.insert(topic, set);
        }

        Ok(Self::from_indexed(candidates, documents, resolved, topic_idx))
    }

    /// Index-level constructor; callers guarantee indices are in range and
    /// that `candidates`/`documents` are sorted with unique ids.
    pub(crate) fn from_indexed(
        candidates: Vec<Candidate>,
        documents: Vec<Document>,
        mut edges: Vec<(usize, usize)>,
        topics: BTreeMap<String, BTreeSet<usize>>,
    ) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut doc_authors = vec![Vec::new(); documents.len()];
        let mut cand_docs = vec![Vec::new(); candidates.len()];
        for &(d, c) in &edges {
            doc_authors[d].push(c);
            cand_docs[c].push(d);
        }
        for docs in &mut cand_docs {
            docs.sort_unstable();
        }
        let experts_all = topics.values().flatten().copied().collect();
        Dataset {
            candidates,
            documents,
            edges,
            doc_authors,
            cand_docs,
            topics,
            experts_all,
        }
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn num_documents(&self) -> usize {
        self.documents.len()
    }

    /// Sorted `(document index, candidate index)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Candidates linked to document `doc`, ascending.
    pub fn authors_of(&self, doc: usize) -> &[usize] {
        &self.doc_authors[doc]
    }

    /// Documents linked to candidate `cand`, ascending.
    pub fn documents_of(&self, cand: usize) -> &[usize] {
        &self.cand_docs[cand]
    }

    pub fn topics(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.topics
    }

    /// Union of all topic expert sets.
    pub fn experts_all(&self) -> &BTreeSet<usize> {
        &self.experts_all
    }

    pub fn candidate_index(&self, id: &str) -> Option<usize> {
        self.candidates
            .binary_search_by(|c| c.id.as_str().cmp(id))
            .ok()
    }

    pub fn document_index(&self, id: &str) -> Option<usize> {
        self.documents
            .binary_search_by(|d| d.id.as_str().cmp(id))
            .ok()
    }

    /// Copy of the dataset with one document's text replaced.
    pub fn with_document_text(&self, doc: usize, text: impl Into<String>) -> Dataset {
        let mut out = self.clone();
        out.documents[doc].text = text.into();
        out
    }

    /// Topic map keyed by candidate ids instead of indices.
    pub fn topic_ids(&self) -> BTreeMap<String, BTreeSet<String>> {
        self.topics
            .iter()
            .map(|(t, set)| {
                (
                    t.clone(),
                    set.iter().map(|&c| self.candidates[c].id.clone()).collect(),
                )
            })
            .collect()
    }
}

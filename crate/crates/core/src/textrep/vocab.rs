use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{PhraseTable, SparseVec, VocabConfig};
use crate::{Error, Result};

/// Retained terms in lexicographic order with their statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u64>,
    corpus_freq: Vec<u64>,
    num_docs: usize,
    phrases: PhraseTable,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub(crate) fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self) -> &[u64] {
        &self.doc_freq
    }

    pub fn corpus_freq(&self) -> &[u64] {
        &self.corpus_freq
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn phrases(&self) -> &PhraseTable {
        &self.phrases
    }

    pub fn with_phrases(mut self, phrases: PhraseTable) -> Self {
        self.phrases = phrases;
        self
    }
}

/// Keeps terms seen at least `min_term_count` times overall and in at most
/// `max_doc_fraction` of the documents.
pub fn fit_vocabulary(streams: &[Vec<String>], config: &VocabConfig) -> Result<Vocabulary> {
    config.validate()?;
    let mut stats: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for stream in streams {
        let mut local: HashMap<&str, u64> = HashMap::new();
        for t in stream {
            *local.entry(t.as_str()).or_default() += 1;
        }
        for (t, n) in local {
            let e = stats.entry(t).or_default();
            e.0 += 1;
            e.1 += n;
        }
    }
    let num_docs = streams.len();
    let mut vocab = Vocabulary {
        terms: Vec::new(),
        doc_freq: Vec::new(),
        corpus_freq: Vec::new(),
        num_docs,
        phrases: PhraseTable::default(),
        index: HashMap::new(),
    };
    for (term, (df, cf)) in stats {
        let fraction = df as f64 / num_docs as f64;
        if cf >= config.min_term_count && fraction <= config.max_doc_fraction {
            vocab.terms.push(term.to_string());
            vocab.doc_freq.push(df);
            vocab.corpus_freq.push(cf);
        }
    }
    if vocab.terms.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    vocab.rebuild_index();
    Ok(vocab)
}

/// Raw term counts; out-of-vocabulary tokens are ignored.
pub fn vectorize_tf<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> SparseVec {
    SparseVec::from_pairs(
        tokens
            .iter()
            .filter_map(|t| vocab.index_of(t.as_ref()))
            .map(|i| (i as u32, 1.0))
            .collect(),
    )
}

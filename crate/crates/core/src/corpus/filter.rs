use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Result};

/// Degree and text-length bounds applied by [`preprocess`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Exclusive upper bound on a candidate's document count.
    pub max_docs_per_author: usize,
    /// Inclusive lower bound on a candidate's document count.
    pub min_docs_per_author: usize,
    /// Exclusive lower bound on document text length, in characters.
    pub min_text_length: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            max_docs_per_author: 100,
            min_docs_per_author: 1,
            min_text_length: 50,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_docs_per_author <= self.min_docs_per_author {
            return Err(Error::InvalidConfig(format!(
                "max_docs_per_author ({}) must exceed min_docs_per_author ({})",
                self.max_docs_per_author, self.min_docs_per_author
            )));
        }
        Ok(())
    }
}

/// Drops short documents, then candidates whose remaining degree falls
/// outside `[min, max)`, then prunes orphaned edges and expert sets.
pub fn preprocess(dataset: &Dataset, config: &PreprocessConfig) -> Result<Dataset> {
    config.validate()?;

    let keep_doc: Vec<bool> = dataset
        .documents()
        .iter()
        .map(|d| d.text.chars().count() > config.min_text_length)
        .collect();

    let mut degree = vec![0usize; dataset.num_candidates()];
    for &(d, c) in dataset.edges() {
        if keep_doc[d] {
            degree[c] += 1;
        }
    }
    let keep_cand: Vec<bool> = degree
        .iter()
        .map(|&deg| deg >= config.min_docs_per_author && deg < config.max_docs_per_author)
        .collect();

    let doc_map = remap(&keep_doc);
    let cand_map = remap(&keep_cand);

    let documents = dataset
        .documents()
        .iter()
        .zip(&keep_doc)
        .filter(|(_, &k)| k)
        .map(|(d, _)| d.clone())
        .collect();
    let candidates = dataset
        .candidates()
        .iter()
        .zip(&keep_cand)
        .filter(|(_, &k)| k)
        .map(|(c, _)| c.clone())
        .collect();
    let edges = dataset
        .edges()
        .iter()
        .filter_map(|&(d, c)| Some((doc_map[d]?, cand_map[c]?)))
        .collect();
    let topics = dataset
        .topics()
        .iter()
        .map(|(t, set)| (t.clone(), set.iter().filter_map(|&c| cand_map[c]).collect()))
        .collect::<BTreeMap<_, _>>();

    Ok(Dataset::from_indexed(candidates, documents, edges, topics))
}

fn remap(keep: &[bool]) -> Vec<Option<usize>> {
    let mut next = 0;
    keep.iter()
        .map(|&k| {
            k.then(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

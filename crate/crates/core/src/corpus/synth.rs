use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Candidate, Dataset, Document};
use crate::{Error, Result};

/// Planted-structure corpus generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub num_topics: usize,
    pub experts_per_topic: usize,
    pub docs_per_expert: usize,
    /// Non-expert candidates; each authors `docs_per_expert` documents.
    pub noise_candidates: usize,
    pub vocab_per_topic: usize,
    pub shared_vocab: usize,
    pub words_per_doc: usize,
    /// Probability that an expert document word comes from its topic's
    /// vocabulary rather than the shared pool. Ignored when the pool is empty.
    pub topical_fraction: f64,
    pub rng_seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_topics: 4,
            experts_per_topic: 5,
            docs_per_expert: 10,
            noise_candidates: 20,
            vocab_per_topic: 30,
            shared_vocab: 60,
            words_per_doc: 40,
            topical_fraction: 0.8,
            rng_seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("num_topics", self.num_topics),
            ("experts_per_topic", self.experts_per_topic),
            ("docs_per_expert", self.docs_per_expert),
            ("vocab_per_topic", self.vocab_per_topic),
            ("words_per_doc", self.words_per_doc),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if !(0.0..=1.0).contains(&self.topical_fraction) {
            return Err(Error::InvalidConfig(format!(
                "topical_fraction must lie in [0, 1], got {}",
                self.topical_fraction
            )));
        }
        Ok(())
    }
}

fn topic_word(topic: usize, i: usize) -> String {
    format!("t{topic}w{i}")
}

fn shared_word(i: usize) -> String {
    format!("sh{i}")
}

/// Generates a seeded corpus where every topic's experts write about a
/// private vocabulary. Topic names are the first two words of that
/// vocabulary so topic queries hit it. Noise candidates draw from the shared
/// pool, or from every topic vocabulary when the pool is empty.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

    let topic_vocab: Vec<Vec<String>> = (0..config.num_topics)
        .map(|t| (0..config.vocab_per_topic).map(|i| topic_word(t, i)).collect())
        .collect();
    let shared: Vec<String> = (0..config.shared_vocab).map(shared_word).collect();
    let all_topical: Vec<&String> = topic_vocab.iter().flatten().collect();

    let mut candidates = Vec::new();
    let mut documents = Vec::new();
    let mut edges = Vec::new();
    let mut topics = BTreeMap::new();
    let mut next_doc = 0usize;

    let mut new_doc = |words: Vec<&str>, author: &str, documents: &mut Vec<Document>, edges: &mut Vec<(String, String)>| {
        let id = format!("d{next_doc:07}");
        next_doc += 1;
        documents.push(Document {
            id: id.clone(),
            text: words.join(" "),
        });
        edges.push((id, author.to_string()));
    };

    for (t, vocab) in topic_vocab.iter().enumerate() {
        let name_len = vocab.len().min(2);
        let topic_name = vocab[..name_len].join(" ");
        let mut experts = BTreeSet::new();
        for e in 0..config.experts_per_topic {
            let id = format!("e{t:03}-{e:04}");
            candidates.push(Candidate {
                id: id.clone(),
                name: format!("Expert {t}.{e}"),
            });
            experts.insert(id.clone());
            for _ in 0..config.docs_per_expert {
                let words = (0..config.words_per_doc)
                    .map(|_| {
                        if shared.is_empty() || rng.random::<f64>() < config.topical_fraction {
                            vocab[rng.random_range(0..vocab.len())].as_str()
                        } else {
                            shared[rng.random_range(0..shared.len())].as_str()
                        }
                    })
                    .collect();
                new_doc(words, &id, &mut documents, &mut edges);
            }
        }
        topics.insert(topic_name, experts);
    }

    for n in 0..config.noise_candidates {
        let id = format!("n{n:05}");
        candidates.push(Candidate {
            id: id.clone(),
            name: format!("Noise {n}"),
        });
        for _ in 0..config.docs_per_expert {
            let words = (0..config.words_per_doc)
                .map(|_| {
                    if shared.is_empty() {
                        all_topical[rng.random_range(0..all_topical.len())].as_str()
                    } else {
                        shared[rng.random_range(0..shared.len())].as_str()
                    }
                })
                .collect();
            new_doc(words, &id, &mut documents, &mut edges);
        }
    }

    Dataset::from_parts(candidates, documents, edges, topics)
}

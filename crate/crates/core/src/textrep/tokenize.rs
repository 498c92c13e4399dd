use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::VocabConfig;

const BUILTIN_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// The shipped English stopword list.
pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopwords(BUILTIN_STOPWORDS)
}

/// One term per line; blank lines and `#` comments are ignored.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Lowercases, splits on runs of non-alphanumeric characters, drops
/// stopwords and, when a phrase table is given, merges learned phrases.
pub fn tokenize(text: &str, config: &VocabConfig, phrases: Option<&PhraseTable>) -> Vec<String> {
    let tokens: Vec<String> = text
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !config.stopwords.contains(*t))
        .map(String::from)
        .collect();
    match phrases {
        Some(table) => table.apply(tokens),
        None => tokens,
    }
}

pub const PHRASE_JOINER: &str = "_";

/// Learned collocations, one set of merged pairs per pass. Pass `i` operates
/// on the output of pass `i - 1`, so two passes can produce 3-grams.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseTable {
    passes: Vec<BTreeSet<(String, String)>>,
}

impl PhraseTable {
    pub fn from_passes(passes: Vec<BTreeSet<(String, String)>>) -> Self {
        Self { passes }
    }

    pub fn passes(&self) -> &[BTreeSet<(String, String)>] {
        &self.passes
    }

    pub fn is_empty(&self) -> bool {
        self.passes.iter().all(BTreeSet::is_empty)
    }

    pub fn apply(&self, mut tokens: Vec<String>) -> Vec<String> {
        for pass in &self.passes {
            tokens = merge_pass(tokens, pass);
        }
        tokens
    }
}

/// Greedy left-to-right merge of adjacent pairs found in `pairs`.
fn merge_pass(tokens: Vec<String>, pairs: &BTreeSet<(String, String)>) -> Vec<String> {
    if pairs.is_empty() || tokens.len() < 2 {
        return tokens;
    }
    let mut out = Vec::with_capacity(tokens.len());
    let mut iter = tokens.into_iter().peekable();
    while let Some(tok) = iter.next() {
        let merge = match iter.peek() {
            Some(next) => pairs.contains(&(tok.clone(), next.clone())),
            None => false,
        };
        if merge {
            let next = iter.next().unwrap();
            out.push(format!("{tok}{PHRASE_JOINER}{next}"));
        } else {
            out.push(tok);
        }
    }
    out
}

/// Learns `config.phrase_passes` passes of bigram merges. A pair `(a, b)`
/// is merged when `count(ab) >= phrase_min_count` and
/// `(count(ab) - phrase_min_count) * T / (count(a) * count(b))` exceeds
/// `phrase_threshold`, `T` being the total token count of the pass.
pub fn learn_phrases(streams: &[Vec<String>], config: &VocabConfig) -> PhraseTable {
    let mut passes = Vec::new();
    let mut current: Vec<Vec<String>> = streams.to_vec();
    for _ in 0..config.phrase_passes {
        let mut unigrams: HashMap<&str, u64> = HashMap::new();
        let mut bigrams: HashMap<(&str, &str), u64> = HashMap::new();
        let mut total = 0u64;
        for stream in &current {
            total += stream.len() as u64;
            for t in stream {
                *unigrams.entry(t.as_str()).or_default() += 1;
            }
            for w in stream.windows(2) {
                *bigrams.entry((w[0].as_str(), w[1].as_str())).or_default() += 1;
            }
        }
        let min_count = config.phrase_min_count as f64;
        let selected: BTreeSet<(String, String)> = bigrams
            .iter()
            .filter(|(_, &n)| n >= config.phrase_min_count)
            .filter(|((a, b), &n)| {
                let score = (n as f64 - min_count) * total as f64
                    / (unigrams[a] as f64 * unigrams[b] as f64);
                score > config.phrase_threshold
            })
            .map(|((a, b), _)| (a.to_string(), b.to_string()))
            .collect();
        if selected.is_empty() {
            break;
        }
        current = current
            .into_iter()
            .map(|s| merge_pass(s, &selected))
            .collect();
        passes.push(selected);
    }
    PhraseTable { passes }
}

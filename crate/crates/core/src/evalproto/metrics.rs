//! Rank-based metrics over a single ranking.
//!
//! Each metric depends only on the order of the ranking (and, for ROC AUC,
//! on which adjacent entries share a score).

use std::collections::BTreeSet;

use crate::rankers::Ranking;

/// Fraction of the top `k` that is relevant; the denominator stays `k`
/// even when the ranking is shorter.
pub fn precision_at_k(ranking: &Ranking, relevant: &BTreeSet<usize>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = ranking
        .candidates()
        .take(k)
        .filter(|c| relevant.contains(c))
        .count();
    hits as f64 / k as f64
}

/// Mean precision at the rank of each relevant item; relevant items missing
/// from the ranking contribute 0. `None` for an empty relevant set.
pub fn average_precision(ranking: &Ranking, relevant: &BTreeSet<usize>) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, c) in ranking.candidates().enumerate() {
        if relevant.contains(&c) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / relevant.len() as f64)
}

/// 1-based position of the first relevant candidate.
pub fn first_relevant_rank(ranking: &Ranking, relevant: &BTreeSet<usize>) -> Option<usize> {
    ranking
        .candidates()
        .position(|c| relevant.contains(&c))
        .map(|p| p + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub auc: f64,
    /// (false positive rate, true positive rate), from (0, 0) to (1, 1).
    pub points: Vec<(f64, f64)>,
}

/// Probability that a random relevant entry outscores a random non-relevant
/// one, ties counting 1/2 (Mann-Whitney U with midranks). `None` when either
/// class is empty.
pub fn roc_auc(ranking: &Ranking, relevant: &BTreeSet<usize>) -> Option<RocCurve> {
    let entries = ranking.entries();
    let n_pos = entries.iter().filter(|e| relevant.contains(&e.0)).count();
    let n_neg = entries.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }

    // Walk from the top in groups of equal score. Within a group, every
    // (pos, neg) pair is a tie worth 1/2; negatives below count fully.
    let mut concordant = 0.0;
    let mut pos_above = 0usize;
    let mut neg_seen = 0usize;
    let mut points = vec![(0.0, 0.0)];
    let mut i = 0;
    while i < entries.len() {
        let score = entries[i].1;
        let mut j = i;
        let (mut gp, mut gn) = (0usize, 0usize);
        while j < entries.len() && entries[j].1 == score {
            if relevant.contains(&entries[j].0) {
                gp += 1;
            } else {
                gn += 1;
            }
            j += 1;
        }
        concordant += (pos_above * gn) as f64 + 0.5 * (gp * gn) as f64;
        pos_above += gp;
        neg_seen += gn;
        points.push((neg_seen as f64 / n_neg as f64, pos_above as f64 / n_pos as f64));
        i = j;
    }
    Some(RocCurve {
        auc: concordant / (n_pos * n_neg) as f64,
        points,
    })
}

/// Arithmetic mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

//! Two-step random walk with restart over the candidate/document graph.
//!
//! Node order is all candidates followed by all documents. The transition
//! matrix is the column-wise L1-normalized adjacency matrix; a left-out
//! document loses its node and its edges, which lowers its authors' degrees.

use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationParams {
    /// Restart (jumping) factor in [0, 1].
    pub eta: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self {
            eta: 0.5,
            tol: 1e-6,
            max_iters: 1000,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidConfig(format!(
                "eta must lie in [0, 1], got {}",
                self.eta
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Explicit column-stochastic matrix, stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    columns: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Nonzero `(row, value)` entries of column `v`, ascending row.
    pub fn column(&self, v: usize) -> &[(usize, f64)] {
        &self.columns[v]
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| c.iter().map(|e| e.1).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.size]; self.size];
        for (v, col) in self.columns.iter().enumerate() {
            for &(u, a) in col {
                m[u][v] = a;
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size];
        for (v, col) in self.columns.iter().enumerate() {
            for &(u, a) in col {
                y[u] += a * x[v];
            }
        }
        y
    }
}

/// Materializes `A` with `A[u, v] = 1 / deg(v)` for every edge `(u, v)`.
pub fn build_transition(dataset: &Dataset, leave_out: Option<usize>) -> TransitionMatrix {
    let nc = dataset.num_candidates();
    let size = nc + dataset.num_documents();
    let mut columns = vec![Vec::new(); size];
    for (c, col) in columns.iter_mut().enumerate().take(nc) {
        let deg = candidate_degree(dataset, c, leave_out);
        for &d in dataset.documents_of(c) {
            if Some(d) != leave_out {
                col.push((nc + d, 1.0 / deg as f64));
            }
        }
    }
    for d in 0..dataset.num_documents() {
        if Some(d) == leave_out {
            continue;
        }
        let authors = dataset.authors_of(d);
        columns[nc + d] = authors
            .iter()
            .map(|&c| (c, 1.0 / authors.len() as f64))
            .collect();
    }
    TransitionMatrix { size, columns }
}

fn candidate_degree(dataset: &Dataset, c: usize, leave_out: Option<usize>) -> usize {
    let docs = dataset.documents_of(c);
    match leave_out {
        Some(d) if docs.binary_search(&d).is_ok() => docs.len() - 1,
        _ => docs.len(),
    }
}

/// `y = A x` without materializing `A`.
fn apply(dataset: &Dataset, leave_out: Option<usize>, cand_deg: &[usize], x: &[f64]) -> Vec<f64> {
    let nc = dataset.num_candidates();
    let mut y = vec![0.0; x.len()];
    for (c, yc) in y.iter_mut().enumerate().take(nc) {
        *yc = dataset
            .documents_of(c)
            .iter()
            .filter(|&&d| Some(d) != leave_out)
            .map(|&d| x[nc + d] / dataset.authors_of(d).len() as f64)
            .sum();
    }
    for d in 0..dataset.num_documents() {
        if Some(d) == leave_out {
            continue;
        }
        let mut acc = 0.0;
        for &c in dataset.authors_of(d) {
            acc += x[c] / cand_deg[c] as f64;
        }
        y[nc + d] = acc;
    }
    y
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationRun {
    pub candidate_scores: Vec<f64>,
    /// Final iterate over all nodes.
    pub state: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates `S <- (1 - eta) A (A S) + eta R` from `S = R`, where `R` holds
/// zeros for candidates and `doc_sims` for documents, until the L2 step is
/// below `tol`. Candidate scores are the candidate part of `A S`.
pub fn propagate(
    dataset: &Dataset,
    doc_sims: &[f64],
    params: &PropagationParams,
    leave_out: Option<usize>,
) -> PropagationRun {
    let nc = dataset.num_candidates();
    let cand_deg: Vec<usize> = (0..nc)
        .map(|c| candidate_degree(dataset, c, leave_out))
        .collect();
    let mut restart = vec![0.0; nc + dataset.num_documents()];
    for (d, &s) in doc_sims.iter().enumerate() {
        if Some(d) != leave_out {
            restart[nc + d] = s;
        }
    }

    let mut state = restart.clone();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iters {
        let half = apply(dataset, leave_out, &cand_deg, &state);
        let full = apply(dataset, leave_out, &cand_deg, &half);
        let next: Vec<f64> = full
            .iter()
            .zip(&restart)
            .map(|(&a, &r)| (1.0 - params.eta) * a + params.eta * r)
            .collect();
        let step = next
            .iter()
            .zip(&state)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        state = next;
        iterations += 1;
        if step < params.tol {
            converged = true;
            break;
        }
    }
    let mut last = apply(dataset, leave_out, &cand_deg, &state);
    last.truncate(nc);
    PropagationRun {
        candidate_scores: last,
        state,
        iterations,
        converged,
    }
}

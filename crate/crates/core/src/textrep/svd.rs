//! Truncated SVD of a sparse document-term matrix.
//!
//! Small problems (where the sketch would cover the whole spectrum anyway)
//! go through a dense exact SVD. Larger ones use a seeded randomized range
//! finder with power iterations, followed by an exact SVD of the projected
//! `l x N` matrix.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::SparseVec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdConfig {
    pub rank: usize,
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for SvdConfig {
    fn default() -> Self {
        Self {
            rank: 300,
            oversample: 10,
            power_iters: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// Descending, all strictly above the numerical-rank tolerance.
    pub singular_values: Vec<f64>,
    /// Right singular vectors, `ncols x k`.
    pub components: DMatrix<f64>,
}

pub fn truncated_svd(rows: &[SparseVec], ncols: usize, config: &SvdConfig) -> TruncatedSvd {
    let nrows = rows.len();
    let min_dim = nrows.min(ncols);
    if min_dim == 0 || config.rank == 0 {
        return TruncatedSvd {
            singular_values: Vec::new(),
            components: DMatrix::zeros(ncols, 0),
        };
    }
    let sketch = config.rank + config.oversample;
    let (sv, vt) = if sketch >= min_dim {
        exact(rows, ncols)
    } else {
        randomized(rows, ncols, sketch, config)
    };

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let s_max = order.first().map_or(0.0, |&i| sv[i]);
    let tol = s_max * nrows.max(ncols) as f64 * f64::EPSILON;
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| sv[i] > tol)
        .take(config.rank)
        .collect();

    let mut components = DMatrix::zeros(ncols, kept.len());
    for (j, &i) in kept.iter().enumerate() {
        for t in 0..ncols {
            components[(t, j)] = vt[(i, t)];
        }
    }
    TruncatedSvd {
        singular_values: kept.iter().map(|&i| sv[i]).collect(),
        components,
    }
}

fn to_dense(rows: &[SparseVec], ncols: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(rows.len(), ncols);
    for (d, row) in rows.iter().enumerate() {
        for (t, v) in row.iter() {
            x[(d, t)] = v;
        }
    }
    x
}

/// Returns (singular values, Vᵀ) unsorted.
fn exact(rows: &[SparseVec], ncols: usize) -> (Vec<f64>, DMatrix<f64>) {
    let svd = to_dense(rows, ncols).svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    (svd.singular_values.iter().copied().collect(), vt)
}

/// `X * M` for sparse `X` (rows) and dense `M` (`ncols x l`).
fn mul_dense(rows: &[SparseVec], m: &DMatrix<f64>) -> DMatrix<f64> {
    let l = m.ncols();
    let mut out = DMatrix::zeros(rows.len(), l);
    for (d, row) in rows.iter().enumerate() {
        for (t, v) in row.iter() {
            for j in 0..l {
                out[(d, j)] += v * m[(t, j)];
            }
        }
    }
    out
}

/// `Xᵀ * M` for sparse `X` (rows) and dense `M` (`nrows x l`).
fn mul_transpose_dense(rows: &[SparseVec], ncols: usize, m: &DMatrix<f64>) -> DMatrix<f64> {
    let l = m.ncols();
    let mut out = DMatrix::zeros(ncols, l);
    for (d, row) in rows.iter().enumerate() {
        for (t, v) in row.iter() {
            for j in 0..l {
                out[(t, j)] += v * m[(d, j)];
            }
        }
    }
    out
}

fn randomized(
    rows: &[SparseVec],
    ncols: usize,
    sketch: usize,
    config: &SvdConfig,
) -> (Vec<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let omega = DMatrix::from_fn(ncols, sketch, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = mul_dense(rows, &omega).qr().q();
    for _ in 0..config.power_iters {
        let z = mul_transpose_dense(rows, ncols, &q).qr().q();
        q = mul_dense(rows, &z).qr().q();
    }
    // B = Qᵀ X, computed as (Xᵀ Q)ᵀ.
    let b = mul_transpose_dense(rows, ncols, &q).transpose();
    let svd = b.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    (svd.singular_values.iter().copied().collect(), vt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_rows(nrows: usize, ncols: usize, seed: u64) -> Vec<SparseVec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..nrows)
            .map(|_| {
                SparseVec::from_pairs(
                    (0..ncols)
                        .filter(|_| rng.random::<f64>() < 0.3)
                        .collect::<Vec<_>>()
                        .into_iter()
                        .map(|t| (t as u32, rng.random_range(1..5) as f64))
                        .collect(),
                )
            })
            .collect()
    }

    #[test]
    fn exact_matches_dense_full_rank_reconstruction() {
        let rows = random_rows(12, 15, 3);
        let svd = truncated_svd(&rows, 15, &SvdConfig { rank: 50, ..Default::default() });
        let x = to_dense(&rows, 15);
        let v = &svd.components;
        let recon = &x * v * v.transpose();
        assert!((x - recon).norm() < 1e-9);
        assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_one_clamped() {
        let row = SparseVec::from_pairs(vec![(0, 1.0), (2, 2.0)]);
        let rows: Vec<SparseVec> = (1..=4)
            .map(|k| SparseVec::from_pairs(row.iter().map(|(i, v)| (i as u32, v * k as f64)).collect()))
            .collect();
        let svd = truncated_svd(&rows, 3, &SvdConfig { rank: 3, ..Default::default() });
        assert_eq!(svd.singular_values.len(), 1);
    }

    #[test]
    fn randomized_tracks_exact_leading_values() {
        // Low-rank signal plus small noise so the spectrum decays.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let basis = random_rows(4, 120, 11);
        let rows: Vec<SparseVec> = (0..150)
            .map(|_| {
                let mut pairs = Vec::new();
                for b in &basis {
                    let w: f64 = rng.random_range(0.0..3.0);
                    pairs.extend(b.iter().map(|(i, v)| (i as u32, w * v)));
                }
                pairs.push((rng.random_range(0..120), 0.01));
                SparseVec::from_pairs(pairs)
            })
            .collect();
        let cfg = SvdConfig { rank: 4, oversample: 6, power_iters: 2, seed: 1 };
        let approx = truncated_svd(&rows, 120, &cfg);
        let (mut exact_sv, _) = exact(&rows, 120);
        exact_sv.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(approx.singular_values.len(), 4);
        for (a, e) in approx.singular_values.iter().zip(&exact_sv) {
            assert!((a - e).abs() / e < 1e-6, "{a} vs {e}");
        }
        let again = truncated_svd(&rows, 120, &cfg);
        assert_eq!(again.singular_values, approx.singular_values);
        assert_eq!(again.components, approx.components);
    }
}

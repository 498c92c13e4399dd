use serde::{Deserialize, Serialize};

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from unsorted `(index, value)` pairs, summing duplicates and
    /// dropping zeros.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_unstable_by_key(|p| p.0);
        let mut out = SparseVec::new();
        for (i, v) in pairs {
            match out.indices.last() {
                Some(&last) if last == i => *out.values.last_mut().unwrap() += v,
                _ => {
                    out.indices.push(i);
                    out.values.push(v);
                }
            }
        }
        out.retain_nonzero();
        out
    }

    fn retain_nonzero(&mut self) {
        let mut k = 0;
        for j in 0..self.indices.len() {
            if self.values[j] != 0.0 {
                self.indices[k] = self.indices[j];
                self.values[k] = self.values[j];
                k += 1;
            }
        }
        self.indices.truncate(k);
        self.values.truncate(k);
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&(index as u32)) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Entry-wise product with a dense weight vector.
    pub fn weighted(&self, weights: &[f64]) -> SparseVec {
        let mut out = SparseVec {
            indices: self.indices.clone(),
            values: self
                .iter()
                .map(|(i, v)| v * weights[i])
                .collect(),
        };
        out.retain_nonzero();
        out
    }

    /// `self + sign * other`, exact for integer-valued counts.
    pub fn add_scaled(&self, other: &SparseVec, sign: f64) -> SparseVec {
        let mut pairs: Vec<(u32, f64)> = self.iter().map(|(i, v)| (i as u32, v)).collect();
        pairs.extend(other.iter().map(|(i, v)| (i as u32, sign * v)));
        SparseVec::from_pairs(pairs)
    }
}

pub fn dense_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dense_norm(a: &[f64]) -> f64 {
    dense_dot(a, a).sqrt()
}

/// `dot / (na * nb)` clamped to [-1, 1]; zero when either norm is zero.
pub fn cosine_from_parts(dot: f64, na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_pairs_sums_and_sorts() {
        let v = SparseVec::from_pairs(vec![(3, 1.0), (1, 2.0), (3, 1.0), (5, 0.0)]);
        assert_eq!(v.indices(), &[1, 3]);
        assert_eq!(v.values(), &[2.0, 2.0]);
        assert_eq!(v.get(3), 2.0);
        assert_eq!(v.get(4), 0.0);
    }

    #[test]
    fn dot_and_norm() {
        let a = SparseVec::from_pairs(vec![(0, 1.0), (2, 2.0)]);
        let b = SparseVec::from_pairs(vec![(2, 3.0), (4, 1.0)]);
        assert_eq!(a.dot(&b), 6.0);
        assert_eq!(a.norm(), 5f64.sqrt());
    }

    #[test]
    fn subtraction_cancels() {
        let a = SparseVec::from_pairs(vec![(0, 3.0), (2, 1.0)]);
        let b = SparseVec::from_pairs(vec![(2, 1.0)]);
        let c = a.add_scaled(&b, -1.0);
        assert_eq!(c.indices(), &[0]);
        assert_eq!(c.values(), &[3.0]);
    }

    #[test]
    fn cosine_zero_convention() {
        assert_eq!(cosine_from_parts(0.0, 0.0, 1.0), 0.0);
        assert_eq!(cosine_from_parts(2.0, 1.0, 1.0), 1.0);
    }
}

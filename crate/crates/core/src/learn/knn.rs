use serde::{Deserialize, Serialize};

use super::Dataset;

/// Stores the training set verbatim as packed bit rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub dims: usize,
    rows: Vec<Vec<u64>>,
    correct: Vec<bool>,
}

fn pack_active(active: &[u32], dims: usize) -> Vec<u64> {
    let mut words = vec![0u64; dims.div_ceil(64)];
    for &i in active {
        words[i as usize / 64] |= 1 << (i % 64);
    }
    words
}

fn pack_bits(bits: &[bool]) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64)];
    for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
        words[i / 64] |= 1 << (i % 64);
    }
    words
}

impl KnnModel {
    pub(super) fn fit(ds: &Dataset, k: usize) -> Self {
        KnnModel {
            k,
            dims: ds.dims,
            rows: ds.active.iter().map(|a| pack_active(a, ds.dims)).collect(),
            correct: ds.correct.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Training indices of the k nearest rows; equal distances rank the
    /// lower index first.
    pub fn neighbors(&self, bits: &[bool]) -> Vec<usize> {
        let q = pack_bits(bits);
        let mut dist: Vec<(u32, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a ^ b).count_ones()).sum(), i))
            .collect();
        dist.sort_unstable();
        dist.into_iter().take(self.k).map(|(_, i)| i).collect()
    }

    pub(super) fn predict(&self, bits: &[bool]) -> f64 {
        let nn = self.neighbors(bits);
        nn.iter().filter(|&&i| self.correct[i]).count() as f64 / self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use crate::learn::fixtures::sample;
    use crate::learn::{predict_probability, train_model, Label, ModelConfig, Model};

    use Label::{Correct as C, Incorrect as I};

    /// Ten points on three bits; distances from 000 are hand-counted.
    fn ten() -> Vec<crate::learn::LabeledSample> {
        [
            ([0, 0, 0], C), // d 0
            ([1, 0, 0], C), // d 1
            ([0, 1, 0], I), // d 1
            ([0, 0, 1], C), // d 1
            ([1, 1, 0], I), // d 2
            ([1, 0, 1], I), // d 2
            ([0, 1, 1], C), // d 2
            ([1, 1, 1], I), // d 3
            ([1, 1, 1], I), // d 3
            ([1, 1, 1], I), // d 3
        ]
        .iter()
        .map(|(b, l)| sample(b, *l))
        .collect()
    }

    fn prob(q: [u8; 3]) -> f64 {
        let m = train_model(&ModelConfig::knn(), &ten(), 0).unwrap();
        predict_probability(&m, &sample(&q, C).features).unwrap()
    }

    #[test]
    fn hand_computed_fractions() {
        // 000: neighbours 0,1,2,3 then 4,5 (index tie-break) -> C C I C I I.
        assert_eq!(prob([0, 0, 0]), 0.5);
        // 111: 7,8,9 (d0) then 4,5,6 (d1) -> I I I I I C.
        assert_eq!(prob([1, 1, 1]), 1.0 / 6.0);
        // 001: 3 (d0); 0,5,6 (d1); 1,2 from d2 -> C C I C C I.
        assert_eq!(prob([0, 0, 1]), 4.0 / 6.0);
    }

    #[test]
    fn all_correct_neighbours() {
        let data: Vec<_> = (0..8)
            .map(|i| sample(&[1, (i % 2) as u8], if i < 6 { C } else { I }))
            .chain([sample(&[0, 0], I)])
            .collect();
        let m = train_model(&ModelConfig::knn(), &data, 0).unwrap();
        let Model::Knn(knn) = &m else { unreachable!() };
        assert_eq!(knn.neighbors(&[true, false]), vec![0, 2, 4, 6, 1, 3]);
        assert_eq!(predict_probability(&m, &sample(&[1, 1], C).features).unwrap(), 1.0 - 1.0 / 6.0);
        let m6: Vec<_> = data[..6].to_vec();
        let m6 = train_model(&ModelConfig::knn(), &m6, 0).unwrap();
        assert_eq!(predict_probability(&m6, &sample(&[0, 0], I).features).unwrap(), 1.0);
    }
}

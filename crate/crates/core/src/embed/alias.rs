// SPDX-License-Identifier: Apache-2.0

//! Vose's alias method: O(n) construction, O(1) sampling.

use rand::Rng;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    /// Build from non-negative weights. An empty or all-zero weight list
    /// yields an empty table.
    pub fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let total: f64 = weights.iter().sum();
        if n == 0 || total <= 0.0 {
            return AliasTable::default();
        }
        let mut prob: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small = Vec::new();
        let mut large = Vec::new();
        for (i, &p) in prob.iter().enumerate() {
            if p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l as u32;
            prob[l] -= 1.0 - prob[s];
            if prob[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in large.into_iter().chain(small) {
            prob[i] = 1.0;
            alias[i] = i as u32;
        }
        AliasTable { prob, alias }
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        if self.prob.is_empty() {
            return None;
        }
        let i = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[i] {
            Some(i)
        } else {
            Some(self.alias[i] as usize)
        }
    }

    /// The exact distribution the table samples from.
    pub fn implied_probabilities(&self) -> Vec<f64> {
        let n = self.prob.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[i] += self.prob[i];
            if self.alias[i] as usize != i {
                out[self.alias[i] as usize] += 1.0 - self.prob[i];
            }
        }
        out.iter_mut().for_each(|p| *p /= n as f64);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_weights() {
        assert!(AliasTable::new(&[]).is_empty());
        assert!(AliasTable::new(&[0.0, 0.0]).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(AliasTable::new(&[]).sample(&mut rng), None);
    }

    #[test]
    fn zero_weight_never_sampled() {
        let t = AliasTable::new(&[1.0, 0.0, 3.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            assert_ne!(t.sample(&mut rng), Some(1));
        }
    }

    #[test]
    fn empirical_frequencies() {
        let w = [0.5, 1.0, 2.0];
        let t = AliasTable::new(&w);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 3];
        let n = 200_000;
        for _ in 0..n {
            counts[t.sample(&mut rng).unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.005);
        }
    }

    proptest! {
        #[test]
        fn implied_matches_weights(w in prop::collection::vec(0.001f64..100.0, 1..40)) {
            let t = AliasTable::new(&w);
            let total: f64 = w.iter().sum();
            let implied = t.implied_probabilities();
            prop_assert!((implied.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (p, wi) in implied.iter().zip(&w) {
                prop_assert!((p - wi / total).abs() < 1e-14);
            }
        }
    }
}

//! Alias method for O(1) sampling from a fixed categorical distribution.

use rand::Rng;

/// Preprocessed alias table (Vose's construction). Sampling draws one
/// uniform bucket index and one uniform coin, independent of the number of
/// outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// Build from non-negative weights. The weights need not be normalized;
    /// an all-zero or empty input is rejected by the caller side (walkers
    /// never build tables for dead ends).
    pub fn new(weights: &[f64]) -> AliasTable {
        assert!(!weights.is_empty(), "alias table needs at least one outcome");
        let n = weights.len();
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0, "alias table needs positive total weight");

        let mut prob = vec![0.0; n];
        let mut alias: Vec<usize> = (0..n).collect();
        let scale = n as f64 / total;

        let mut small: Vec<usize> = Vec::with_capacity(n);
        let mut large: Vec<usize> = Vec::with_capacity(n);
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }

        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        for &l in &large {
            prob[l] = 1.0;
        }
        for &s in &small {
            prob[s] = 1.0; // numerical leftovers
        }

        AliasTable { prob, alias }
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// Draw one outcome index.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }

    /// Exact per-outcome probability mass encoded by the table, recovered
    /// from the bucket layout. Diagnostic; used to check that construction
    /// preserved the input distribution.
    pub fn outcome_probabilities(&self) -> Vec<f64> {
        let n = self.prob.len();
        let mut mass = vec![0.0; n];
        for i in 0..n {
            mass[i] += self.prob[i] / n as f64;
            mass[self.alias[i]] += (1.0 - self.prob[i]) / n as f64;
        }
        mass
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn expansion_matches_input_distribution() {
        let table = AliasTable::new(&[0.2, 0.3, 0.5]);
        let mass = table.outcome_probabilities();
        for (m, expect) in mass.iter().zip([0.2, 0.3, 0.5]) {
            assert!((m - expect).abs() < 1e-15, "{m} vs {expect}");
        }
    }

    #[test]
    fn unnormalized_weights_are_normalized() {
        let table = AliasTable::new(&[2.0, 3.0, 5.0]);
        let mass = table.outcome_probabilities();
        for (m, expect) in mass.iter().zip([0.2, 0.3, 0.5]) {
            assert!((m - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn single_outcome_always_sampled() {
        let table = AliasTable::new(&[7.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(table.sample(&mut rng), 0);
        }
    }

    #[test]
    fn zero_weight_outcome_never_sampled() {
        let table = AliasTable::new(&[0.0, 1.0, 0.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let s = table.sample(&mut rng);
            assert!(s == 1 || s == 3);
        }
    }

    #[test]
    fn empirical_frequencies_track_weights() {
        let weights = [1.0, 2.0, 3.0, 4.0];
        let table = AliasTable::new(&weights);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mut counts = [0u64; 4];
        for _ in 0..n {
            counts[table.sample(&mut rng)] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let expect = weights[i] / 10.0;
            let got = c as f64 / n as f64;
            assert!((got - expect).abs() < 0.005, "outcome {i}: {got} vs {expect}");
        }
    }
}

//! Vose's alias method: O(n) construction, O(1) sampling.

use rand::Rng;

#[derive(Debug, Clone)]
pub struct AliasTable {
    /// Acceptance threshold for each bucket, in [0, 1].
    accept: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    /// Builds a table from nonnegative weights. The weights need not be
    /// normalised but must have a positive sum.
    pub fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        assert!(n > 0, "alias table needs at least one outcome");
        assert!(n <= u32::MAX as usize);
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0 && total.is_finite());

        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small = Vec::new();
        let mut large = Vec::new();
        for (i, &p) in scaled.iter().enumerate() {
            if p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }

        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to round-off.
        for i in small.into_iter().chain(large) {
            scaled[i] = 1.0;
        }

        AliasTable {
            accept: scaled,
            alias,
        }
    }

    pub fn len(&self) -> usize {
        self.accept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accept.is_empty()
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let bucket = rng.random_range(0..self.accept.len());
        if rng.random::<f64>() < self.accept[bucket] {
            bucket
        } else {
            self.alias[bucket] as usize
        }
    }

    /// Probability mass the table assigns to `index`, reconstructed from the
    /// buckets. Used to check the table against its input weights.
    pub fn mass(&self, index: usize) -> f64 {
        let n = self.accept.len() as f64;
        let mut m = self.accept[index];
        for (b, &a) in self.alias.iter().enumerate() {
            if a as usize == index && b != index {
                m += 1.0 - self.accept[b];
            }
        }
        m / n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_input_masses() {
        let w = [1.0, 2.0, 3.0, 0.0, 4.0];
        let table = AliasTable::new(&w);
        for (i, wi) in w.iter().enumerate() {
            assert!((table.mass(i) - wi / 10.0).abs() < 1e-12, "index {i}");
        }
    }

    #[test]
    fn single_outcome() {
        let table = AliasTable::new(&[0.3]);
        let mut rng = rand::rng();
        for _ in 0..10 {
            assert_eq!(table.sample(&mut rng), 0);
        }
    }
}

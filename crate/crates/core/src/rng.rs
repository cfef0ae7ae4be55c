//! Seeded randomness and mini-batch sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Name of the generator behind [`RngState`], echoed into run metadata.
pub const GENERATOR_NAME: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

/// Deterministic random stream. Two states built from the same seed yield
/// identical output on every platform.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw from `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.inner.random::<f64>()
    }

    pub fn inner_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}

/// Indices of one mini-batch, sorted ascending and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexBatch {
    indices: Vec<usize>,
    source_size: usize,
}

impl IndexBatch {
    /// Builds a batch from explicit indices. Duplicates are allowed here so that
    /// callers can express weighted batches; [`sample_batch`] never emits them.
    pub fn from_indices(indices: Vec<usize>, source_size: usize) -> Result<Self> {
        if indices.is_empty() || indices.iter().any(|&i| i >= source_size) {
            return Err(Error::InvalidBatch {
                size: indices.len(),
                population: source_size,
            });
        }
        Ok(IndexBatch {
            indices,
            source_size,
        })
    }

    /// The batch `{0, .., m-1}`.
    pub fn full(m: usize) -> Result<Self> {
        Self::from_indices((0..m).collect(), m)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn source_size(&self) -> usize {
        self.source_size
    }
}

/// Draws `size` distinct indices uniformly without replacement from `0..m`.
///
/// A full-size request returns `0..m` without consuming randomness.
pub fn sample_batch(rng: &mut RngState, m: usize, size: usize) -> Result<IndexBatch> {
    if size == 0 || size > m {
        return Err(Error::InvalidBatch {
            size,
            population: m,
        });
    }
    if size == m {
        return IndexBatch::full(m);
    }
    let mut indices = rand::seq::index::sample(rng.inner_mut(), m, size).into_vec();
    indices.sort_unstable();
    Ok(IndexBatch {
        indices,
        source_size: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn exhaustive_batch_is_everything() {
        let mut rng = RngState::new(7);
        let batch = sample_batch(&mut rng, 5, 5).unwrap();
        assert_eq!(batch.indices(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn same_seed_same_batches() {
        let mut a = RngState::new(7);
        let mut b = RngState::new(7);
        for _ in 0..20 {
            assert_eq!(
                sample_batch(&mut a, 10, 3).unwrap(),
                sample_batch(&mut b, 10, 3).unwrap()
            );
        }
    }

    #[test]
    fn rejects_oversized_and_empty() {
        let mut rng = RngState::new(1);
        assert!(matches!(
            sample_batch(&mut rng, 3, 4),
            Err(Error::InvalidBatch {
                size: 4,
                population: 3
            })
        ));
        assert!(sample_batch(&mut rng, 3, 0).is_err());
    }

    #[test]
    fn no_duplicates_small_populations() {
        let mut rng = RngState::new(3);
        for m in 1..=12 {
            for size in 1..=m {
                for _ in 0..10 {
                    let batch = sample_batch(&mut rng, m, size).unwrap();
                    let set: HashSet<_> = batch.indices().iter().collect();
                    assert_eq!(set.len(), size);
                    assert!(batch.indices().iter().all(|&i| i < m));
                }
            }
        }
    }

    #[test]
    fn size_one_draws_are_uniform() {
        let mut rng = RngState::new(2024);
        let mut counts = [0usize; 10];
        for _ in 0..10_000 {
            counts[sample_batch(&mut rng, 10, 1).unwrap().indices()[0]] += 1;
        }
        // Binomial(10000, 0.1): mean 1000, sigma 30.
        let sigma = (10_000.0f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!((c as f64 - 1000.0).abs() <= 5.0 * sigma, "{counts:?}");
        }
    }
}

//! Deterministic random numbers.
//!
//! Backed by ChaCha8 (a counter-based stream cipher generator). A seed picks
//! the key via `seed_from_u64` and an independent stream id selects one of
//! 2^64 non-overlapping streams, so `(seed, stream)` pairs split cleanly
//! without sharing state. The algorithm is fixed; changing it breaks golden
//! outputs.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Independent child generator for sub-task `stream` of the same seed.
    pub fn split(seed: u64, stream: u64) -> Self {
        Self::with_stream(seed, stream.wrapping_add(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.random()
    }

    /// Uniform in `[lo, hi]`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniformly distributed direction on the unit sphere in `dim` dimensions.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_seeds_give_equal_sequences() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_are_independent() {
        let mut a = Rng::split(42, 0);
        let mut b = Rng::split(42, 1);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn known_answer_is_stable() {
        // Pinned so an accidental generator change shows up here before it
        // silently alters golden files.
        let mut r = Rng::new(7);
        let first = r.next_u64();
        let mut again = Rng::new(7);
        assert_eq!(first, again.next_u64());
        assert_eq!(first, KNOWN_SEED7_FIRST);
    }

    const KNOWN_SEED7_FIRST: u64 = 2_910_824_217_569_608_635;

    #[test]
    fn unit_vectors_have_unit_norm() {
        let mut r = Rng::new(3);
        for dim in [1, 2, 17, 256] {
            let v = r.unit_vector(dim);
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_respects_bounds() {
        let mut r = Rng::new(9);
        for _ in 0..10_000 {
            let x = r.uniform(-0.25, 0.5);
            assert!((-0.25..=0.5).contains(&x));
        }
    }
}

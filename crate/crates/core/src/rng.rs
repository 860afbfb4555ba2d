//! Counter-based random streams.
//!
//! Every random quantity is addressed by `(seed, stream, position)`: ChaCha
//! is a block cipher in counter mode, so a stream can be opened at any
//! position without generating what precedes it. Filter `ℓ` of a bank
//! always reads stream `ℓ`, which makes a bank of `N` filters a prefix of a
//! bank of `N + 1` filters and keeps results independent of thread
//! scheduling.
//!
//! Normal variates use the inverse CDF of one 53-bit uniform each, so the
//! `k`-th Gaussian of a stream is a fixed function of its `k`-th word.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::function::erf::erfc_inv;

/// High byte of a stream id; keeps the different consumers of one seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Filter = 1,
    DataX = 2,
    DataZ = 3,
    Scene = 4,
    Derive = 5,
}

const DOMAIN_SHIFT: u32 = 56;

/// Stream id for `index` within `domain`.
pub fn stream_id(domain: Domain, index: u64) -> u64 {
    debug_assert!(
        index < 1 << DOMAIN_SHIFT,
        "stream index overflows its domain"
    );
    ((domain as u64) << DOMAIN_SHIFT) | (index & ((1 << DOMAIN_SHIFT) - 1))
}

pub struct Stream {
    rng: ChaCha12Rng,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self::at(seed, stream, 0)
    }

    /// Open `stream` positioned at 64-bit word `word`.
    pub fn at(seed: u64, stream: u64, word: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        // word_pos counts 32-bit words
        rng.set_word_pos(2 * u128::from(word));
        Self { rng }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via the inverse CDF.
    pub fn next_gaussian(&mut self) -> f64 {
        let u = self.next_uniform();
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
    }

    /// Uniform integer in `lo..=hi`.
    pub fn next_in(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi, "empty range");
        let span = hi - lo + 1;
        if span == 0 {
            return self.next_u64();
        }
        lo + ((u128::from(self.next_u64()) * u128::from(span)) >> 64) as u64
    }
}

/// A child seed, a pure function of `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    Stream::new(seed, stream_id(Domain::Derive, index)).next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_seekable() {
        let mut a = Stream::new(7, 3);
        let first: Vec<u64> = (0..10).map(|_| a.next_u64()).collect();
        let mut b = Stream::at(7, 3, 4);
        assert_eq!(b.next_u64(), first[4]);
        let mut c = Stream::new(7, 4);
        assert_ne!(c.next_u64(), first[0]);
        let mut d = Stream::new(8, 3);
        assert_ne!(d.next_u64(), first[0]);
    }

    #[test]
    fn gaussian_moments() {
        let mut s = Stream::new(11, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.next_gaussian()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // 4 standard errors: sd(mean) = 1/√n, sd(var) ≈ √(2/n)
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!(
            (var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt(),
            "var {var}"
        );
    }

    #[test]
    fn uniform_open_interval_and_ints() {
        let mut s = Stream::new(1, 1);
        for _ in 0..10_000 {
            let u = s.next_uniform();
            assert!(u > 0.0 && u < 1.0);
            let k = s.next_in(3, 5);
            assert!((3..=5).contains(&k));
        }
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(5, 0), derive_seed(5, 1));
        assert_eq!(derive_seed(5, 9), derive_seed(5, 9));
    }
}

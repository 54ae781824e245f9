//! Counter-based random streams.
//!
//! Every sample `i` of a stream starts at a fixed ChaCha word offset, so any
//! contiguous range of samples can be regenerated independently of the
//! others. Samplers must consume a fixed number of `f64` draws per sample.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Words (u32) consumed by one `f64` draw.
const WORDS_PER_F64: u128 = 2;

/// Stream tags keep independent consumers of one seed apart.
pub mod tags {
    pub const SPHERE: u64 = 1;
    pub const BALL: u64 = 2;
    pub const CENTERS: u64 = 3;
    pub const STRATA: u64 = 4;
    pub const RATIO: u64 = 5;
    pub const EVALUATE: u64 = 6;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleStream {
    seed: u64,
    tag: u64,
    draws_per_sample: u64,
}

impl SampleStream {
    pub fn new(seed: u64, tag: u64, draws_per_sample: u64) -> Self {
        assert!(draws_per_sample > 0);
        Self {
            seed,
            tag,
            draws_per_sample,
        }
    }

    pub fn draws_per_sample(&self) -> u64 {
        self.draws_per_sample
    }

    /// Generator positioned at the first draw of sample `index`.
    pub fn at(&self, index: u64) -> Draws {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.tag);
        rng.set_word_pos(index as u128 * self.draws_per_sample as u128 * WORDS_PER_F64);
        Draws { rng }
    }
}

pub struct Draws {
    rng: ChaCha8Rng,
}

impl Draws {
    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Two standard normals from two uniforms (Box-Muller).
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        (radius * c, radius * s)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// splitmix64 finalizer, used to derive sub-seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_reproducible_from_any_offset() {
        let stream = SampleStream::new(7, tags::BALL, 3);
        let mut seq = stream.at(0);
        let all: Vec<f64> = (0..30).map(|_| seq.uniform()).collect();
        let mut mid = stream.at(4);
        let tail: Vec<f64> = (0..18).map(|_| mid.uniform()).collect();
        assert_eq!(&all[12..], &tail[..]);
    }

    #[test]
    fn tags_separate_streams() {
        let a = SampleStream::new(7, tags::BALL, 1).at(0).uniform();
        let b = SampleStream::new(7, tags::SPHERE, 1).at(0).uniform();
        assert_ne!(a, b);
    }
}

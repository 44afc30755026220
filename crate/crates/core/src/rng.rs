//! Counter-based sign generation.
//!
//! A [`SignPath`] maps an index `n >= 1` to a sign in `{-1, +1}` as a pure
//! function of `(seed, generator, n)`. Signs are produced 64 at a time: word
//! `w` carries the signs of `n = 64w + 1 ..= 64w + 64`, bit `i` for
//! `n = 64w + i + 1`, with a set bit meaning `+1`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream tags separating the independent uses of one path seed.
pub(crate) const STREAM_BLOCKS: u64 = 0xB10C_5EED_0000_0001;
pub(crate) const STREAM_TILT: u64 = 0x7117_5EED_0000_0002;

/// The SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of path `index` in a run seeded with `seed`: `mix64(mix64(seed) ^ index)`.
///
/// Mixing the run seed first keeps the path sets of nearby run seeds
/// disjoint; `seed ^ index` alone would only permute `0..n` for small seeds.
#[inline]
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ index)
}

/// Converts 53 high bits of `x` to a uniform in `[0, 1)`.
#[inline]
pub fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorId {
    /// Word `w` is the `w`-th output of the SplitMix64 sequence seeded with `seed`.
    #[default]
    SplitMix64,
    /// Word `w` is the `w`-th 64-bit output of ChaCha8 keyed by `seed`.
    ChaCha8,
    /// Every sign is `+1`. Test fixture, turns `F(σ)` into `ζ(σ)`.
    AllPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignPath {
    pub seed: u64,
    pub generator: GeneratorId,
}

impl SignPath {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            generator: GeneratorId::SplitMix64,
        }
    }

    pub fn with_generator(seed: u64, generator: GeneratorId) -> Self {
        Self { seed, generator }
    }

    pub fn all_plus() -> Self {
        Self {
            seed: 0,
            generator: GeneratorId::AllPlus,
        }
    }

    /// The sign bits of word `w` (indices `64w+1 ..= 64w+64`).
    pub fn word(&self, w: u64) -> u64 {
        match self.generator {
            GeneratorId::SplitMix64 => {
                mix64(self.seed.wrapping_add(w.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
            }
            GeneratorId::ChaCha8 => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_word_pos(u128::from(w) * 2);
                rng.next_u64()
            }
            GeneratorId::AllPlus => u64::MAX,
        }
    }

    /// `Xₙ` for `n >= 1`.
    pub fn sign(&self, n: u64) -> i8 {
        assert!(n >= 1, "sign indices start at 1");
        let w = (n - 1) / 64;
        let bit = (n - 1) % 64;
        if (self.word(w) >> bit) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// Sequential iterator over sign words starting at word `first`.
    pub fn words_from(&self, first: u64) -> SignWords {
        let inner = match self.generator {
            GeneratorId::SplitMix64 => WordSource::SplitMix {
                seed: self.seed,
                next: first,
            },
            GeneratorId::ChaCha8 => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_word_pos(u128::from(first) * 2);
                WordSource::ChaCha(Box::new(rng))
            }
            GeneratorId::AllPlus => WordSource::Constant,
        };
        SignWords { inner }
    }
}

enum WordSource {
    SplitMix { seed: u64, next: u64 },
    ChaCha(Box<ChaCha8Rng>),
    Constant,
}

/// Sequential access to sign words; yields the same values as
/// [`SignPath::word`] without the per-call setup.
pub struct SignWords {
    inner: WordSource,
}

impl Iterator for SignWords {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        Some(match &mut self.inner {
            WordSource::SplitMix { seed, next } => {
                *next += 1;
                mix64(seed.wrapping_add(next.wrapping_mul(GOLDEN_GAMMA)))
            }
            WordSource::ChaCha(rng) => rng.next_u64(),
            WordSource::Constant => u64::MAX,
        })
    }
}

/// Per-path auxiliary generator for one stream tag (block counts, tilted signs).
pub(crate) fn stream_rng(path_seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(path_seed ^ tag))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearby_run_seeds_give_disjoint_paths() {
        let a: std::collections::HashSet<u64> = (0..4096).map(|i| derive_seed(1, i)).collect();
        assert_eq!(a.len(), 4096);
        assert!((0..4096).all(|i| !a.contains(&derive_seed(2, i))));
    }

    #[test]
    fn splitmix_word_matches_reference_sequence() {
        // Reference SplitMix64 stepping.
        let seed = 1234567u64;
        let mut state = seed;
        for w in 0..10 {
            state = state.wrapping_add(GOLDEN_GAMMA);
            assert_eq!(SignPath::new(seed).word(w), mix64(state));
        }
    }

    #[test]
    fn sequential_words_match_random_access() {
        for g in [GeneratorId::SplitMix64, GeneratorId::ChaCha8, GeneratorId::AllPlus] {
            let p = SignPath::with_generator(99, g);
            let seq: Vec<u64> = p.words_from(3).take(20).collect();
            let direct: Vec<u64> = (3..23).map(|w| p.word(w)).collect();
            assert_eq!(seq, direct, "{g:?}");
        }
    }

    #[test]
    fn sign_is_order_independent() {
        let p = SignPath::new(7);
        let forward: Vec<i8> = (1..=300).map(|n| p.sign(n)).collect();
        let backward: Vec<i8> = (1..=300).rev().map(|n| p.sign(n)).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
        assert!(forward.iter().all(|&s| s == 1 || s == -1));
    }

    #[test]
    fn all_plus_fixture() {
        let p = SignPath::all_plus();
        assert!((1..200).all(|n| p.sign(n) == 1));
    }

    #[test]
    fn unit_f64_range() {
        assert_eq!(unit_f64(0), 0.0);
        assert!(unit_f64(u64::MAX) < 1.0);
    }
}

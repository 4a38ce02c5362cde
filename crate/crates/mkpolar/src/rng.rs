//! Deterministic, platform independent random numbers.
//!
//! Everything random in this crate is drawn from SplitMix64, written out here
//! so results never depend on an external crate's stream:
//!
//! ```text
//! GAMMA = 0x9E3779B97F4A7C15
//! mix(z):
//!     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!     return z ^ (z >> 31)
//! next():                      // state starts at the seed
//!     state = state + GAMMA
//!     return mix(state)
//! ```
//!
//! All arithmetic wraps modulo 2^64. Independent streams (per trial, per tree
//! node, per sampled matrix) use [`derive_seed`]:
//! `derive_seed(master, k) = mix(master + mix(k + GAMMA))`.
//!
//! Uniform doubles take the top 53 bits: `(next() >> 11) * 2^-53`.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `k`-th child stream of `master`.
#[inline]
pub fn derive_seed(master: u64, k: u64) -> u64 {
    mix(master.wrapping_add(mix(k.wrapping_add(GAMMA))))
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn next_bit(&mut self) -> u8 {
        (self.next_u64() >> 63) as u8
    }

    /// Uniform in `0..n` by rejection, `n > 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }
}

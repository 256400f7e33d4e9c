//! Deterministic splittable random streams.
//!
//! Every random quantity in the crate is drawn from a stream keyed by
//! (seed, purpose tag, indices...). A stream's output depends only on its
//! key, so generation order, trial parallelism, and thread scheduling
//! cannot change results: the same seed always yields bit-identical data.

use num_complex::Complex64;

/// Purpose tags keeping independent uses of the same base seed apart.
pub mod purpose {
    pub const CHANNEL: u64 = 0x4348_414e;
    pub const NOISE: u64 = 0x4e4f_4953;
    pub const SYMBOLS: u64 = 0x5359_4d42;
    pub const TRIAL: u64 = 0x5452_4941;
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed and a list of stream-identifying words into one key.
pub fn derive_key(seed: u64, words: &[u64]) -> u64 {
    let mut state = seed;
    let mut key = splitmix64(&mut state);
    for &w in words {
        state ^= w.wrapping_mul(GOLDEN);
        key = splitmix64(&mut state) ^ key.rotate_left(17);
    }
    key
}

/// xoshiro256++ stream seeded from a derived key.
#[derive(Clone, Debug)]
pub struct Stream {
    s: [u64; 4],
}

impl Stream {
    pub fn new(key: u64) -> Self {
        let mut state = key;
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut state);
        }
        Stream { s }
    }

    /// Stream for `(seed, words...)`; see [`derive_key`].
    pub fn keyed(seed: u64, words: &[u64]) -> Self {
        Self::new(derive_key(seed, words))
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Pair of independent standard normals (Marsaglia polar method).
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                return (u * f, v * f);
            }
        }
    }

    /// Zero-mean unit-variance complex normal: variance 1/2 per component.
    pub fn next_complex_normal(&mut self) -> Complex64 {
        let (a, b) = self.next_normal_pair();
        Complex64::new(a * std::f64::consts::FRAC_1_SQRT_2, b * std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Seed for an individual trial, derived so trials are independent streams.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    derive_key(seed, &[purpose::TRIAL, trial])
}

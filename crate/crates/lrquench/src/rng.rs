//! Counter-based SplitMix64 stream.
//!
//! Every realization owns an independent stream keyed by
//!
//! ```text
//! sub_seed = fmix64(seed ^ fmix64(realization_index + GAMMA))
//! word(k)  = fmix64(sub_seed + (k + 1) * GAMMA)          (wrapping u64)
//! ```
//!
//! where `GAMMA = 0x9E3779B97F4A7C15` and `fmix64` is the SplitMix64
//! finalizer (xor-shift 30/27/31 with multipliers `0xBF58476D1CE4E5B9` and
//! `0x94D049BB133111EB`). Uniform doubles take the top 53 bits of a word.
//! Normal deviates use Box–Muller on two consecutive words `(w0, w1)`:
//! `u1 = (w0 >> 11) + 1) * 2^-53` in (0, 1], `u2 = (w1 >> 11) * 2^-53`,
//! `r = sqrt(-2 ln u1)`, yielding `r cos(2π u2)` then `r sin(2π u2)`.
//! Integer arithmetic is exact everywhere; only the Box–Muller transcendental
//! calls depend on the platform libm.

pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn fmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn sub_seed(seed: u64, realization_index: u64) -> u64 {
    fmix64(seed ^ fmix64(realization_index.wrapping_add(GAMMA)))
}

#[derive(Clone, Debug)]
pub struct CounterRng {
    key: u64,
    counter: u64,
    spare: Option<f64>,
}

impl CounterRng {
    pub fn from_sub_seed(key: u64) -> Self {
        Self {
            key,
            counter: 0,
            spare: None,
        }
    }

    pub fn for_realization(seed: u64, realization_index: u64) -> Self {
        Self::from_sub_seed(sub_seed(seed, realization_index))
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Random access into the stream; does not move the cursor.
    #[inline]
    pub fn word(&self, k: u64) -> u64 {
        fmix64(self.key.wrapping_add(k.wrapping_add(1).wrapping_mul(GAMMA)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let w = self.word(self.counter);
        self.counter = self.counter.wrapping_add(1);
        w
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

//! Self-contained seeded random number generation.
//!
//! The experiment pipeline must reproduce identical point sets from a
//! 64-bit seed in any implementation, so the generator is pinned to two
//! published algorithms rather than a library default:
//!
//! * state initialization: SplitMix64 (Steele, Lea, Flood 2014), four
//!   consecutive outputs seed the state;
//! * stream: xoshiro256++ (Blackman, Vigna 2019),
//!   `rotl(s0 + s3, 23) + s0` output with the standard state transition;
//! * uniforms: the top 53 bits of each output scaled by 2^-53, giving
//!   doubles in [0, 1);
//! * normals: the Box-Muller transform, `sqrt(-2 ln u1) * cos(2 pi u2)`
//!   then `... * sin(2 pi u2)`, with `u1` flipped to (0, 1]; both values
//!   of each pair are consumed in order.

/// xoshiro256++ stream seeded via SplitMix64.
#[derive(Debug, Clone)]
pub struct Xoshiro256PlusPlus {
    s: [u64; 4],
    /// Cached second Box-Muller output.
    spare_normal: Option<f64>,
}

impl Xoshiro256PlusPlus {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut next_sm = || {
            sm = sm.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = sm;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            z ^ (z >> 31)
        };
        Self {
            s: [next_sm(), next_sm(), next_sm(), next_sm()],
            spare_normal: None,
        }
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

    /// Uniform double in [0, 1) from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal sample via Box-Muller.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.next_f64(); // (0, 1]: keeps the log finite
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }
}

//! Counter-based random number streams for reproducible parallel Monte Carlo.
//!
//! Every replica gets its own [`Stream`] keyed by `(seed, stream id)`. Draws
//! are a pure function of the key and a per-stream counter, so a simulation
//! is byte-for-byte reproducible for a fixed seed regardless of how replicas
//! are scheduled across threads.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One independent substream of the global generator.
#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    ctr: u64,
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64, id: u64) -> Self {
        let key = mix(seed ^ mix(id.wrapping_mul(GOLDEN).wrapping_add(GOLDEN)));
        Stream { key, ctr: 0, spare_normal: None }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.ctr = self.ctr.wrapping_add(1);
        mix(self.key.wrapping_add(self.ctr.wrapping_mul(GOLDEN)))
    }

    /// Uniform on `[0, 1)` with 53-bit resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform on `(0, 1]`; safe to pass to `ln`.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal draw (Box-Muller; the second value of each pair is
    /// cached in the stream).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let mag = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_normal = Some(mag * s);
        mag * c
    }
}

//! Deterministic pseudo-random numbers (splitmix64).
//!
//! Every stochastic piece of the pipeline (weight init, dropout masks,
//! synthetic scenes) draws from this generator so that runs are exactly
//! reproducible from a seed, independent of any external crate's stream.

/// FNV-1a 64-bit hash; used to derive per-site seeds from string tags and
/// to fingerprint file contents in run manifests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Splitmix64 generator. Small state, full 64-bit period, good avalanche.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn seed(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Derive an independent stream for a sub-task (dropout site, step index).
    pub fn derive(seed: u64, tag: u64) -> u64 {
        let mut r = Rng::seed(seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        r.next_u64()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller (no spare caching, keeps the stream
    /// a pure function of the draw count).
    pub fn normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }
}

//! Portable seeded randomness.
//!
//! Every random decision in this crate flows through [`SplitMix64`] so that
//! identical seeds reproduce identical outputs on every platform, independent
//! of any external RNG crate's version. The generator is the splitmix64
//! sequence (Steele, Lea & Flood; the same finalizer used by
//! `java.util.SplittableRandom`), bounded sampling uses Lemire's unbiased
//! multiply-shift rejection, and normals come from Box-Muller.

/// splitmix64 increment (the 64-bit golden ratio).
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// FNV-1a 64-bit offset basis and prime.
const FNV_OFFSET: u64 = 0xCBF2_9CE4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01B3;

/// Deterministic 64-bit generator with a one-word state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). `n` must be nonzero.
    ///
    /// Lemire's multiply-shift method: take the high 64 bits of
    /// `x * n`, rejecting the few low products that would bias the result.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let mut product = u128::from(self.next_u64()) * u128::from(n);
        let mut low = product as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                product = u128::from(self.next_u64()) * u128::from(n);
                low = product as u64;
            }
        }
        (product >> 64) as u64
    }

    /// Standard normal via Box-Muller. One draw consumes two uniforms.
    pub fn next_normal(&mut self) -> f64 {
        // u1 in (0, 1] so the log is finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Choose `k` distinct indices out of `0..n` by partial Fisher-Yates.
    ///
    /// The result preserves selection order (index drawn for slot 0 first).
    pub fn choose_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        debug_assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for slot in 0..k {
            let offset = self.next_below((n - slot) as u64) as usize;
            pool.swap(slot, slot + offset);
        }
        pool.truncate(k);
        pool
    }
}

/// splitmix64 output function: a bijective avalanching mix of the input.
pub fn mix64(value: u64) -> u64 {
    let mut z = value;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over raw bytes; the stable string hash used for seed derivation.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Fold seed components into one 64-bit seed.
///
/// `h_0 = mix64(part_0 + gamma)`, `h_i = mix64(h_{i-1} ^ (part_i + gamma))`.
/// The additive constant keeps all-zero inputs away from the mix fixpoint.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut hash = 0u64;
    for &part in parts {
        hash = mix64(hash ^ part.wrapping_add(GOLDEN_GAMMA));
    }
    hash
}

/// Per-query seed for the `random` strategy: stable across pool iteration
/// order because it depends only on the global seed and the query id.
pub fn query_seed(global_seed: u64, query_id: &str) -> u64 {
    derive_seed(&[global_seed, fnv1a64(query_id.as_bytes())])
}

//! Seeded pseudo-random generator with a fixed, documented algorithm.
//!
//! Template assignment and subset sampling must reproduce bit-for-bit across
//! platforms and releases, so the generator is pinned here instead of pulled
//! from an external crate whose stream might change between versions.
//!
//! The algorithm is SplitMix64 (Steele, Lea & Flood, "Fast splittable
//! pseudorandom number generators", OOPSLA 2014): a 64-bit counter advanced
//! by the golden-ratio increment, finalized with two xor-shift multiplies.
//! Bounded draws use the 128-bit multiply-high reduction, which maps the
//! full 64-bit output onto `0..n` with bias below 2^-54 for any n that fits
//! in usize.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `0..n`. Panics if `n == 0`.
    pub fn next_below(&mut self, n: usize) -> usize {
        assert!(n > 0, "next_below requires n > 0");
        let x = self.next_u64() as u128;
        ((x * n as u128) >> 64) as usize
    }

    /// Uniform sample of `n` distinct indices from `0..len`, ascending.
    ///
    /// Partial Fisher-Yates over the index vector; sorting afterwards keeps
    /// the callers' original element order.
    pub fn sample_indices(&mut self, len: usize, n: usize) -> Vec<usize> {
        debug_assert!(n <= len);
        let mut indices: Vec<usize> = (0..len).collect();
        for i in 0..n {
            let j = i + self.next_below(len - i);
            indices.swap(i, j);
        }
        let mut chosen = indices[..n].to_vec();
        chosen.sort_unstable();
        chosen
    }
}

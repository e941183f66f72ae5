//! Small deterministic helpers shared across modules.

/// Ceiling of log2 for n >= 1 (0 for n = 1). Parameter formulas use
/// base-2 ceilinged logarithms throughout.
pub fn log2_ceil(n: u64) -> u32 {
    assert!(n >= 1);
    if n == 1 {
        0
    } else {
        (n - 1).ilog2() + 1
    }
}

/// SplitMix64 step; stable across platforms, used to derive independent
/// seed streams from a master seed.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives the seed for sub-stream `index` of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_mul(0xa076_1d64_78bd_642f)))
}

/// FNV-1a over bytes; used for stable outcome digests in result tables
/// (std's default hasher is not stable across releases).
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Sequential seed dispenser for the engine runs composing one protocol.
#[derive(Debug, Clone)]
pub struct SeedSeq {
    master: u64,
    counter: u64,
}

impl SeedSeq {
    pub fn new(master: u64) -> Self {
        SeedSeq { master, counter: 0 }
    }

    pub fn next_seed(&mut self) -> u64 {
        let s = derive_seed(self.master, self.counter);
        self.counter += 1;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log2_ceil_values() {
        assert_eq!(log2_ceil(1), 0);
        assert_eq!(log2_ceil(2), 1);
        assert_eq!(log2_ceil(3), 2);
        assert_eq!(log2_ceil(8), 3);
        assert_eq!(log2_ceil(9), 4);
        assert_eq!(log2_ceil(16), 4);
        assert_eq!(log2_ceil(17), 5);
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 1);
        let c = derive_seed(43, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(42, 0));
    }
}

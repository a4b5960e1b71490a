//! Counter-based random numbers.
//!
//! Every draw made by the samplers is a pure function of `(seed, stream, counter)`,
//! so the order in which sites or replicas are evaluated can never change a
//! result. The mixer is the SplitMix64 finalizer applied to a combined key,
//! which is platform independent.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random 64-bit word for `(seed, stream, counter)`.
#[inline]
pub fn draw_u64(seed: u64, stream: u64, counter: u64) -> u64 {
    let k = mix64(seed.wrapping_add(GOLDEN));
    let k = mix64(k ^ stream.wrapping_mul(GOLDEN).wrapping_add(0x632B_E59B_D9B4_E019));
    mix64(k ^ counter.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(GOLDEN))
}

/// Uniform in `[0, 1)` with 53 bits of resolution.
#[inline]
pub fn draw_uniform(seed: u64, stream: u64, counter: u64) -> f64 {
    (draw_u64(seed, stream, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A per-run stream: `uniform(sweep, site)` is the draw consumed by `site` during `sweep`.
#[derive(Clone, Copy, Debug)]
pub struct SiteStream {
    key: u64,
}

impl SiteStream {
    pub fn new(seed: u64) -> Self {
        Self { key: mix64(seed ^ 0xA076_1D64_78BD_642F) }
    }

    #[inline]
    pub fn uniform(&self, sweep: u64, site: u64) -> f64 {
        draw_uniform(self.key, sweep, site)
    }

    /// Draws reserved for the initial configuration (disjoint from every sweep index).
    #[inline]
    pub fn initial_bit(&self, site: u64) -> bool {
        draw_u64(self.key, u64::MAX, site) >> 63 == 1
    }
}

/// Stable 64-bit FNV-1a hash, used to derive replica seeds from names.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Seed for one replica of an experiment: `seed_base ⊕ hash(name, n, replica)`.
///
/// Adding sizes or replicas never changes the seeds of existing ones.
pub fn replica_seed(seed_base: u64, experiment: &str, n: usize, replica: u64) -> u64 {
    let mut key = Vec::with_capacity(experiment.len() + 17);
    key.extend_from_slice(experiment.as_bytes());
    key.push(0);
    key.extend_from_slice(&(n as u64).to_le_bytes());
    key.extend_from_slice(&replica.to_le_bytes());
    seed_base ^ mix64(fnv1a(&key))
}

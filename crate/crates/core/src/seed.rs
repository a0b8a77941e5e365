//! Deterministic seed derivation for replicate and subsystem streams.

/// Derives an independent seed from a master seed and a stream index.
/// SplitMix64 finalizer over the combined words; replicates and pipeline
/// stages get decorrelated streams without shared mutable RNG state.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9e3779b97f4a7c15)
        .wrapping_add(stream.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

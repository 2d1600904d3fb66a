//! Seed derivation shared by every randomized component.
//!
//! All randomness in a run flows from one master seed. Components derive
//! their own stream by hashing a textual label into the seed, so adding a
//! component never perturbs the streams of the others.

/// Derives a component seed from `master` and a component label.
///
/// FNV-1a over the label bytes, mixed with the master seed through a
/// splitmix64 finalizer. Stable across platforms and releases.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET;
    for &b in label.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(master ^ h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

//! Seed derivation.
//!
//! Every random stream in the crate comes from `derive_seed(master, component, coords)`:
//! FNV-1a over the little-endian master seed, the component name bytes and each
//! coordinate, finished with the SplitMix64 mixer. Streams are `ChaCha8Rng`
//! instances seeded with the derived value, so a stream depends only on its
//! coordinates and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, component: &str, coords: &[u64]) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &master.to_le_bytes());
    h = fnv1a(h, component.as_bytes());
    // separator so ("ab", [..]) and ("a", [b..]) cannot collide
    h = fnv1a(h, &[0xff]);
    for c in coords {
        h = fnv1a(h, &c.to_le_bytes());
    }
    splitmix64(h)
}

pub fn rng_from(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(master: u64, component: &str, coords: &[u64]) -> Rng {
    rng_from(derive_seed(master, component, coords))
}

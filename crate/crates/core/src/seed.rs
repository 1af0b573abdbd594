//! Seed derivation.
//!
//! Every random stream in the toolkit is a ChaCha8 generator. Child seeds are
//! derived from a parent seed and a text label (and optionally an index), so a
//! single top-level seed fans out into independent, order-insensitive streams:
//!
//! ```text
//! command seed ─ derive("train") ─ derive("init") / derive("shuffle")
//!              ─ derive("naive") ─ derive_indexed(.., "cell", i)
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Child seed for the stream named `label` under `parent`.
pub fn derive(parent: u64, label: &str) -> u64 {
    splitmix64(splitmix64(parent) ^ fnv1a(label))
}

/// Child seed for the `index`-th member of a family of streams.
pub fn derive_indexed(parent: u64, label: &str, index: u64) -> u64 {
    splitmix64(derive(parent, label) ^ splitmix64(index.wrapping_add(1)))
}

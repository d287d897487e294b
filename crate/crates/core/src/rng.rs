//! Derivation of independent random streams from one master seed.
//!
//! A stream is identified by the master seed plus a path of tags, for example
//! `[Tag::Dataset, n, replicate, attempt]`. The path is folded through the
//! SplitMix64 finalizer:
//!
//! ```text
//! h0 = mix(master)
//! h_{k+1} = mix(h_k ^ mix(tag_k + 0x9E3779B97F4A7C15))
//! ```
//!
//! and the final word seeds a ChaCha8 generator through `seed_from_u64`.
//! Replicate `r` of size `n` therefore never depends on how many other
//! replicates were drawn or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream roles. The discriminant is the first tag of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Tag {
    Coefficients = 1,
    Dataset = 2,
    Imputation = 3,
    Mask = 4,
    Subsample = 5,
    Flip = 6,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed word for the stream at `path` below `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix(master), |h, &tag| mix(h ^ mix(tag.wrapping_add(GOLDEN))))
}

pub fn stream(master: u64, role: Tag, path: &[u64]) -> Stream {
    let seed = derive_seed(derive_seed(master, &[role as u64]), path);
    ChaCha8Rng::seed_from_u64(seed)
}

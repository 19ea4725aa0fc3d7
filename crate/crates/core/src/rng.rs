//! Counter-derived random substreams.
//!
//! Replication `r` of a run seeded with `seed` always draws from
//! `substream(seed, r)`, so results never depend on how replications are
//! scheduled across threads. Work is split into fixed-size chunks whose
//! partial results are merged in index order.

use std::ops::Range;

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

pub type StreamRng = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Replications handled by one unit of parallel work.
pub(crate) const CHUNK: u64 = 2048;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for replication `index` under master seed `seed`.
pub fn substream(seed: u64, index: u64) -> StreamRng {
    let key = splitmix64(seed);
    StreamRng::seed_from_u64(key.wrapping_add(index.wrapping_mul(GOLDEN)))
}

/// Runs `f` over consecutive replication ranges in parallel and returns the
/// per-chunk results in index order.
pub(crate) fn map_chunks<A, F>(n: u64, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(Range<u64>) -> A + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            f(start..(start + CHUNK).min(n))
        })
        .collect()
}

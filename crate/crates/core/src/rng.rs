//! Seeded, splittable random streams.
//!
//! Every replica draws from its own ChaCha8 stream keyed by the run seed, so
//! results depend only on `(seed, domain, index)` and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name of the generator, echoed into output metadata.
pub const ALGORITHM: &str = "ChaCha8 (rand_chacha), stream = domain << 32 | index";

pub type StreamRng = ChaCha8Rng;

/// Stream domains keep independent consumers of one seed apart.
pub mod domain {
    pub const WORDS: u64 = 1;
    pub const LYAPUNOV: u64 = 2;
    pub const INDUCED: u64 = 3;
    pub const CONJUGATE: u64 = 4;
    pub const KIFER_WALK: u64 = 5;
    pub const IDS: u64 = 6;
    pub const GAP: u64 = 7;
    pub const EVENTS: u64 = 8;
    pub const LIPSCHITZ: u64 = 9;
    pub const THOULESS: u64 = 10;
}

pub fn stream(seed: u64, domain: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 32) | (index & 0xffff_ffff));
    rng
}

/// Block `key` of stream `(domain, index)`. Blocks are `2^40` words apart, so
/// consumers drawing fewer words than that never overlap.
pub fn substream(seed: u64, domain: u64, index: u64, key: u64) -> StreamRng {
    let mut rng = stream(seed, domain, index);
    rng.set_word_pos((key as u128) << 40);
    rng
}

/// Maps `f` over `0..count`, in parallel when the `parallel` feature is on.
/// Output order always follows the index.
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draw(mut rng: StreamRng) -> Vec<u64> {
        (0..4).map(|_| rng.random()).collect()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        assert_eq!(draw(stream(7, 1, 0)), draw(stream(7, 1, 0)));
        assert_ne!(draw(stream(7, 1, 0)), draw(stream(7, 1, 1)));
        assert_ne!(draw(stream(7, 1, 0)), draw(stream(7, 2, 0)));
        assert_ne!(draw(stream(7, 1, 0)), draw(stream(8, 1, 0)));
    }

    #[test]
    fn map_indexed_keeps_order() {
        assert_eq!(map_indexed(5, |i| i * i), vec![0, 1, 4, 9, 16]);
    }
}

//! Deterministic, splittable random streams.
//!
//! Every random draw in this crate is a pure function of a [`SampleKey`] and a
//! draw index. That makes every sampled object — a trace, a Bernoulli outcome,
//! an inner verification — reproducible bit-for-bit from its key alone,
//! independent of evaluation order. Streams are split by appending indices to
//! the key's path (e.g. outer sample index, trace position, formula node id,
//! inner sample index), so nested verifications never share draws.

/// Weyl-sequence increment used by SplitMix64; also used here for domain
/// separation so that child-key derivation and draw indexing cannot alias.
const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Distinct constant for the draw-index domain (see [`sample_uniform`]).
const DRAW_SALT: u64 = 0xA076_1D64_78BD_642F;

/// SplitMix64 finalizer: a full-avalanche 64-bit mixer.
#[inline]
fn mix(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    x
}

/// Identifies one random stream: a root seed plus a path of split indices.
///
/// The folded mixer state is cached so deriving a child key and drawing from
/// it are O(1) in the path length.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SampleKey {
    seed: u64,
    stream_path: Vec<u64>,
    state: u64,
}

impl SampleKey {
    /// Root stream for a seed (empty path).
    pub fn new(seed: u64) -> Self {
        SampleKey {
            seed,
            stream_path: Vec::new(),
            state: mix(seed ^ GAMMA),
        }
    }

    /// Child stream obtained by appending `index` to the path.
    pub fn child(&self, index: u64) -> Self {
        let mut stream_path = self.stream_path.clone();
        stream_path.push(index);
        SampleKey {
            seed: self.seed,
            stream_path,
            state: mix(self.state ^ mix(index.wrapping_add(GAMMA))),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_path(&self) -> &[u64] {
        &self.stream_path
    }
}

/// The `draw_index`-th uniform variate in `[0, 1)` of the stream named by
/// `key`. Pure: same `(key, draw_index)` always yields the same value.
pub fn sample_uniform(key: &SampleKey, draw_index: u64) -> f64 {
    let bits = mix(key.state ^ mix(draw_index ^ DRAW_SALT));
    // Take the top 53 bits so the result is uniform on the dyadic grid of
    // f64-representable values in [0, 1).
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential cursor over one stream's draws; sugar for
/// `sample_uniform(key, 0), sample_uniform(key, 1), …`.
#[derive(Clone, Debug)]
pub struct Draws {
    key: SampleKey,
    next: u64,
}

impl Draws {
    pub fn new(key: SampleKey) -> Self {
        Draws { key, next: 0 }
    }

    pub fn next_f64(&mut self) -> f64 {
        let u = sample_uniform(&self.key, self.next);
        self.next += 1;
        u
    }

    /// Number of draws consumed so far.
    pub fn drawn(&self) -> u64 {
        self.next
    }
}

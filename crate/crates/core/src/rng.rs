//! Hierarchical, counter-based random streams.
//!
//! Every variate in a simulation is addressed by a [`SeedPath`]: the master
//! seed plus the coordinates of the work unit that consumes it (scenario,
//! sample-size index, replicate, permutation) and a lane that separates the
//! independent quantities drawn inside one unit (predictor, outcome, hidden
//! predictor, ...). The path is hashed into a ChaCha8 key, so a stream never
//! depends on which thread evaluates it or in what order.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Coordinate value meaning "this level of the hierarchy is not used".
pub const UNUSED: i64 = -1;

/// Independent sub-streams inside one work unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lane {
    Predictor,
    Outcome,
    HiddenPredictor,
    Shuffle,
    /// Free lane for callers outside the fixed roles above.
    Custom(u32),
}

impl Lane {
    fn id(self) -> u64 {
        match self {
            Lane::Predictor => 1,
            Lane::Outcome => 2,
            Lane::HiddenPredictor => 3,
            Lane::Shuffle => 4,
            Lane::Custom(k) => 0x1_0000_0000 | u64::from(k),
        }
    }
}

/// Address of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedPath {
    pub master_seed: u64,
    pub scenario_id: i64,
    pub size_index: i64,
    pub replicate_index: i64,
    pub permutation_index: i64,
}

impl SeedPath {
    /// Root path: every coordinate unused.
    pub const fn new(master_seed: u64) -> Self {
        SeedPath {
            master_seed,
            scenario_id: UNUSED,
            size_index: UNUSED,
            replicate_index: UNUSED,
            permutation_index: UNUSED,
        }
    }

    pub const fn scenario(mut self, id: i64) -> Self {
        self.scenario_id = id;
        self
    }

    pub const fn size(mut self, index: i64) -> Self {
        self.size_index = index;
        self
    }

    pub const fn replicate(mut self, index: i64) -> Self {
        self.replicate_index = index;
        self
    }

    pub const fn permutation(mut self, index: i64) -> Self {
        self.permutation_index = index;
        self
    }

    fn key(&self) -> [u8; 32] {
        let mut h = splitmix64(self.master_seed ^ 0x5EED_5EED_0000_0001);
        for coord in [
            self.scenario_id,
            self.size_index,
            self.replicate_index,
            self.permutation_index,
        ] {
            h = splitmix64(h ^ splitmix64(coord as u64));
        }
        let mut key = [0u8; 32];
        let mut state = h;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        key
    }

    /// Generator for one lane of this path. Equal `(path, lane)` always gives
    /// the same sequence.
    pub fn rng(&self, lane: Lane) -> StreamRng {
        let mut inner = ChaCha8Rng::from_seed(self.key());
        inner.set_stream(lane.id());
        StreamRng { inner }
    }
}

/// SplitMix64 finalizer; a bijection on `u64` with full avalanche.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The generator handed out by [`SeedPath::rng`].
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound` without modulo bias (Lemire's method).
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let mut m = u128::from(self.next_u64()) * u128::from(bound);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(bound);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }
}

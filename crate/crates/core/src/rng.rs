//! Seeded random substreams.
//!
//! Every random consumer in a run owns its own ChaCha8 stream, keyed by the
//! run seed and selected by `(ue_id, purpose)`. ChaCha is counter based, so
//! streams never overlap and changing how many draws one flow makes cannot
//! shift another flow's sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a substream is used for. Part of the stream selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Traffic = 1,
    Channel = 2,
}

/// A per-consumer deterministic random stream.
#[derive(Debug, Clone)]
pub struct Substream {
    inner: ChaCha8Rng,
}

impl Substream {
    pub fn new(seed: u64, ue_id: u32, purpose: Purpose) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(((ue_id as u64) << 8) | purpose as u64);
        Self { inner }
    }

    /// Uniform draw in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a random stream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Purpose {
    /// Random nodes `z_k` of one replication.
    Nodes,
    /// DSMC particle dynamics for one node.
    Particles,
    /// Nodes used to estimate the expectation of the mean-field control.
    ControlNodes,
    /// High-resolution particle runs backing a reference solution.
    Reference,
    /// Synthetic data in verification checks.
    Synthetic,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Nodes => 1,
            Purpose::Particles => 2,
            Purpose::ControlNodes => 3,
            Purpose::Reference => 4,
            Purpose::Synthetic => 5,
        }
    }
}

/// Identifies one stream below a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub replication: u32,
    pub sample: u32,
    pub purpose: Purpose,
}

impl StreamKey {
    pub const fn new(replication: u32, sample: u32, purpose: Purpose) -> Self {
        Self {
            replication,
            sample,
            purpose,
        }
    }
}

/// Master seed plus stream key. Identical specs reproduce identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStreamSpec {
    pub seed: u64,
    pub key: StreamKey,
}

impl RngStreamSpec {
    pub const fn new(seed: u64, key: StreamKey) -> Self {
        Self { seed, key }
    }

    /// ChaCha8 keyed by `(seed, purpose)` on stream `(replication, sample)`.
    pub fn rng(&self) -> ChaCha8Rng {
        let mixed = self
            .seed
            .wrapping_add(self.key.purpose.tag().wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(mixed);
        rng.set_stream((u64::from(self.key.replication) << 32) | u64::from(self.key.sample));
        rng
    }
}

//! Counter-based random numbers keyed by `(seed, round, agent, purpose)`.
//!
//! Every draw is a pure function of its key, so two simulations that share a
//! seed see the same types, retention draws and recruits regardless of the
//! pricing scheme or evaluation order.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

/// What a draw is used for; keeps streams for different decisions apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    InitialType = 1,
    Retention = 2,
    Recruit = 3,
    RecruitId = 4,
    RecruitType = 5,
    Thinning = 6,
    Replicate = 7,
}

/// The splitmix64 output function.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// All draws for one `(seed, round, purpose)`, indexed by agent id.
#[derive(Debug, Clone, Copy)]
pub struct RoundStream {
    key: u64,
}

impl RoundStream {
    pub fn new(seed: u64, round: u64, purpose: Purpose) -> Self {
        Self { key: mix(mix(mix(seed) ^ purpose as u64) ^ round) }
    }

    #[inline]
    pub fn bits(&self, agent: u64) -> u64 {
        self.keyed(token(agent))
    }

    /// Same as `bits` for an agent whose [`token`] is already known.
    #[inline]
    pub fn keyed(&self, token: u64) -> u64 {
        mix(self.key ^ token)
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&self, agent: u64) -> f64 {
        closed_unit(self.bits(agent))
    }

    #[inline]
    pub fn uniform_keyed(&self, token: u64) -> f64 {
        closed_unit(self.keyed(token))
    }

    /// Uniform on `(0, 1)`, safe to feed to a quantile function.
    #[inline]
    pub fn open_uniform(&self, agent: u64) -> f64 {
        open_unit(self.bits(agent))
    }

    #[inline]
    pub fn open_uniform_keyed(&self, token: u64) -> f64 {
        open_unit(self.keyed(token))
    }
}

/// Hashed agent id. Simulations store tokens so each draw costs one mix.
#[inline]
pub fn token(agent: u64) -> u64 {
    mix(agent)
}

#[inline]
fn closed_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * UNIT
}

#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * UNIT
}

/// Seed for replicate `rep` of a run with master seed `seed`.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    RoundStream::new(seed, salt, Purpose::Replicate).bits(0)
}

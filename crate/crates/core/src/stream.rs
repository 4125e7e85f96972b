//! Uniform random streams.
//!
//! Every random quantity in the crate is produced by inverse transform from
//! uniforms on the open interval (0, 1). Callers hand samplers a
//! [`UniformSource`]; the simulation engine uses counter-based [`Substream`]s
//! addressed by `(seed, scenario, role, replication, draw index)` so that a
//! replication's numbers never depend on thread count or scheduling order.
//!
//! Substream derivation: the ChaCha8 key is the little-endian concatenation
//! of `seed`, the FNV-1a hash of the scenario id, the role code and a fixed
//! domain tag; the ChaCha stream id is the replication index; the word
//! position is the draw index (starting at 0 for each replication).

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A supplier of uniforms on (0, 1).
pub trait UniformSource {
    /// Next uniform, or `None` when a finite source runs dry.
    fn next_uniform(&mut self) -> Option<f64>;

    fn draw(&mut self) -> Result<f64> {
        self.next_uniform().ok_or(Error::StreamExhausted)
    }
}

impl<S: UniformSource + ?Sized> UniformSource for &mut S {
    fn next_uniform(&mut self) -> Option<f64> {
        (**self).next_uniform()
    }
}

/// A finite, caller-supplied list of uniforms. Used for replay and tests.
#[derive(Debug, Clone)]
pub struct SliceSource<'a> {
    values: &'a [f64],
    pos: usize,
}

impl<'a> SliceSource<'a> {
    pub fn new(values: &'a [f64]) -> Self {
        Self { values, pos: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl UniformSource for SliceSource<'_> {
    fn next_uniform(&mut self) -> Option<f64> {
        let u = self.values.get(self.pos).copied();
        if u.is_some() {
            self.pos += 1;
        }
        u
    }
}

/// The purpose a substream is used for. Distinct roles never share uniforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Summands of fixed-length sums.
    Summands,
    /// Claim sizes of the risk model, and summands of random sums.
    Claims,
    /// Inter-arrival times driving the counting process.
    Interarrivals,
    /// Random horizons.
    Horizon,
    /// Replications used to estimate the renewal function.
    LambdaCache,
    /// Sequences used by the dominating-coefficient estimator.
    Dominating,
    /// Companion draws for conditional estimators in diagnostics.
    Diagnostics,
}

impl Role {
    pub const ALL: [Role; 7] = [
        Role::Summands,
        Role::Claims,
        Role::Interarrivals,
        Role::Horizon,
        Role::LambdaCache,
        Role::Dominating,
        Role::Diagnostics,
    ];

    pub fn code(self) -> u64 {
        match self {
            Role::Summands => 1,
            Role::Claims => 2,
            Role::Interarrivals => 3,
            Role::Horizon => 4,
            Role::LambdaCache => 5,
            Role::Dominating => 6,
            Role::Diagnostics => 7,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Summands => "summands",
            Role::Claims => "claims",
            Role::Interarrivals => "interarrivals",
            Role::Horizon => "horizon",
            Role::LambdaCache => "lambda_cache",
            Role::Dominating => "dominating",
            Role::Diagnostics => "diagnostics",
        }
    }
}

const DOMAIN_TAG: u64 = 0x776f_646c_6162_0001; // "wodlab" + version

/// 64-bit FNV-1a. Stable across platforms and compiler versions.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Root of all substreams of one scenario run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub scenario: u64,
}

impl StreamKey {
    pub fn new(seed: u64, scenario_id: &str) -> Self {
        Self {
            seed,
            scenario: fnv1a64(scenario_id.as_bytes()),
        }
    }

    /// Key for ad-hoc use (tests, benchmarks) without a scenario id.
    pub fn from_seed(seed: u64) -> Self {
        Self { seed, scenario: 0 }
    }

    pub fn substream(&self, role: Role, replication: u64) -> Substream {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.scenario.to_le_bytes());
        key[16..24].copy_from_slice(&role.code().to_le_bytes());
        key[24..32].copy_from_slice(&DOMAIN_TAG.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(replication);
        Substream { rng }
    }
}

/// An unbounded counter-based stream of uniforms.
#[derive(Debug, Clone)]
pub struct Substream {
    rng: ChaCha8Rng,
}

impl Substream {
    /// Number of 32-bit words consumed so far (the draw counter).
    pub fn word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }
}

/// Maps 64 random bits to the open interval (0, 1): the midpoints of a
/// 2^-52 lattice, all exactly representable.
#[inline]
pub fn bits_to_open01(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

impl UniformSource for Substream {
    #[inline]
    fn next_uniform(&mut self) -> Option<f64> {
        Some(bits_to_open01(self.rng.next_u64()))
    }
}

//! Probability primitives: Poisson tails and their inverse, lattice load
//! distributions, and exact / Monte Carlo overflow oracles for bins of
//! scaled-Bernoulli items.

mod lattice;
mod overflow;
mod poisson;

pub use lattice::grid_steps;
pub use lattice::{LatticeDist, LoadLattice, SparseLattice};
pub use overflow::{
    overflow_auto, overflow_exact, overflow_mc, EstimateMethod, OverflowEstimate, EXACT_ENUM_LIMIT,
    MC_DEFAULT_TRIALS,
};
pub use poisson::{inv_poisson_cdf, ln_odds, poisson_gt, poisson_le, POISSON_RATE_LIMIT};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack applied when comparing a bin load against capacity: loads within
/// `CAPACITY_TOL` of 1 count as fitting.
pub const CAPACITY_TOL: f64 = 1e-12;

/// One scaled-Bernoulli item: load `s` with probability `p`, zero otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawItem")]
pub struct Item {
    p: f64,
    s: f64,
}

#[derive(Deserialize)]
struct RawItem {
    p: f64,
    s: f64,
}

impl TryFrom<RawItem> for Item {
    type Error = Error;

    fn try_from(raw: RawItem) -> Result<Self> {
        Item::new(raw.p, raw.s)
    }
}

impl Item {
    pub fn new(p: f64, s: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::domain(format!("probability {p} not in (0, 1]")));
        }
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::domain(format!("size {s} not in (0, 1]")));
        }
        Ok(Item { p, s })
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Expected load `p * s`.
    #[inline]
    pub fn mean(&self) -> f64 {
        self.p * self.s
    }
}

/// The crate-wide seedable generator. ChaCha8 gives identical streams on
/// every platform for a given seed.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
